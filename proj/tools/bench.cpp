#include "bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "qgemm/digest.hpp"
#include "qgemm/errors.hpp"
#include "qgemm/lu.hpp"

namespace qgemm::cli {
namespace {

using clock_type = std::chrono::steady_clock;

constexpr const char* kSingularMarker = "singular@";

std::string fmt(double v, int digits = 9) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string fmt_sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

template <class T>
std::string num(T v) {
  return std::to_string(v);
}

template <class F>
double seconds(F&& f) {
  const auto t0 = clock_type::now();
  f();
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void require_repeats(int repeats) {
  if (repeats < 1) throw ConfigError("--repeats must be at least 1");
}

std::vector<std::string> model_cells(const ArrayConfig& cfg) {
  return {num(cfg.p_r), num(cfg.p_c), num(cfg.m_tile), fmt(cfg.f_mhz)};
}

void append(std::vector<std::string>& row, const std::vector<std::string>& more) {
  row.insert(row.end(), more.begin(), more.end());
}

}  // namespace

Csv::Csv(std::string schema, std::vector<std::string> columns, std::vector<std::string> timing_columns)
    : schema_(std::move(schema)), columns_(std::move(columns)), timing_(columns_.size(), false) {
  for (const auto& t : timing_columns) {
    const auto it = std::find(columns_.begin(), columns_.end(), t);
    if (it == columns_.end()) throw ConfigError("timing column '" + t + "' is not a column");
    timing_[static_cast<std::size_t>(it - columns_.begin())] = true;
  }
}

void Csv::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size())
    throw ConfigError("row has " + std::to_string(cells.size()) + " cells, schema has " + std::to_string(columns_.size()));
  rows_.push_back(std::move(cells));
}

void Csv::write(std::ostream& os) const {
  os << "# " << schema_ << '\n';
  for (std::size_t c = 0; c < columns_.size(); ++c) os << (c ? "," : "") << columns_[c];
  os << '\n';
  for (const auto& r : rows_) {
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
    os << '\n';
  }
}

void Csv::print_table(std::ostream& os) const {
  std::vector<std::size_t> width(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    width[c] = columns_[c].size();
    for (const auto& r : rows_) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      os << (c ? "  " : "") << std::string(width[c] - cells[c].size(), ' ') << cells[c];
    }
    os << '\n';
  };
  line(columns_);
  for (const auto& r : rows_) line(r);
}

std::uint64_t Csv::digest() const {
  Fnv1a h;
  h.update(schema_);
  auto feed = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (timing_[c]) continue;
      h.update(cells[c]);
      h.update(std::string_view("\x1f", 1));
    }
    h.update(std::string_view("\n", 1));
  };
  feed(columns_);
  for (const auto& r : rows_) feed(r);
  return h.value();
}

bool validate_csv(std::istream& in, const std::string& schema, const std::vector<std::string>& columns,
                  std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  std::string line;
  if (!std::getline(in, line) || line != "# " + schema) return fail("schema line is not '# " + schema + "'");
  if (!std::getline(in, line) || split_csv(line) != columns) return fail("header does not match the schema");
  std::size_t n = 2, rows = 0;
  while (std::getline(in, line)) {
    ++n;
    if (split_csv(line).size() != columns.size()) return fail("line " + std::to_string(n) + ": wrong cell count");
    ++rows;
  }
  if (rows == 0) return fail("no data rows");
  return true;
}

index_t scaled(index_t dim, double scale) {
  if (!(scale > 0.0)) throw ConfigError("--scale must be positive");
  return std::max<index_t>(1, static_cast<index_t>(std::llround(static_cast<double>(dim) * scale)));
}

BenchResult run_square(index_t n, const ArrayConfig& cfg, int repeats, std::uint64_t seed) {
  require_repeats(repeats);
  if (n < 1) throw ConfigError("matrix order must be at least 1");
  BenchResult r;
  r.m = r.n = r.k = n;
  r.cfg = cfg;
  const Matrix a = random_uniform(n, n, seed);
  const Matrix b = random_uniform(n, n, seed + 1);
  SimReport sim;
  double total = 0.0;
  for (int i = 0; i < repeats; ++i) total += seconds([&] { sim = simulate_gemm(cfg, a, b); });
  r.wall_t_exec = total / repeats;
  r.model_t_exec = sim.t_exec_model;
  r.gflops_wall = f_perf(n, n, n, r.wall_t_exec);
  r.gflops_model = f_perf(n, n, n, r.model_t_exec);
  r.cycles = sim.cycles;
  r.dram_bytes = sim.dram_bytes;

  const Matrix fused = reference_gemm(a, b, MaddMode::Fused);
  const Matrix two = reference_gemm(a, b, MaddMode::TwoRoundings);
  r.matches_reference = bit_equal(sim.c_prime, cfg.madd_mode == MaddMode::Fused ? fused : two);
  r.e_l1 = to_f64(e_l1(fused, two));
  return r;
}

Csv bench_square(const SquareOptions& o) {
  o.cfg.validate();
  require_repeats(o.repeats);
  Csv csv("qgemm.bench-square/1",
          {"n", "p_r", "p_c", "m_tile", "f_mhz", "repeats", "wall_t_exec", "gflops_wall", "model_t_exec",
           "gflops_model", "cycles", "dram_bytes", "e_l1", "matches_reference"},
          {"wall_t_exec", "gflops_wall"});
  for (index_t n : o.n_list) {
    const BenchResult r = run_square(n, o.cfg, o.repeats, o.seed);
    std::vector<std::string> row = {num(n)};
    append(row, model_cells(o.cfg));
    append(row, {num(o.repeats), fmt(r.wall_t_exec, 6), fmt(r.gflops_wall, 6), fmt(r.model_t_exec),
                 fmt(r.gflops_model), num(r.cycles), num(r.dram_bytes), fmt_sci(r.e_l1),
                 r.matches_reference ? "1" : "0"});
    csv.add_row(std::move(row));
  }
  return csv;
}

namespace {

std::vector<std::string> model_columns() {
  return {"m", "n", "k", "p_r", "p_c", "m_tile", "f_mhz", "passes", "cycles", "dram_bytes", "model_t_exec",
          "gflops_model", "f_peak", "utilization", "b_req_eff_gbs", "gflops_bw_bound"};
}

std::vector<std::string> model_row(const ArrayConfig& cfg, const BoardSpec& board, index_t m, index_t n, index_t k) {
  const ArrayCost cost = array_cost(cfg, m, n, k);
  const double t = static_cast<double>(cost.cycles) / (cfg.f_mhz * 1e6);
  const double gflops = t > 0.0 ? f_perf(m, n, k, t) : 0.0;
  const double peak = f_peak(cfg);
  const double bw_eff = t > 0.0 ? static_cast<double>(cost.dram_bytes) / t / 1e9 : 0.0;
  // Compute time or DRAM time, whichever is longer.
  const double t_bound = std::max(t, static_cast<double>(cost.dram_bytes) / (board.bandwidth_gbs * 1e9));
  std::vector<std::string> row = {num(m), num(n), num(k)};
  append(row, model_cells(cfg));
  append(row, {num(cost.passes), num(cost.cycles), num(cost.dram_bytes), fmt(t), fmt(gflops), fmt(peak),
               fmt(gflops / peak), fmt(bw_eff), fmt(t_bound > 0.0 ? f_perf(m, n, k, t_bound) : 0.0)});
  return row;
}

}  // namespace

Csv bench_tile(const TileOptions& o) {
  o.cfg.validate();
  o.board.validate();
  Csv csv("qgemm.bench-tile/1", model_columns());
  for (const auto& [k0, n0] : o.shapes) {
    const index_t k = scaled(k0, o.scale), n = scaled(n0, o.scale);
    for (index_t mt : o.m_tiles) {
      ArrayConfig cfg = o.cfg;
      cfg.m_tile = mt;
      csv.add_row(model_row(cfg, o.board, k, n, k));
    }
  }
  return csv;
}

Csv bench_rect(const RectOptions& o) {
  o.cfg.validate();
  o.board.validate();
  if (o.vary != 'n' && o.vary != 'k') throw ConfigError("--vary must be 'n' or 'k'");
  std::vector<index_t> values = o.values;
  if (values.empty()) {
    const index_t top = o.vary == 'n' ? 4096 : 16384;
    for (index_t v = 32; v <= top; v *= 2) values.push_back(v);
  }
  Csv csv("qgemm.bench-rect/1", model_columns());
  const index_t m = scaled(o.m, o.scale), fixed = scaled(o.fixed, o.scale);
  for (index_t v0 : values) {
    const index_t v = scaled(v0, o.scale);
    csv.add_row(o.vary == 'n' ? model_row(o.cfg, o.board, m, v, fixed) : model_row(o.cfg, o.board, m, fixed, v));
  }
  return csv;
}

Csv bench_lu(const LuOptions& o) {
  require_repeats(o.repeats);
  Csv csv(kLuSchema, kLuColumns, {"t", "gflops"});
  const std::string backend = describe(o.backend);
  std::vector<index_t> ns = o.n_list;
  if (o.input) {
    if (o.input->rows() != o.input->cols() || o.input->rows() < 1) throw DimensionError("LU input must be square");
    ns = {o.input->rows()};
  }
  for (index_t n : ns) {
    if (n < 1) throw ConfigError("matrix order must be at least 1");
    const Matrix a = o.input ? *o.input : random_uniform(n, n, o.seed);
    for (index_t b : o.b_list) {
      if (b < 1 || b > n) throw ConfigError("block size must satisfy 1 <= b <= n (n=" + num(n) + ", b=" + num(b) + ")");
      LuFactors f;
      double total = 0.0;
      try {
        for (int i = 0; i < o.repeats; ++i) total += seconds([&] { f = getrf_blocked(a, b, o.backend); });
      } catch (const SingularMatrixError& e) {
        csv.add_row({num(n), num(b), "", "", kSingularMarker + num(e.column()), backend});
        continue;
      }
      const double t = total / o.repeats;
      csv.add_row({num(n), num(b), fmt(t, 6), fmt(f_perf_lu(n, t), 6), fmt_sci(to_f64(lu_residual(a, f))), backend});
    }
  }
  return csv;
}

bool has_singular_rows(const Csv& lu_csv) {
  for (const auto& r : lu_csv.rows())
    if (r[4].rfind(kSingularMarker, 0) == 0) return true;
  return false;
}

Csv bench_dispatch(const DispatchOptions& o) {
  Csv csv("qgemm.dispatch-replay/1",
          {"n_min", "calls", "offloaded", "offload_fraction", "square_packed", "host_only_seconds", "modeled_seconds",
           "speedup", "report_digest"});
  for (std::uint64_t n_min : o.n_min_list) {
    if (n_min < 1) throw ConfigError("n_min must be at least 1");
    const ReplayReport r = replay(o.trace, DispatchPolicy{n_min}, o.replay);
    char digest[32];
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(r.digest()));
    csv.add_row({n_min == DispatchPolicy::kNever ? "inf" : num(n_min), num(r.calls), num(r.offload_count),
                 fmt(r.offload_fraction(), 6), num(r.square_packed), fmt(r.host_only_seconds),
                 fmt(r.modeled_seconds), fmt(r.modeled_seconds > 0.0 ? r.host_only_seconds / r.modeled_seconds : 0.0),
                 digest});
  }
  return csv;
}

}  // namespace qgemm::cli
