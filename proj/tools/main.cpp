#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "acceptance/criteria.hpp"
#include "bench.hpp"
#include "config.hpp"
#include "qgemm/dispatch.hpp"
#include "qgemm/errors.hpp"
#include "qgemm/matrix.hpp"
#include "qgemm/rgemm.hpp"

namespace {

using namespace qgemm;
using namespace qgemm::cli;

constexpr int kOk = 0;
constexpr int kArgumentError = 1;
constexpr int kNumericalError = 2;

struct Common {
  std::string config_path;
  std::uint64_t seed = 1;
  double scale = 1.0;
  std::string out;
  int repeats = 0;  // 0: verb default
};

Config load(const Common& c) {
  return load_config(c.config_path.empty() ? default_config_path() : std::filesystem::path(c.config_path));
}

MaddMode parse_mode(const std::string& s) {
  if (s == "two-roundings" || s == "two") return MaddMode::TwoRoundings;
  if (s == "fused") return MaddMode::Fused;
  throw ConfigError("--mode must be 'two-roundings' or 'fused'");
}

QuadFloat parse_scalar(const std::string& s, const char* name) {
  try {
    return parse_hexfloat(s);
  } catch (const ParseError&) {
  }
  // Decimal input goes through binary64.
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ConfigError(std::string("bad value for ") + name + ": '" + s + "'");
  return from_f64(d);
}

std::uint64_t parse_n_min(const std::string& s) {
  if (s == "inf" || s == "infinity") return DispatchPolicy::kNever;
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !(d >= 1.0) || d != std::floor(d) || d >= 1.8e19)
    throw ConfigError("bad n_min '" + s + "' (positive integer or 'inf')");
  return static_cast<std::uint64_t>(d);
}

Transpose parse_flag(const std::string& s, const char* name) {
  const auto t = s.size() == 1 ? parse_transpose(s[0]) : std::nullopt;
  if (!t) throw ConfigError(std::string(name) + " must be N or T");
  return *t;
}

ArrayConfig preset_cfg(const Config& cfg, const std::string& preset, const std::string& mode) {
  ArrayConfig a = cfg.preset(preset.empty() ? cfg.default_preset : preset).cfg;
  if (!mode.empty()) a.madd_mode = parse_mode(mode);
  return a;
}

const BoardSpec& preset_board(const Config& cfg, const std::string& preset) {
  return cfg.board_of(cfg.preset(preset.empty() ? cfg.default_preset : preset));
}

GemmBackend make_backend(const Config& cfg, const std::string& kind, const std::string& preset, const std::string& mode) {
  if (kind == "reference") return ReferenceBackend{mode.empty() ? MaddMode::TwoRoundings : parse_mode(mode)};
  if (kind == "systolic") return SystolicBackend{preset_cfg(cfg, preset, mode)};
  throw ConfigError("--backend must be 'reference' or 'systolic'");
}

std::vector<index_t> scale_all(const std::vector<index_t>& v, double scale) {
  std::vector<index_t> out;
  for (index_t x : v) out.push_back(scaled(x, scale));
  return out;
}

void emit(const Csv& csv, const Common& c) {
  csv.print_table(std::cout);
  std::printf("digest (non-timing columns): %016llx\n", static_cast<unsigned long long>(csv.digest()));
  if (!c.out.empty()) {
    std::ofstream f(c.out);
    if (!f) throw ConfigError("cannot write " + c.out);
    csv.write(f);
  }
}

void warn_desk_scale(const std::vector<index_t>& ns) {
  for (index_t n : ns)
    if (n > 1024)
      std::fprintf(stderr, "warning: n=%lld runs the soft-float kernel on %.2g multiply-adds; expect a long run\n",
                   static_cast<long long>(n), static_cast<double>(n) * n * n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary128 GEMM on a modeled systolic array: benchmarks, one-shot GEMM and self tests"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config_path, "JSON config with boards and array presets");
  app.add_option("--seed", common.seed, "seed for random matrices");
  app.add_option("--scale", common.scale, "multiply every problem dimension by this factor");
  app.add_option("--out", common.out, "CSV (bench verbs) or matrix (gemm) output file");
  app.add_option("--repeats", common.repeats, "timed repetitions, mean reported")->check(CLI::PositiveNumber);

  // bench-square
  auto* sq = app.add_subcommand("bench-square", "square GEMM: wall time, model GFlops, fused vs two-rounding E_L1");
  std::vector<index_t> sq_n = {64, 128, 256};
  std::string sq_preset, sq_mode;
  sq->add_option("--n", sq_n, "matrix orders")->delimiter(',');
  sq->add_option("--preset", sq_preset, "array preset from the config");
  sq->add_option("--mode", sq_mode, "multiply-add mode: two-roundings or fused");

  // bench-tile
  auto* tile = app.add_subcommand("bench-tile", "M_Tile sweep on the cost model");
  std::vector<std::string> tile_shapes;
  std::vector<index_t> tile_mt;
  std::string tile_preset;
  tile->add_option("--shape", tile_shapes, "KxN shapes, m = k (default 4096x512,4096x2048,2048x2048,4096x4096)")
      ->delimiter(',');
  tile->add_option("--m-tile", tile_mt, "memory tile depths")->delimiter(',');
  tile->add_option("--preset", tile_preset, "array preset from the config");

  // bench-rect
  auto* rect = app.add_subcommand("bench-rect", "non-square scan on the cost model");
  RectOptions ro;
  std::string rect_vary = "n", rect_preset;
  rect->add_option("--vary", rect_vary, "dimension to scan: n (m, k fixed) or k (m, n fixed)");
  rect->add_option("--m", ro.m, "rows of C");
  rect->add_option("--fixed", ro.fixed, "the other fixed dimension (k when scanning n, n when scanning k)");
  rect->add_option("--values", ro.values, "values of the scanned dimension")->delimiter(',');
  rect->add_option("--preset", rect_preset, "array preset from the config");

  // bench-lu
  auto* lu = app.add_subcommand("bench-lu", "blocked LU: time, GFlops, reconstruction residual");
  std::vector<index_t> lu_n = {128, 256}, lu_b = {32, 108, 128};
  std::string lu_backend = "systolic", lu_preset, lu_mode, lu_input;
  lu->add_option("--n", lu_n, "matrix orders")->delimiter(',');
  lu->add_option("--b", lu_b, "block sizes")->delimiter(',');
  lu->add_option("--backend", lu_backend, "reference or systolic");
  lu->add_option("--preset", lu_preset, "array preset for the systolic backend");
  lu->add_option("--mode", lu_mode, "multiply-add mode: two-roundings or fused");
  lu->add_option("--input", lu_input, "factor this square matrix file instead of random matrices");

  // dispatch-replay
  auto* dr = app.add_subcommand("dispatch-replay", "replay an .rgtrace under the offload rule");
  std::string dr_trace;
  std::vector<std::string> dr_nmin;
  std::string dr_accel;
  bool dr_execute = false;
  dr->add_option("--trace", dr_trace, "trace file (default: bundled synthetic trace)");
  dr->add_option("--n-min", dr_nmin, "thresholds, integers or 'inf'")->delimiter(',');
  dr->add_option("--accel", dr_accel, "preset modeling the accelerator");
  dr->add_flag("--execute", dr_execute, "run every call on random data instead of a dry run");

  // gemm
  auto* gm = app.add_subcommand("gemm", "one-shot C = alpha op(A) op(B) + beta C on matrix files");
  std::string g_a, g_b, g_c, g_ta = "N", g_tb = "N", g_alpha = "1", g_beta = "0", g_backend = "reference", g_preset,
                              g_mode;
  gm->add_option("--a", g_a, "matrix A (.qmat binary or text)")->required();
  gm->add_option("--b", g_b, "matrix B")->required();
  gm->add_option("--c", g_c, "matrix C (required when beta != 0)");
  gm->add_option("--transa", g_ta, "N or T");
  gm->add_option("--transb", g_tb, "N or T");
  gm->add_option("--alpha", g_alpha, "hex float (0x1.8p+1) or decimal read as binary64");
  gm->add_option("--beta", g_beta, "hex float or decimal");
  gm->add_option("--backend", g_backend, "reference or systolic");
  gm->add_option("--preset", g_preset, "array preset for the systolic backend");
  gm->add_option("--mode", g_mode, "multiply-add mode: two-roundings or fused");

  // selftest
  auto* st = app.add_subcommand("selftest", "oracle checks: soft-float, tiling invariance, LU (reduced sizes)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kArgumentError;
  }

  try {
    if (sq->parsed()) {
      const Config cfg = load(common);
      SquareOptions o;
      o.cfg = preset_cfg(cfg, sq_preset, sq_mode);
      o.n_list = scale_all(sq_n, common.scale);
      o.repeats = common.repeats > 0 ? common.repeats : 3;
      o.seed = common.seed;
      warn_desk_scale(o.n_list);
      emit(bench_square(o), common);
    } else if (tile->parsed()) {
      const Config cfg = load(common);
      TileOptions o;
      o.cfg = preset_cfg(cfg, tile_preset, "");
      o.board = preset_board(cfg, tile_preset);
      o.scale = common.scale;
      if (!tile_mt.empty()) o.m_tiles = tile_mt;
      if (!tile_shapes.empty()) {
        o.shapes.clear();
        for (const std::string& s : tile_shapes) {
          const auto x = s.find_first_of("xX");
          if (x == std::string::npos) throw ConfigError("shape '" + s + "' is not KxN");
          o.shapes.emplace_back(std::stoll(s.substr(0, x)), std::stoll(s.substr(x + 1)));
        }
      }
      emit(bench_tile(o), common);
    } else if (rect->parsed()) {
      const Config cfg = load(common);
      if (rect_vary.size() != 1) throw ConfigError("--vary must be 'n' or 'k'");
      ro.vary = rect_vary[0];
      ro.cfg = preset_cfg(cfg, rect_preset, "");
      ro.board = preset_board(cfg, rect_preset);
      ro.scale = common.scale;
      if (rect->count("--fixed") == 0 && ro.vary == 'k') ro.fixed = 4096;
      emit(bench_rect(ro), common);
    } else if (lu->parsed()) {
      const Config cfg = load(common);
      LuOptions o;
      o.n_list = scale_all(lu_n, common.scale);
      o.b_list = lu_b;
      o.backend = make_backend(cfg, lu_backend, lu_preset, lu_mode);
      o.repeats = common.repeats > 0 ? common.repeats : 1;
      o.seed = common.seed;
      if (!lu_input.empty()) o.input = load_matrix(lu_input);
      const Csv csv = bench_lu(o);
      emit(csv, common);
      if (has_singular_rows(csv)) {
        std::fprintf(stderr, "error: singular matrix in at least one row\n");
        return kNumericalError;
      }
    } else if (dr->parsed()) {
      const Config cfg = load(common);
      DispatchOptions o;
      o.trace = trace_load(dr_trace.empty() ? default_trace_path() : std::filesystem::path(dr_trace));
      if (!dr_nmin.empty()) {
        o.n_min_list.clear();
        for (const auto& s : dr_nmin) o.n_min_list.push_back(parse_n_min(s));
      }
      o.replay.execute = dr_execute;
      o.replay.seed = common.seed;
      o.replay.cost.host_gflops = cfg.host_gflops;
      o.replay.cost.accel = cfg.preset(dr_accel.empty() ? cfg.accelerator : dr_accel).cfg;
      o.replay.accel = SystolicBackend{o.replay.cost.accel};
      emit(bench_dispatch(o), common);
    } else if (gm->parsed()) {
      if (common.out.empty()) throw ConfigError("gemm needs --out");
      const Config cfg = load(common);
      const Transpose ta = parse_flag(g_ta, "--transa"), tb = parse_flag(g_tb, "--transb");
      const QuadFloat alpha = parse_scalar(g_alpha, "--alpha"), beta = parse_scalar(g_beta, "--beta");
      const Matrix a = load_matrix(g_a), b = load_matrix(g_b);
      const index_t m = ta == Transpose::NoTranspose ? a.rows() : a.cols();
      const index_t n = tb == Transpose::NoTranspose ? b.cols() : b.rows();
      Matrix c(m, n);
      if (!g_c.empty()) {
        c = load_matrix(g_c);
      } else if (!(beta == quad::zero)) {
        throw ConfigError("--c is required when beta is not zero");
      }
      rgemm(ta, tb, alpha, a, b, beta, c, make_backend(cfg, g_backend, g_preset, g_mode));
      save_matrix(common.out, c);
      std::printf("wrote %lldx%lld matrix to %s (digest %016llx)\n", static_cast<long long>(c.rows()),
                  static_cast<long long>(c.cols()), common.out.c_str(), static_cast<unsigned long long>(digest(c)));
    } else if (st->parsed()) {
      bool ok = true;
      for (const auto& o : acceptance::selftest()) {
        std::printf("%s\n", acceptance::format(o).c_str());
        std::fflush(stdout);
        ok = ok && o.passed;
      }
      return ok ? kOk : kNumericalError;
    }
  } catch (const SingularMatrixError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumericalError;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumericalError;
  } catch (const std::invalid_argument& e) {  // argument, dimension, config and parse errors
    std::fprintf(stderr, "error: %s\n", e.what());
    return kArgumentError;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kArgumentError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kArgumentError;
  }
  return kOk;
}
