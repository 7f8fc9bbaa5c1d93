#include "qgemm/dispatch.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "qgemm/digest.hpp"
#include "qgemm/errors.hpp"

namespace qgemm {
namespace {

using u128 = unsigned __int128;

index_t rows_of_a(const GemmCallRecord& r) { return r.transa == Transpose::NoTranspose ? r.m : r.k; }
index_t rows_of_b(const GemmCallRecord& r) { return r.transb == Transpose::NoTranspose ? r.k : r.n; }

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

index_t parse_dim(const std::string& s, std::size_t line_no, const char* name) {
  index_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw FormatError(line_no, std::string("bad integer for ") + name + ": '" + s + "'");
  return v;
}

Transpose parse_flag(const std::string& s, std::size_t line_no, const char* name) {
  const auto t = s.size() == 1 ? parse_transpose(s[0]) : std::nullopt;
  if (!t) throw FormatError(line_no, std::string("bad transpose flag for ") + name + ": '" + s + "'");
  return *t;
}

QuadFloat parse_scalar(const std::string& s, std::size_t line_no, const char* name) {
  try {
    return parse_hexfloat(s);
  } catch (const ParseError&) {
    throw FormatError(line_no, std::string("bad value for ") + name + ": '" + s + "'");
  }
}

std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

void GemmCallRecord::validate() const {
  int info = 0;
  if (m < 0) info = 3;
  else if (n < 0) info = 4;
  else if (k < 0) info = 5;
  else if (lda < std::max<index_t>(1, rows_of_a(*this))) info = 8;
  else if (ldb < std::max<index_t>(1, rows_of_b(*this))) info = 10;
  else if (ldc < std::max<index_t>(1, m)) info = 13;
  if (info != 0) throw ArgumentError(info, "RGEMM");
}

bool GemmCallRecord::square_packed() const { return n == m && m == k && k == lda && lda == ldb && ldb == ldc; }

bool GemmCallRecord::same_call(const GemmCallRecord& o) const {
  return transa == o.transa && transb == o.transb && m == o.m && n == o.n && k == o.k && alpha.same_bits(o.alpha) &&
         lda == o.lda && ldb == o.ldb && beta.same_bits(o.beta) && ldc == o.ldc;
}

bool should_offload(index_t m, index_t n, index_t k, const DispatchPolicy& policy) {
  if (m == n) return true;
  if (m <= 0 || n <= 0 || k <= 0 || policy.n_min == DispatchPolicy::kNever) return false;
  const u128 product = static_cast<u128>(m) * static_cast<u128>(n) * static_cast<u128>(k);
  return product > policy.n_min;
}

bool should_offload(const GemmCallRecord& rec, const DispatchPolicy& policy) {
  return should_offload(rec.m, rec.n, rec.k, policy);
}

std::string format_record(const GemmCallRecord& r) {
  std::ostringstream os;
  os << transpose_char(r.transa) << '\t' << transpose_char(r.transb) << '\t' << r.m << '\t' << r.n << '\t' << r.k
     << '\t' << format_hexfloat(r.alpha) << '\t' << r.lda << '\t' << r.ldb << '\t' << format_hexfloat(r.beta) << '\t'
     << r.ldc;
  return os.str();
}

GemmCallRecord parse_record(const std::string& line, std::size_t line_no) {
  const auto f = split_tabs(line);
  if (f.size() != 10) throw FormatError(line_no, "expected 10 tab-separated fields, got " + std::to_string(f.size()));
  GemmCallRecord r;
  r.transa = parse_flag(f[0], line_no, "transa");
  r.transb = parse_flag(f[1], line_no, "transb");
  r.m = parse_dim(f[2], line_no, "m");
  r.n = parse_dim(f[3], line_no, "n");
  r.k = parse_dim(f[4], line_no, "k");
  r.alpha = parse_scalar(f[5], line_no, "alpha");
  r.lda = parse_dim(f[6], line_no, "lda");
  r.ldb = parse_dim(f[7], line_no, "ldb");
  r.beta = parse_scalar(f[8], line_no, "beta");
  r.ldc = parse_dim(f[9], line_no, "ldc");
  try {
    r.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(line_no, e.what());
  }
  return r;
}

void trace_write_header(std::ostream& os) { os << kTraceHeader << '\n'; }

void trace_record(std::ostream& os, const GemmCallRecord& rec) { os << format_record(rec) << '\n'; }

std::vector<GemmCallRecord> trace_load(std::istream& is) {
  std::vector<GemmCallRecord> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++line_no;
    line = trim_cr(line);
    if (!header) {
      if (line != kTraceHeader) throw FormatError(line_no, "missing RGTRACE1 header");
      header = true;
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    GemmCallRecord r = parse_record(line, line_no);
    r.ordinal = out.size();
    out.push_back(r);
  }
  return out;
}

std::vector<GemmCallRecord> trace_load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(0, "cannot open trace " + path.string());
  return trace_load(in);
}

void trace_save(const std::filesystem::path& path, const std::vector<GemmCallRecord>& records,
                const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw FormatError(0, "cannot write trace " + path.string());
  trace_write_header(out);
  if (!comment.empty()) {
    std::istringstream lines(comment);
    std::string l;
    while (std::getline(lines, l)) out << "# " << l << '\n';
  }
  for (const auto& r : records) trace_record(out, r);
}

std::vector<GemmCallRecord> synthetic_sdp_trace(std::uint64_t seed, std::size_t calls, std::size_t square_packed) {
  if (square_packed > calls) throw ConfigError("more square calls than calls");
  std::mt19937_64 gen(seed);
  auto pick = [&](index_t lo, index_t hi) { return lo + static_cast<index_t>(gen() % static_cast<std::uint64_t>(hi - lo + 1)); };
  const QuadFloat scalars[] = {quad::one, qneg(quad::one), from_f64(0.5), from_f64(2.0)};

  // Positions of the square packed calls, spread deterministically.
  std::vector<bool> square(calls, false);
  for (std::size_t placed = 0; placed < square_packed;) {
    const auto pos = static_cast<std::size_t>(gen() % calls);
    if (!square[pos]) {
      square[pos] = true;
      ++placed;
    }
  }

  std::vector<GemmCallRecord> out;
  out.reserve(calls);
  for (std::size_t c = 0; c < calls; ++c) {
    GemmCallRecord r;
    r.ordinal = c;
    r.alpha = scalars[gen() % 4];
    r.beta = gen() % 3 == 0 ? quad::zero : quad::one;
    if (square[c]) {
      const index_t s = pick(16, 400);
      r.m = r.n = r.k = r.lda = r.ldb = r.ldc = s;
    } else {
      switch (gen() % 4) {
        case 0:  // square output, inner dimension or storage differs
          r.m = r.n = pick(8, 300);
          r.k = pick(1, 64);
          break;
        case 1:  // tall-skinny constraint panels
          r.m = pick(200, 4000);
          r.n = pick(1, 16);
          r.k = pick(16, 600);
          break;
        case 2:  // wide panels
          r.m = pick(1, 24);
          r.n = pick(100, 2000);
          r.k = pick(16, 400);
          break;
        default:  // small block updates
          r.m = pick(1, 60);
          r.n = pick(1, 60);
          r.k = pick(1, 60);
          break;
      }
      if (r.m == r.n && r.m == r.k) r.k += 1;  // keep the packed count exact
      r.transa = gen() % 5 == 0 ? Transpose::Transpose : Transpose::NoTranspose;
      r.transb = gen() % 5 == 0 ? Transpose::Transpose : Transpose::NoTranspose;
      r.lda = rows_of_a(r) + (gen() % 2 == 0 ? 0 : pick(1, 8));
      r.ldb = rows_of_b(r) + (gen() % 2 == 0 ? 0 : pick(1, 8));
      r.ldc = r.m + (gen() % 2 == 0 ? 0 : pick(1, 8));
    }
    out.push_back(r);
  }
  return out;
}

std::uint64_t ReplayReport::digest() const {
  Fnv1a h;
  std::string bits(offloaded.size(), '0');
  for (std::size_t i = 0; i < offloaded.size(); ++i) bits[i] = offloaded[i] ? '1' : '0';
  h.update(bits);
  char buf[160];
  std::snprintf(buf, sizeof buf, "|%zu|%zu|%zu|%.17g|%.17g|%llx", calls, offload_count, square_packed,
                modeled_seconds, host_only_seconds, static_cast<unsigned long long>(executed_digest));
  h.update(std::string_view(buf));
  return h.value();
}

ReplayReport replay(const std::vector<GemmCallRecord>& trace, const DispatchPolicy& policy,
                    const ReplayOptions& options) {
  ReplayReport rep;
  rep.calls = trace.size();
  rep.offloaded.reserve(trace.size());
  Fnv1a results;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const GemmCallRecord& r = trace[i];
    try {
      r.validate();
    } catch (const ArgumentError& e) {
      throw ReplayError(i, e.argument(), e.what());
    }
    const bool off = should_offload(r, policy);
    rep.offloaded.push_back(off);
    rep.offload_count += off ? 1 : 0;
    rep.square_packed += r.square_packed() ? 1 : 0;
    const double host_t = options.cost.host_seconds(r.m, r.n, r.k);
    rep.host_only_seconds += host_t;
    rep.modeled_seconds += off ? options.cost.accel_seconds(r.m, r.n, r.k) : host_t;

    if (options.execute) {
      const index_t a_cols = r.transa == Transpose::NoTranspose ? r.k : r.m;
      const index_t b_cols = r.transb == Transpose::NoTranspose ? r.n : r.k;
      const std::uint64_t s = options.seed + 3 * i;
      const Matrix a = random_uniform(r.lda, a_cols, r.lda, s);
      const Matrix b = random_uniform(r.ldb, b_cols, r.ldb, s + 1);
      Matrix c = random_uniform(r.ldc, r.n, r.ldc, s + 2);
      try {
        rgemm(transpose_char(r.transa), transpose_char(r.transb), r.m, r.n, r.k, r.alpha, a.storage(), r.lda,
              b.storage(), r.ldb, r.beta, c.storage(), r.ldc, off ? options.accel : options.host);
      } catch (const ArgumentError& e) {
        throw ReplayError(i, e.argument(), e.what());
      }
      const std::uint64_t d = digest(c);
      results.update(reinterpret_cast<const std::uint8_t*>(&d), sizeof d);
    }
  }
  if (options.execute) rep.executed_digest = results.value();
  return rep;
}

}  // namespace qgemm
