#include "acceptance/criteria.hpp"

#include <gmpxx.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <unistd.h>

#include "bench.hpp"
#include "config.hpp"
#include "oracle/operands.hpp"
#include "oracle/oracle.hpp"
#include "qgemm/dispatch.hpp"
#include "qgemm/errors.hpp"
#include "qgemm/lu.hpp"
#include "qgemm/perfmodel.hpp"
#include "qgemm/rgemm.hpp"

namespace qgemm::acceptance {
namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Outcome timed(int id, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.passed = false;
    o.detail = std::string("exception: ") + e.what();
  }
  o.id = id;
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return o;
}

ArrayConfig grid(index_t pr, index_t pc, index_t mt, double f = 200.0, MaddMode mode = MaddMode::TwoRoundings) {
  ArrayConfig c;
  c.p_r = pr;
  c.p_c = pc;
  c.m_tile = mt;
  c.f_mhz = f;
  c.madd_mode = mode;
  return c;
}

// Halfway cases: exact sums and products that land on a tie.
std::vector<std::pair<QuadFloat, QuadFloat>> tie_pairs() {
  std::vector<std::pair<QuadFloat, QuadFloat>> out;
  const QuadFloat half_ulp = encode(false, 0x3FFF - 113, 0);
  const QuadFloat three = encode(false, 0x4000, u128{1} << 111);
  for (u128 f = 0; f < 100; ++f) {
    out.push_back({encode(false, 0x3FFF, f), half_ulp});                 // a + ulp/2
    out.push_back({encode(true, 0x3FFF, f), qneg(half_ulp)});
    out.push_back({three, encode(false, 0x3FFF, 2 * f + 1)});            // 3 * (1 + odd ulp)
    out.push_back({encode(false, 0, (2 * f + 1) << 8), encode(false, 0x3FFF - 9, 0)});  // subnormal halving
  }
  return out;
}

struct OpCounts {
  long pairs = 0;
  long mismatches = 0;
  std::string first;
};

void check_all(QuadFloat a, QuadFloat b, QuadFloat c, OpCounts (&counts)[4]) {
  const QuadFloat got[4] = {qadd(a, b), qmul(a, b), qdiv(a, b), qmadd(a, b, c, MaddMode::Fused)};
  const QuadFloat want[4] = {oracle::add(a, b), oracle::mul(a, b), oracle::div(a, b), oracle::fma(a, b, c)};
  static const char* kNames[4] = {"add", "mul", "div", "fma"};
  for (int op = 0; op < 4; ++op) {
    ++counts[op].pairs;
    if (!got[op].same_bits(want[op])) {
      if (counts[op].mismatches++ == 0)
        counts[op].first = std::string(kNames[op]) + "(" + format_hexfloat(a) + ", " + format_hexfloat(b) + ")";
    }
  }
}

}  // namespace

Outcome soft_float_conformance(const Context& ctx) {
  return timed(1, [&] {
    const long random_pairs = ctx.depth == Depth::Full ? 100000 : 10000;
    OpCounts counts[4];
    testkit::OperandSource src(20240611);
    for (long i = 0; i < random_pairs; ++i) {
      const auto [a, b] = src.pair();
      check_all(a, b, src.pair().first, counts);
    }
    long directed = 0;
    const auto dv = testkit::directed_values();
    for (QuadFloat a : dv)
      for (QuadFloat b : dv) {
        check_all(a, b, dv[static_cast<std::size_t>(directed % static_cast<long>(dv.size()))], counts);
        ++directed;
      }
    for (const auto& [a, b] : tie_pairs()) {
      check_all(a, b, qneg(a), counts);
      ++directed;
    }
    // Fused madd over the full directed cube.
    long cube = 0, cube_bad = 0;
    for (QuadFloat a : dv)
      for (QuadFloat b : dv)
        for (QuadFloat c : dv) {
          ++cube;
          cube_bad += qmadd(a, b, c, MaddMode::Fused).same_bits(oracle::fma(a, b, c)) ? 0 : 1;
        }
    Outcome o;
    long bad = cube_bad;
    std::string first;
    for (const auto& c : counts) {
      bad += c.mismatches;
      if (first.empty()) first = c.first;
    }
    o.passed = bad == 0 && random_pairs >= (ctx.depth == Depth::Full ? 100000 : 10000) && directed >= 1000;
    o.detail = std::to_string(random_pairs) + " random pairs per op, " + std::to_string(directed) +
               " directed pairs, " + std::to_string(cube) + " directed fma triples, mismatches " +
               std::to_string(bad) + (first.empty() ? "" : " first " + first);
    return o;
  });
}

Outcome performance_model(const Context&) {
  return timed(2, [] {
    struct Row {
      index_t pr, pc;
      double f, table;
    };
    const Row rows[] = {{2, 2, 236.29, 1.89},  {4, 4, 228.15, 7.30},  {8, 8, 201.28, 25.76}, {8, 8, 259.06, 33.16},
                        {8, 16, 177.14, 45.35}, {8, 8, 411.52, 52.67}, {8, 16, 388.95, 99.57}};
    bool ok = true;
    double worst = 0.0;
    for (const Row& r : rows) {
      const double d = std::abs(f_peak(grid(r.pr, r.pc, 32, r.f)) - r.table);
      worst = std::max(worst, d);
      ok = ok && d <= 0.01;
    }
    const double b512 = b_req(grid(8, 8, 32, 200.0));
    ok = ok && b512 == 51.2;
    const double b1 = b_req(grid(2, 2, 32, 236.29)), b2 = b_req(grid(4, 4, 32, 228.15)),
                 b3 = b_req(grid(8, 8, 32, 201.28));
    ok = ok && std::abs(b1 - 15.1) <= 0.05 && std::abs(b2 - 29.2) <= 0.05 && std::abs(b3 - 51.5) <= 0.05;
    Outcome o;
    o.passed = ok;
    o.detail = "f_peak max deviation " + fixed(worst, 4) + " GFlops over 7 table rows; b_req(8x8,200MHz) = " +
               fixed(b512, 6) + " GB/s; b_req = " + fixed(b1, 3) + " / " + fixed(b2, 3) + " / " + fixed(b3, 3) +
               " GB/s";
    return o;
  });
}

Outcome tiling_invariance(const Context& ctx) {
  return timed(3, [&] {
    const std::vector<ArrayConfig> cfgs = {
        grid(1, 1, 1),   grid(2, 2, 8, 200.0, MaddMode::Fused), grid(4, 4, 32),
        grid(8, 8, 128, 200.0, MaddMode::Fused), grid(3, 5, 7), grid(8, 16, 512), grid(16, 8, 24, 200.0, MaddMode::Fused)};
    const int shapes = ctx.depth == Depth::Full ? 50 : 10;
    std::mt19937_64 gen(314159);
    auto dim = [&] { return static_cast<index_t>(1 + gen() % 96); };
    int cells = 0, bad = 0;
    std::string first;
    for (int s = 0; s < shapes; ++s) {
      const index_t m = dim(), n = dim(), k = dim();
      const Matrix a = random_uniform(m, k, 1000 + static_cast<std::uint64_t>(s));
      const Matrix b = random_uniform(k, n, 2000 + static_cast<std::uint64_t>(s));
      const Matrix ref_two = reference_gemm(a, b, MaddMode::TwoRoundings);
      const Matrix ref_fused = reference_gemm(a, b, MaddMode::Fused);
      for (const ArrayConfig& cfg : cfgs) {
        ++cells;
        const Matrix& ref = cfg.madd_mode == MaddMode::Fused ? ref_fused : ref_two;
        if (!bit_equal(simulate_gemm(cfg, a, b).c_prime, ref)) {
          if (bad++ == 0)
            first = " first " + std::to_string(m) + "x" + std::to_string(n) + "x" + std::to_string(k) + " on " +
                    cfg.describe();
        }
      }
    }
    Outcome o;
    o.passed = bad == 0;
    o.detail = std::to_string(shapes) + " shapes x " + std::to_string(cfgs.size()) + " configs = " +
               std::to_string(cells) + " cells, mismatches " + std::to_string(bad) + first;
    return o;
  });
}

Outcome accuracy_magnitude(const Context& ctx) {
  return timed(4, [&] {
    const std::vector<index_t> sizes =
        ctx.depth == Depth::Full ? std::vector<index_t>{128, 256, 512, 1024} : std::vector<index_t>{32, 64, 128};
    std::vector<double> e;
    double at512 = -1.0;
    std::string values;
    for (index_t n : sizes) {
      const Matrix a = random_uniform(n, n, 1), b = random_uniform(n, n, 2);
      const double v = to_f64(e_l1(reference_gemm(a, b, MaddMode::Fused), reference_gemm(a, b, MaddMode::TwoRoundings)));
      e.push_back(v);
      if (n == 512) at512 = v;
      values += (values.empty() ? "" : ", ") + std::string("n=") + std::to_string(n) + " " + sci(v);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < e.size(); ++i) monotone = monotone && e[i] > e[i - 1];
    const bool in_band = ctx.depth == Depth::Quick || (at512 >= 1e-32 && at512 <= 1e-29);
    Outcome o;
    o.passed = monotone && in_band;
    o.detail = "E_L1(fused, two-roundings): " + values + "; monotone " + (monotone ? "yes" : "no") +
               (ctx.depth == Depth::Full ? std::string("; n=512 in [1e-32, 1e-29] ") + (in_band ? "yes" : "no") : "");
    return o;
  });
}

Outcome bandwidth_ceiling_property(const Context&) {
  return timed(5, [] {
    const BoardSpec arria{"arria10", 34.2};
    const ArrayConfig c2 = grid(2, 2, 32, 236.29), c4 = grid(4, 4, 32, 228.15), c8 = grid(8, 8, 32, 201.28);
    const bool small_at_peak =
        bandwidth_ceiling(c2, arria) == f_peak(c2) && bandwidth_ceiling(c4, arria) == f_peak(c4);
    const double ratio = bandwidth_ceiling(c8, arria) / f_peak(c8);
    Outcome o;
    o.passed = small_at_peak && ratio < 1.0 && std::abs(ratio - 34.2 / 51.5) <= 0.01;
    o.detail = std::string("2x2, 4x4 at peak: ") + (small_at_peak ? "yes" : "no") + "; 8x8 ceiling " +
               fixed(bandwidth_ceiling(c8, arria), 3) + " of " + fixed(f_peak(c8), 3) + " GFlops, ratio " +
               fixed(ratio, 4) + " (target " + fixed(34.2 / 51.5, 4) + ")";
    return o;
  });
}

Outcome lu_correctness(const Context& ctx) {
  return timed(6, [&] {
    const bool full = ctx.depth == Depth::Full;
    const std::vector<index_t> ns = full ? std::vector<index_t>{64, 256, 512} : std::vector<index_t>{64, 128};
    const std::vector<index_t> bs = {32, 108, 128};
    double worst = 0.0;
    bool ok = true;
    for (index_t n : ns) {
      const Matrix a = random_uniform(n, n, 7 + static_cast<std::uint64_t>(n));
      for (index_t b : bs) {
        const double r = to_f64(lu_residual(a, getrf_blocked(a, b)));
        worst = std::max(worst, r);
        ok = ok && r <= 1e-29;
      }
    }
    // Degenerate blocking.
    bool degenerate = true;
    for (index_t n : {16, 64, 128}) {
      const Matrix a = random_uniform(n, n, 50 + static_cast<std::uint64_t>(n));
      const LuFactors u = getrf_unblocked(a);
      for (index_t b : {n, n + 1, index_t{128}}) {
        if (b < n) continue;
        const LuFactors f = getrf_blocked(a, b);
        degenerate = degenerate && f.piv == u.piv && bit_equal(f.lu, u.lu);
      }
    }
    // Exact case with pivoting, dyadic factors.
    Matrix a4(4, 4);
    const double v[4][4] = {{-1, 1.5, 3.25, 1.5}, {4, 2, -1, 3}, {-1.5, -2, 0.25, 4.375}, {2, 0, 1.5, 0.5}};
    for (index_t i = 0; i < 4; ++i)
      for (index_t j = 0; j < 4; ++j) a4(i, j) = from_f64(v[i][j]);
    const oracle::ExactLu exact = oracle::lu(a4);
    const LuFactors f4 = getrf_blocked(a4, 2);
    const bool rational = f4.piv == exact.piv && bit_equal(f4.lu, exact.lu);
    // Flop count.
    bool flops = true;
    for (long n = 1; n <= 1000; ++n) {
      const mpq_class q = mpq_class(2 * n * n * n, 3) - mpq_class(n * n, 2) + mpq_class(5 * n, 6);
      flops = flops && q.get_den() == 1 && mpz_class(std::to_string(lu_flops(n))) == q.get_num();
    }
    Outcome o;
    o.passed = ok && degenerate && rational && flops;
    std::string nlist;
    for (index_t n : ns) nlist += (nlist.empty() ? "" : ",") + std::to_string(n);
    o.detail = "n in {" + nlist + "} x b in {32,108,128}: max residual " + sci(worst) + " (bound 1e-29); b>=n bit-identical " +
               (degenerate ? "yes" : "no") + "; n=4 rational oracle " + (rational ? "exact" : "MISMATCH") +
               "; lu_flops n=1..1000 " + (flops ? "exact" : "MISMATCH");
    return o;
  });
}

Outcome dispatch_rule(const Context&) {
  return timed(7, [] {
    long cells = 0, bad = 0;
    for (std::uint64_t n_min : {1000ull, 1000000ull, 10000000ull})
      for (index_t m = 1; m <= 40; ++m)
        for (index_t n = 1; n <= 40; ++n)
          for (index_t k = 1; k <= 40; ++k) {
            ++cells;
            const bool expect = m == n || static_cast<std::uint64_t>(m * n * k) > n_min;
            bad += should_offload(m, n, k, DispatchPolicy{n_min}) == expect ? 0 : 1;
          }
    const cli::Config cfg = cli::load_config(cli::default_config_path());
    ReplayOptions ro;
    ro.cost.host_gflops = cfg.host_gflops;
    ro.cost.accel = cfg.preset(cfg.accelerator).cfg;
    const auto trace = trace_load(cli::default_trace_path());
    const ReplayReport r1 = replay(trace, DispatchPolicy{}, ro);
    const ReplayReport r2 = replay(trace, DispatchPolicy{}, ro);
    char digest[32];
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(r1.digest()));
    Outcome o;
    o.passed = bad == 0 && r1.digest() == r2.digest() && r1.digest() == kBundledTraceDigest;
    o.detail = std::to_string(cells) + " grid cells, mismatches " + std::to_string(bad) + "; bundled trace " +
               std::to_string(r1.calls) + " calls, " + std::to_string(r1.offload_count) + " offloaded, " +
               std::to_string(r1.square_packed) + " square packed, digest " + digest +
               (r1.digest() == kBundledTraceDigest ? " (golden)" : " (golden mismatch)");
    return o;
  });
}

Outcome end_to_end(const Context& ctx) {
  return timed(8, [&] {
    namespace fs = std::filesystem;
    const fs::path csv_path = fs::temp_directory_path() / ("qgemm_acceptance_lu_" + std::to_string(::getpid()) + ".csv");
    std::string how;
    double selftest_seconds = 0.0;
    bool selftest_ok = false;
    if (!ctx.cli_path.empty()) {
      how = "via " + fs::path(ctx.cli_path).filename().string();
      const std::string lu_cmd = "\"" + ctx.cli_path + "\" bench-lu --n 512 --b 108 --backend systolic --out \"" +
                                 csv_path.string() + "\" > /dev/null";
      if (std::system(lu_cmd.c_str()) != 0) throw std::runtime_error("bench-lu exited with failure");
      const auto t0 = std::chrono::steady_clock::now();
      selftest_ok = std::system(("\"" + ctx.cli_path + "\" selftest > /dev/null").c_str()) == 0;
      selftest_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } else {
      how = "in process";
      const cli::Config cfg = cli::load_config(cli::default_config_path());
      cli::LuOptions lo;
      lo.n_list = {512};
      lo.b_list = {108};
      lo.backend = SystolicBackend{cfg.preset(cfg.default_preset).cfg};
      std::ofstream out(csv_path);
      cli::bench_lu(lo).write(out);
      const auto t0 = std::chrono::steady_clock::now();
      selftest_ok = true;
      for (const Outcome& s : selftest()) selftest_ok = selftest_ok && s.passed;
      selftest_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    std::ifstream in(csv_path);
    std::string why;
    const bool schema_ok = cli::validate_csv(in, cli::kLuSchema, cli::kLuColumns, &why);
    in.clear();
    in.seekg(0);
    std::string line, last;
    while (std::getline(in, line)) last = line;
    std::vector<std::string> cells;
    std::stringstream ls(last);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    const double residual = cells.size() == 6 ? std::strtod(cells[4].c_str(), nullptr) : 1.0;
    const bool systolic = cells.size() == 6 && cells[5].rfind("systolic", 0) == 0;
    std::error_code ec;
    fs::remove(csv_path, ec);
    Outcome o;
    o.passed = schema_ok && residual <= 1e-29 && systolic && selftest_ok && selftest_seconds < 600.0;
    o.detail = "bench-lu n=512 b=108 " + how + ": schema " + (schema_ok ? "valid" : "INVALID " + why) +
               ", residual " + sci(residual) + ", backend " + (cells.size() == 6 ? cells[5] : "?") + "; selftest " +
               (selftest_ok ? "passed" : "FAILED") + " in " + fixed(selftest_seconds, 1) + " s (limit 600 s)";
    return o;
  });
}

Outcome run(int id, const Context& ctx) {
  switch (id) {
    case 1: return soft_float_conformance(ctx);
    case 2: return performance_model(ctx);
    case 3: return tiling_invariance(ctx);
    case 4: return accuracy_magnitude(ctx);
    case 5: return bandwidth_ceiling_property(ctx);
    case 6: return lu_correctness(ctx);
    case 7: return dispatch_rule(ctx);
    case 8: return end_to_end(ctx);
    default: throw std::invalid_argument("no criterion " + std::to_string(id));
  }
}

std::string format(const Outcome& o) {
  return "criterion " + std::to_string(o.id) + ": " + (o.passed ? "PASS" : "FAIL") + " [" + fixed(o.seconds, 1) +
         " s] " + o.detail;
}

std::vector<Outcome> selftest() {
  const Context quick{Depth::Quick, {}};
  return {soft_float_conformance(quick), tiling_invariance(quick), lu_correctness(quick)};
}

}  // namespace qgemm::acceptance
