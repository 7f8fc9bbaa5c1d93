#include "qgemm/systolic.hpp"

#include <cmath>
#include <sstream>

#include "qgemm/errors.hpp"

namespace qgemm {
namespace {

std::uint64_t ceil_div(index_t a, index_t b) { return static_cast<std::uint64_t>((a + b - 1) / b); }

// Rows of A laid out contiguously: element (i, p) at i * k + p.
std::vector<QuadFloat> pack_rows(const Matrix& a) {
  std::vector<QuadFloat> out(static_cast<std::size_t>(a.rows() * a.cols()));
  for (index_t p = 0; p < a.cols(); ++p) {
    for (index_t i = 0; i < a.rows(); ++i) out[static_cast<std::size_t>(i * a.cols() + p)] = a(i, p);
  }
  return out;
}

inline QuadFloat accumulate(QuadFloat acc, const QuadFloat* a_row, const QuadFloat* b_col, index_t n,
                            MaddMode mode) {
  for (index_t p = 0; p < n; ++p) acc = qmadd(a_row[p], b_col[p], acc, mode);
  return acc;
}

void check_inner(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("inner dimensions disagree: A is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", B is " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

}  // namespace

void ArrayConfig::validate() const {
  if (p_r < 1 || p_c < 1) throw ConfigError("PE grid must be at least 1x1");
  if (m_tile < 1) throw ConfigError("memory tile depth must be at least 1");
  if (!(f_mhz > 0.0) || !std::isfinite(f_mhz)) throw ConfigError("clock frequency must be positive");
  if (n_byte != 16) throw ConfigError("binary128 words are 16 bytes");
}

std::string ArrayConfig::describe() const {
  std::ostringstream os;
  os << p_r << "x" << p_c << " PEs, M_Tile=" << m_tile << ", f=" << f_mhz << " MHz, "
     << (madd_mode == MaddMode::Fused ? "fused" : "two-rounding") << " multiply-add";
  return os.str();
}

std::vector<TilePass> tile_schedule(const ArrayConfig& cfg, index_t m, index_t n, index_t k) {
  cfg.validate();
  if (m < 0 || n < 0 || k < 0) throw DimensionError("negative dimension");
  std::vector<TilePass> passes;
  passes.reserve(ceil_div(m, cfg.p_r) * ceil_div(k, cfg.m_tile) * ceil_div(n, cfg.p_c));
  for (index_t r = 0; r < m; r += cfg.p_r) {
    for (index_t p = 0; p < k; p += cfg.m_tile) {
      for (index_t c = 0; c < n; c += cfg.p_c) {
        passes.push_back({r, std::min(cfg.p_r, m - r), p, std::min(cfg.m_tile, k - p), c, std::min(cfg.p_c, n - c)});
      }
    }
  }
  return passes;
}

ArrayCost array_cost(const ArrayConfig& cfg, index_t m, index_t n, index_t k) {
  cfg.validate();
  if (m < 0 || n < 0 || k < 0) throw DimensionError("negative dimension");
  ArrayCost cost;
  const std::uint64_t row_panels = ceil_div(m, cfg.p_r);
  const std::uint64_t col_panels = ceil_div(n, cfg.p_c);
  const std::uint64_t k_chunks = ceil_div(k, cfg.m_tile);
  const auto pr = static_cast<std::uint64_t>(cfg.p_r), pc = static_cast<std::uint64_t>(cfg.p_c);
  const auto um = static_cast<std::uint64_t>(m), un = static_cast<std::uint64_t>(n), uk = static_cast<std::uint64_t>(k);
  cost.passes = row_panels * k_chunks * col_panels;
  cost.cycles = row_panels * col_panels * uk + cost.passes * (pr + pc) + row_panels * col_panels * pr * pc;
  const auto nb = static_cast<std::uint64_t>(cfg.n_byte);
  const std::uint64_t a_loads = ceil_div(n, cfg.p_c * cfg.m_tile);
  const std::uint64_t b_loads = ceil_div(m, cfg.p_r * cfg.m_tile);
  cost.dram_bytes = nb * um * uk * a_loads + nb * uk * un * b_loads + nb * um * un;
  return cost;
}

SimReport simulate_gemm(const ArrayConfig& cfg, const Matrix& a, const Matrix& b) {
  cfg.validate();
  check_inner(a, b);
  const index_t m = a.rows(), n = b.cols(), k = a.cols();
  SimReport report;
  report.c_prime = Matrix(m, n);
  const std::vector<QuadFloat> a_rows = pack_rows(a);
  const QuadFloat* bdata = b.storage().data();

  // Accumulators persist in c_prime across k chunks; chunks of one output
  // block are visited in ascending k0, so each element sees p = 0, 1, ... k-1.
  for (const TilePass& pass : tile_schedule(cfg, m, n, k)) {
    for (index_t j = pass.col0; j < pass.col0 + pass.cols; ++j) {
      const QuadFloat* b_col = bdata + j * b.ld() + pass.k0;
      for (index_t i = pass.row0; i < pass.row0 + pass.rows; ++i) {
        const QuadFloat* a_row = a_rows.data() + i * k + pass.k0;
        report.c_prime(i, j) = accumulate(report.c_prime(i, j), a_row, b_col, pass.depth, cfg.madd_mode);
      }
    }
  }

  const ArrayCost cost = array_cost(cfg, m, n, k);
  report.passes = cost.passes;
  report.cycles = cost.cycles;
  report.dram_bytes = cost.dram_bytes;
  report.t_exec_model = static_cast<double>(cost.cycles) / (cfg.f_mhz * 1e6);
  if (report.t_exec_model > 0.0) {
    report.achieved_gflops_model =
        2.0 * static_cast<double>(m) * static_cast<double>(n) * static_cast<double>(k) / (report.t_exec_model * 1e9);
  }
  return report;
}

Matrix reference_gemm(const Matrix& a, const Matrix& b, MaddMode mode) {
  check_inner(a, b);
  const index_t m = a.rows(), n = b.cols(), k = a.cols();
  Matrix c(m, n);
  const std::vector<QuadFloat> a_rows = pack_rows(a);
  for (index_t j = 0; j < n; ++j) {
    const QuadFloat* b_col = b.storage().data() + j * b.ld();
    for (index_t i = 0; i < m; ++i) {
      c(i, j) = accumulate(quad::zero, a_rows.data() + i * k, b_col, k, mode);
    }
  }
  return c;
}

}  // namespace qgemm
