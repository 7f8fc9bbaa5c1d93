#include "qgemm/perfmodel.hpp"

#include <algorithm>
#include <cmath>

#include "qgemm/errors.hpp"

namespace qgemm {

void BoardSpec::validate() const {
  if (!(bandwidth_gbs > 0.0) || !std::isfinite(bandwidth_gbs))
    throw ConfigError("board '" + name + "': bandwidth must be positive");
}

double f_peak(const ArrayConfig& cfg) {
  cfg.validate();
  return 2.0 * static_cast<double>(cfg.p_r) * static_cast<double>(cfg.p_c) * cfg.f_mhz * 1e6 / 1e9;
}

double f_perf(index_t m, index_t n, index_t k, double t_exec_seconds) {
  if (!(t_exec_seconds > 0.0)) throw DomainError("execution time must be positive");
  return 2.0 * static_cast<double>(m) * static_cast<double>(n) * static_cast<double>(k) / (t_exec_seconds * 1e9);
}

double b_req(const ArrayConfig& cfg) {
  cfg.validate();
  return static_cast<double>(cfg.p_r + cfg.p_c) * cfg.f_mhz * 1e6 * cfg.n_byte / 1e9;
}

double bandwidth_ceiling(const ArrayConfig& cfg, const BoardSpec& board) {
  board.validate();
  return f_peak(cfg) * std::min(1.0, board.bandwidth_gbs / b_req(cfg));
}

std::uint64_t lu_flops(std::int64_t n) {
  if (n < 1) throw DomainError("lu_flops needs n >= 1");
  // 6 * count = 4n^3 - 3n^2 + 5n, always divisible by 6. Exact to n ~ 1.6e6.
  const auto u = static_cast<std::uint64_t>(n);
  return (4 * u * u * u - 3 * u * u + 5 * u) / 6;
}

double f_perf_lu(std::int64_t n, double t_exec_seconds) {
  if (!(t_exec_seconds > 0.0)) throw DomainError("execution time must be positive");
  const auto x = static_cast<double>(n);
  return 2.0 * x * x * x / (3.0 * t_exec_seconds * 1e9);
}

double CostModel::host_seconds(index_t m, index_t n, index_t k) const {
  if (!(host_gflops > 0.0)) throw ConfigError("host GFlops must be positive");
  return 2.0 * static_cast<double>(m) * static_cast<double>(n) * static_cast<double>(k) / (host_gflops * 1e9);
}

double CostModel::accel_seconds(index_t m, index_t n, index_t k) const {
  const ArrayCost cost = array_cost(accel, m, n, k);
  double t = static_cast<double>(cost.cycles) / (accel.f_mhz * 1e6);
  if (transfer_gbs > 0.0) t += static_cast<double>(cost.dram_bytes) / (transfer_gbs * 1e9);
  return t;
}

}  // namespace qgemm
