#pragma once

// Closed-form throughput and bandwidth models. GB and GFlops are decimal
// (10^9) units throughout.

#include <cstdint>
#include <string>

#include "qgemm/systolic.hpp"

namespace qgemm {

struct BoardSpec {
  std::string name;
  double bandwidth_gbs = 0.0;

  void validate() const;
};

/// 2 * P_R * P_C * f. One multiply-add per PE per cycle.
double f_peak(const ArrayConfig& cfg);

/// 2mnk / t. Throws DomainError unless t > 0.
double f_perf(index_t m, index_t n, index_t k, double t_exec_seconds);

/// (P_R + P_C) * f * N_Byte, the unbuffered operand stream.
double b_req(const ArrayConfig& cfg);

/// f_peak scaled down by the bandwidth shortfall, if any.
double bandwidth_ceiling(const ArrayConfig& cfg, const BoardSpec& board);

/// Exact flop count of LU without pivoting overheads: 2n^3/3 - n^2/2 + 5n/6.
std::uint64_t lu_flops(std::int64_t n);

/// 2n^3 / (3t), the customary approximation.
double f_perf_lu(std::int64_t n, double t_exec_seconds);

/// Per-call cost model used for dispatch.
struct CostModel {
  double host_gflops = 0.65;
  ArrayConfig accel;
  double transfer_gbs = 0.0;  ///< 0 disables the transfer term

  double host_seconds(index_t m, index_t n, index_t k) const;
  double accel_seconds(index_t m, index_t n, index_t k) const;
};

}  // namespace qgemm
