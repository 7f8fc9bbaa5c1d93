#pragma once

// Functional and analytic model of a P_R x P_C systolic GEMM array.
//
// The functional side computes C' = A B with every output element accumulated
// in strictly ascending p order, starting from +0, one multiply-add per step.
// That makes the result independent of the array shape and the memory tile,
// and bit-identical to reference_gemm().
//
// The analytic side is a transparent cost model, not RTL:
//
//   passes  = ceil(m/P_R) * ceil(k/M_Tile) * ceil(n/P_C)
//   cycles  = sum over passes of (depth + P_R + P_C)      feed, compute, fill
//           + ceil(m/P_R) * ceil(n/P_C) * P_R * P_C       drain/store of C'
//
// where depth is the k-extent of the buffered A panel (M_Tile, or less on the
// last chunk), so the compute part alone is ceil(m/P_R) * ceil(n/P_C) * k.
// DRAM traffic in bytes:
//
//   A: N_Byte * m * k * ceil(n / (P_C * M_Tile))
//   B: N_Byte * k * n * ceil(m / (P_R * M_Tile))
//   C: N_Byte * m * n
//
// With M_Tile = 1 this streams P_R + P_C words per compute cycle, the
// unbuffered bandwidth requirement.

#include <cstdint>
#include <string>
#include <vector>

#include "qgemm/matrix.hpp"
#include "qgemm/quadfp.hpp"

namespace qgemm {

struct ArrayConfig {
  index_t p_r = 1;
  index_t p_c = 1;
  index_t m_tile = 32;
  double f_mhz = 200.0;
  int n_byte = 16;
  MaddMode madd_mode = MaddMode::TwoRoundings;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
  std::string describe() const;
};

/// One scheduled pass: an A panel of `rows` x `depth` held in the memory tile,
/// streamed against a `depth` x `cols` slice of B.
struct TilePass {
  index_t row0, rows;
  index_t k0, depth;
  index_t col0, cols;
};

/// Row panels outermost, then k chunks, then B column panels. Covers every
/// (i, j, p) of the m x n x k product exactly once.
std::vector<TilePass> tile_schedule(const ArrayConfig& cfg, index_t m, index_t n, index_t k);

struct ArrayCost {
  std::uint64_t passes = 0;
  std::uint64_t cycles = 0;
  std::uint64_t dram_bytes = 0;
};

/// Closed-form evaluation of the cost model; does no arithmetic on matrices.
ArrayCost array_cost(const ArrayConfig& cfg, index_t m, index_t n, index_t k);

struct SimReport {
  Matrix c_prime;
  std::uint64_t passes = 0;
  std::uint64_t cycles = 0;
  std::uint64_t dram_bytes = 0;
  double t_exec_model = 0.0;          ///< seconds, cycles / (f_mhz * 1e6)
  double achieved_gflops_model = 0.0; ///< 2mnk / (t_exec_model * 1e9)
};

SimReport simulate_gemm(const ArrayConfig& cfg, const Matrix& a, const Matrix& b);

/// Canonical triple loop, ascending p per output element, from +0.
Matrix reference_gemm(const Matrix& a, const Matrix& b, MaddMode mode);

}  // namespace qgemm
