#pragma once

#include <span>
#include <string>
#include <variant>

#include "qgemm/matrix.hpp"
#include "qgemm/quadfp.hpp"
#include "qgemm/systolic.hpp"

namespace qgemm {

struct ReferenceBackend {
  MaddMode mode = MaddMode::TwoRoundings;
};

struct SystolicBackend {
  ArrayConfig cfg;
};

using GemmBackend = std::variant<ReferenceBackend, SystolicBackend>;

std::string describe(const GemmBackend& backend);

/// Product of the two operands on the selected kernel, no scaling.
Matrix gemm_kernel(const GemmBackend& backend, const Matrix& a, const Matrix& b);

/// C <- alpha * op(A) * op(B) + beta * C on column-major storage.
///
/// Argument checks follow the reference BLAS and report the 1-based position
/// of the first bad argument (transa 1, transb 2, m 3, n 4, k 5, lda 8,
/// ldb 10, ldc 13). Each element is finished as
/// qadd(qmul(alpha, ab), qmul(beta, c)); beta == 0 overwrites C without
/// reading it, and alpha == 0 or k == 0 skips the kernel.
void rgemm(char transa, char transb, index_t m, index_t n, index_t k, QuadFloat alpha,
           std::span<const QuadFloat> a, index_t lda, std::span<const QuadFloat> b, index_t ldb, QuadFloat beta,
           std::span<QuadFloat> c, index_t ldc, const GemmBackend& backend = ReferenceBackend{});

/// Shapes taken from the matrices; op(A) must be m x k, op(B) k x n, C m x n.
void rgemm(Transpose transa, Transpose transb, QuadFloat alpha, const Matrix& a, const Matrix& b, QuadFloat beta,
           Matrix& c, const GemmBackend& backend = ReferenceBackend{});

/// Mean absolute elementwise difference of two n x n matrices, summed in
/// row-major order and divided by n^2 last.
QuadFloat e_l1(const Matrix& c_f, const Matrix& c_r);

}  // namespace qgemm
