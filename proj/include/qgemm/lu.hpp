#pragma once

#include <vector>

#include "qgemm/matrix.hpp"
#include "qgemm/rgemm.hpp"

namespace qgemm {

enum class Pivoting { Partial, None };

struct LuFactors {
  Matrix lu;                 ///< unit-lower L below the diagonal, U on and above
  std::vector<index_t> piv;  ///< row i was swapped with row piv[i] at step i
  index_t block = 0;
};

inline constexpr index_t kDefaultLuBlock = 108;

/// Right-looking elimination with rank-1 updates. Partial pivoting picks the
/// largest magnitude, ties to the smallest row. Throws SingularMatrixError on
/// an exactly zero pivot.
LuFactors getrf_unblocked(Matrix a, Pivoting pivoting = Pivoting::Partial);

/// a12 <- L11^-1 a12, unit diagonal assumed, forward substitution.
void trsm_unit_lower(const Matrix& l11, Matrix& a12);

/// a21 <- a21 U11^-1, column by column. Throws SingularMatrixError on a zero
/// diagonal entry.
void trsm_upper_right(const Matrix& u11, Matrix& a21);

/// Blocked factorization; the trailing update is rgemm(-1, L21, U12, 1, A22)
/// on the given backend. With b >= n the result equals getrf_unblocked.
LuFactors getrf_blocked(Matrix a, index_t b = kDefaultLuBlock, const GemmBackend& backend = ReferenceBackend{},
                        Pivoting pivoting = Pivoting::Partial);

/// Row interchanges of `piv` applied to a copy of `a`, in order.
Matrix apply_pivots(const Matrix& a, const std::vector<index_t>& piv);
Matrix unpack_lower(const Matrix& lu);
Matrix unpack_upper(const Matrix& lu);

/// e_l1(P A, L U).
QuadFloat lu_residual(const Matrix& a, const LuFactors& f);

}  // namespace qgemm
