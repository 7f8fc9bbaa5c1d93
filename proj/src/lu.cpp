#include "qgemm/lu.hpp"

#include <algorithm>
#include <utility>

#include "qgemm/errors.hpp"

namespace qgemm {
namespace {

// Column-major window into a larger matrix.
struct Block {
  QuadFloat* p;
  index_t ld;
  index_t rows, cols;
  QuadFloat& operator()(index_t i, index_t j) const { return p[i + j * ld]; }
  Block sub(index_t i, index_t j, index_t r, index_t c) const { return {p + i + j * ld, ld, r, c}; }
};

Block whole(Matrix& m) { return {m.storage().data(), m.ld(), m.rows(), m.cols()}; }
// Only for operands the solvers read.
Block whole_ro(const Matrix& m) { return {const_cast<QuadFloat*>(m.storage().data()), m.ld(), m.rows(), m.cols()}; }

void swap_rows(Block a, index_t r1, index_t r2) {
  if (r1 == r2) return;
  for (index_t j = 0; j < a.cols; ++j) std::swap(a(r1, j), a(r2, j));
}

// Factors the rows x cols panel in place. Pivot indices are stored relative to
// the panel; col_base only feeds the error message.
void factor_panel(Block a, index_t* piv, Pivoting pivoting, index_t col_base) {
  const index_t steps = std::min(a.rows, a.cols);
  for (index_t j = 0; j < steps; ++j) {
    index_t p = j;
    if (pivoting == Pivoting::Partial) {
      QuadFloat best = qabs(a(j, j));
      for (index_t i = j + 1; i < a.rows; ++i) {
        const QuadFloat v = qabs(a(i, j));
        if (v > best) {
          best = v;
          p = i;
        }
      }
    }
    piv[j] = p;
    if (a(p, j) == quad::zero) throw SingularMatrixError(col_base + j);
    swap_rows(a, j, p);

    const QuadFloat d = a(j, j);
    for (index_t i = j + 1; i < a.rows; ++i) a(i, j) = qdiv(a(i, j), d);
    for (index_t c = j + 1; c < a.cols; ++c) {
      const QuadFloat u = a(j, c);
      for (index_t i = j + 1; i < a.rows; ++i) a(i, c) = qsub(a(i, c), qmul(a(i, j), u));
    }
  }
}

void unit_lower_solve(Block l, Block x) {
  for (index_t c = 0; c < x.cols; ++c)
    for (index_t r = 0; r < x.rows; ++r)
      for (index_t p = 0; p < r; ++p) x(r, c) = qsub(x(r, c), qmul(l(r, p), x(p, c)));
}

void upper_right_solve(Block u, Block x, index_t col_base) {
  for (index_t c = 0; c < x.cols; ++c) {
    const QuadFloat d = u(c, c);
    if (d == quad::zero) throw SingularMatrixError(col_base + c);
    for (index_t i = 0; i < x.rows; ++i) {
      QuadFloat v = x(i, c);
      for (index_t p = 0; p < c; ++p) v = qsub(v, qmul(x(i, p), u(p, c)));
      x(i, c) = qdiv(v, d);
    }
  }
}

void check_square(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("LU needs a square matrix");
}

void trailing_update(Block a21, Block a12, Block a22, const GemmBackend& backend) {
  const index_t m = a22.rows, n = a22.cols, k = a21.cols;
  if (m == 0 || n == 0) return;
  const auto span_of = [](Block b) {
    return std::span<QuadFloat>(b.p, b.rows == 0 || b.cols == 0 ? 0 : static_cast<std::size_t>((b.cols - 1) * b.ld + b.rows));
  };
  rgemm('N', 'N', m, n, k, qneg(quad::one), span_of(a21), a21.ld, span_of(a12), a12.ld, quad::one, span_of(a22),
        a22.ld, backend);
}

}  // namespace

LuFactors getrf_unblocked(Matrix a, Pivoting pivoting) {
  check_square(a);
  LuFactors f;
  f.piv.resize(static_cast<std::size_t>(a.rows()));
  f.block = a.rows();
  factor_panel(whole(a), f.piv.data(), pivoting, 0);
  f.lu = std::move(a);
  return f;
}

void trsm_unit_lower(const Matrix& l11, Matrix& a12) {
  if (l11.rows() != l11.cols() || l11.rows() != a12.rows()) throw DimensionError("trsm_unit_lower: shape mismatch");
  unit_lower_solve(whole_ro(l11), whole(a12));
}

void trsm_upper_right(const Matrix& u11, Matrix& a21) {
  if (u11.rows() != u11.cols() || u11.cols() != a21.cols()) throw DimensionError("trsm_upper_right: shape mismatch");
  upper_right_solve(whole_ro(u11), whole(a21), 0);
}

LuFactors getrf_blocked(Matrix a, index_t b, const GemmBackend& backend, Pivoting pivoting) {
  check_square(a);
  if (b < 1) throw ConfigError("LU block size must be at least 1");
  const index_t n = a.rows();
  if (b >= n) {
    LuFactors f = getrf_unblocked(std::move(a), pivoting);
    f.block = b;
    return f;
  }

  LuFactors f;
  f.block = b;
  f.piv.resize(static_cast<std::size_t>(n));
  const Block all = whole(a);
  for (index_t j = 0; j < n; j += b) {
    const index_t jb = std::min(b, n - j);
    const index_t rest = n - j - jb;
    const Block a11 = all.sub(j, j, jb, jb);
    const Block a12 = all.sub(j, j + jb, jb, rest);
    const Block a21 = all.sub(j + jb, j, rest, jb);
    const Block a22 = all.sub(j + jb, j + jb, rest, rest);

    if (pivoting == Pivoting::Partial) {
      // Tall panel [A11; A21], then the same interchanges on the other columns.
      factor_panel(all.sub(j, j, n - j, jb), f.piv.data() + j, pivoting, j);
      for (index_t i = j; i < j + jb; ++i) {
        f.piv[static_cast<std::size_t>(i)] += j;
        const index_t p = f.piv[static_cast<std::size_t>(i)];
        swap_rows(all.sub(0, 0, n, j), i, p);
        swap_rows(all.sub(0, j + jb, n, rest), i, p);
      }
    } else {
      factor_panel(a11, f.piv.data() + j, pivoting, j);
      for (index_t i = j; i < j + jb; ++i) f.piv[static_cast<std::size_t>(i)] += j;
      upper_right_solve(a11, a21, j);
    }
    unit_lower_solve(a11, a12);
    trailing_update(a21, a12, a22, backend);
  }
  f.lu = std::move(a);
  return f;
}

Matrix apply_pivots(const Matrix& a, const std::vector<index_t>& piv) {
  if (static_cast<index_t>(piv.size()) > a.rows()) throw DimensionError("more pivots than rows");
  Matrix out = a;
  for (std::size_t i = 0; i < piv.size(); ++i) {
    const index_t p = piv[i];
    if (p < static_cast<index_t>(i) || p >= a.rows()) throw DimensionError("invalid pivot index");
    swap_rows(whole(out), static_cast<index_t>(i), p);
  }
  return out;
}

Matrix unpack_lower(const Matrix& lu) {
  check_square(lu);
  Matrix l(lu.rows(), lu.cols());
  for (index_t j = 0; j < lu.cols(); ++j) {
    l(j, j) = quad::one;
    for (index_t i = j + 1; i < lu.rows(); ++i) l(i, j) = lu(i, j);
  }
  return l;
}

Matrix unpack_upper(const Matrix& lu) {
  check_square(lu);
  Matrix u(lu.rows(), lu.cols());
  for (index_t j = 0; j < lu.cols(); ++j)
    for (index_t i = 0; i <= j; ++i) u(i, j) = lu(i, j);
  return u;
}

QuadFloat lu_residual(const Matrix& a, const LuFactors& f) {
  return e_l1(apply_pivots(a, f.piv), reference_gemm(unpack_lower(f.lu), unpack_upper(f.lu), MaddMode::TwoRoundings));
}

}  // namespace qgemm
