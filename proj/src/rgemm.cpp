#include "qgemm/rgemm.hpp"

#include <algorithm>

#include "qgemm/errors.hpp"

namespace qgemm {
namespace {

constexpr const char* kRoutine = "RGEMM";

// Elements a column-major rows x cols block with leading dimension ld spans.
std::size_t extent(index_t rows, index_t cols, index_t ld) {
  if (rows == 0 || cols == 0) return 0;
  return static_cast<std::size_t>((cols - 1) * ld + rows);
}

Matrix operand(std::span<const QuadFloat> s, Transpose t, index_t op_rows, index_t op_cols, index_t ld) {
  if (t == Transpose::NoTranspose) return gather(s, op_rows, op_cols, ld);
  return materialize(view(gather(s, op_cols, op_rows, ld), Transpose::Transpose));
}

template <class Visitor>
auto visit_backend(const GemmBackend& backend, Visitor&& v) {
  return std::visit(std::forward<Visitor>(v), backend);
}

}  // namespace

std::string describe(const GemmBackend& backend) {
  return visit_backend(backend, [](const auto& be) -> std::string {
    using T = std::decay_t<decltype(be)>;
    if constexpr (std::is_same_v<T, ReferenceBackend>) {
      return be.mode == MaddMode::Fused ? "reference-fused" : "reference";
    } else {
      return "systolic-" + std::to_string(be.cfg.p_r) + "x" + std::to_string(be.cfg.p_c);
    }
  });
}

Matrix gemm_kernel(const GemmBackend& backend, const Matrix& a, const Matrix& b) {
  return visit_backend(backend, [&](const auto& be) -> Matrix {
    using T = std::decay_t<decltype(be)>;
    if constexpr (std::is_same_v<T, ReferenceBackend>) {
      return reference_gemm(a, b, be.mode);
    } else {
      return simulate_gemm(be.cfg, a, b).c_prime;
    }
  });
}

void rgemm(char transa, char transb, index_t m, index_t n, index_t k, QuadFloat alpha,
           std::span<const QuadFloat> a, index_t lda, std::span<const QuadFloat> b, index_t ldb, QuadFloat beta,
           std::span<QuadFloat> c, index_t ldc, const GemmBackend& backend) {
  const auto ta = parse_transpose(transa);
  const auto tb = parse_transpose(transb);
  const index_t nrowa = ta == Transpose::NoTranspose ? m : k;
  const index_t ncola = ta == Transpose::NoTranspose ? k : m;
  const index_t nrowb = tb == Transpose::NoTranspose ? k : n;
  const index_t ncolb = tb == Transpose::NoTranspose ? n : k;

  int info = 0;
  if (!ta) info = 1;
  else if (!tb) info = 2;
  else if (m < 0) info = 3;
  else if (n < 0) info = 4;
  else if (k < 0) info = 5;
  else if (lda < std::max<index_t>(1, nrowa)) info = 8;
  else if (ldb < std::max<index_t>(1, nrowb)) info = 10;
  else if (ldc < std::max<index_t>(1, m)) info = 13;
  if (info != 0) throw ArgumentError(info, kRoutine);

  if (c.size() < extent(m, n, ldc)) throw DimensionError("C storage is smaller than ldc * n");
  if (m == 0 || n == 0) return;

  const bool alpha_zero = alpha == quad::zero;
  const bool beta_zero = beta == quad::zero;
  const bool beta_one = beta.same_bits(quad::one);
  auto at = [&](index_t i, index_t j) -> QuadFloat& { return c[static_cast<std::size_t>(i + j * ldc)]; };

  if (alpha_zero || k == 0) {
    if (beta_one) return;
    for (index_t j = 0; j < n; ++j)
      for (index_t i = 0; i < m; ++i) at(i, j) = beta_zero ? quad::zero : qmul(beta, at(i, j));
    return;
  }

  if (a.size() < extent(nrowa, ncola, lda)) throw DimensionError("A storage is smaller than lda * columns");
  if (b.size() < extent(nrowb, ncolb, ldb)) throw DimensionError("B storage is smaller than ldb * columns");

  const Matrix ab = gemm_kernel(backend, operand(a, *ta, m, k, lda), operand(b, *tb, k, n, ldb));
  for (index_t j = 0; j < n; ++j) {
    for (index_t i = 0; i < m; ++i) {
      const QuadFloat scaled = qmul(alpha, ab(i, j));
      at(i, j) = beta_zero ? scaled : qadd(scaled, qmul(beta, at(i, j)));
    }
  }
}

void rgemm(Transpose transa, Transpose transb, QuadFloat alpha, const Matrix& a, const Matrix& b, QuadFloat beta,
           Matrix& c, const GemmBackend& backend) {
  const index_t m = c.rows(), n = c.cols();
  const index_t k = transa == Transpose::NoTranspose ? a.cols() : a.rows();
  const index_t a_m = transa == Transpose::NoTranspose ? a.rows() : a.cols();
  const index_t b_k = transb == Transpose::NoTranspose ? b.rows() : b.cols();
  const index_t b_n = transb == Transpose::NoTranspose ? b.cols() : b.rows();
  if (a_m != m || b_k != k || b_n != n) {
    throw DimensionError("rgemm: op(A) is " + std::to_string(a_m) + "x" + std::to_string(k) + ", op(B) is " +
                         std::to_string(b_k) + "x" + std::to_string(b_n) + ", C is " + std::to_string(m) + "x" +
                         std::to_string(n));
  }
  rgemm(transpose_char(transa), transpose_char(transb), m, n, k, alpha, a.storage(), std::max<index_t>(1, a.ld()),
        b.storage(), std::max<index_t>(1, b.ld()), beta, c.storage(), std::max<index_t>(1, c.ld()), backend);
}

QuadFloat e_l1(const Matrix& c_f, const Matrix& c_r) {
  if (c_f.rows() != c_f.cols() || c_r.rows() != c_r.cols() || c_f.rows() != c_r.rows())
    throw DimensionError("e_l1 needs two square matrices of the same order");
  const index_t n = c_f.rows();
  if (n == 0) throw DimensionError("e_l1 of an empty matrix");
  QuadFloat sum = quad::zero;
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j) sum = qadd(sum, qabs(qsub(c_f(i, j), c_r(i, j))));
  return qdiv(sum, from_f64(static_cast<double>(n) * static_cast<double>(n)));
}

}  // namespace qgemm
