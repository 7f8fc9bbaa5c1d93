#pragma once

// Dense column-major binary128 matrices with an explicit leading dimension.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "qgemm/quadfp.hpp"

namespace qgemm {

using index_t = std::int64_t;

/// Mirrors the first character of the BLAS transa/transb arguments.
enum class Transpose { NoTranspose, Transpose };

/// 'N'/'n' or 'T'/'t'; anything else (including the conjugate 'C') is rejected.
std::optional<Transpose> parse_transpose(char flag);
char transpose_char(Transpose t);

/// Element (i, j) lives at offset i + j * ld.
class Matrix {
 public:
  Matrix() = default;
  Matrix(index_t rows, index_t cols, index_t ld, QuadFloat fill = quad::zero);
  Matrix(index_t rows, index_t cols) : Matrix(rows, cols, rows) {}

  static Matrix identity(index_t n);

  index_t rows() const { return rows_; }
  index_t cols() const { return cols_; }
  index_t ld() const { return ld_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  QuadFloat& operator()(index_t i, index_t j) { return data_[static_cast<std::size_t>(i + j * ld_)]; }
  QuadFloat operator()(index_t i, index_t j) const { return data_[static_cast<std::size_t>(i + j * ld_)]; }

  /// Whole allocation including padding rows, ld * cols words.
  std::span<QuadFloat> storage() { return data_; }
  std::span<const QuadFloat> storage() const { return data_; }

 private:
  index_t rows_ = 0;
  index_t cols_ = 0;
  index_t ld_ = 0;
  std::vector<QuadFloat> data_;
};

/// Uniform [0, 1) entries with a full 113-bit significand: MT19937-64 seeded
/// with `seed`, two draws per element (x1, x2), value
/// ((x1 * 2^64 + x2) >> 15) * 2^-113, exact. Logical elements are filled in
/// column-major order; padding rows are zero and consume no draws.
Matrix random_uniform(index_t rows, index_t cols, index_t ld, std::uint64_t seed);
inline Matrix random_uniform(index_t rows, index_t cols, std::uint64_t seed) {
  return random_uniform(rows, cols, rows, seed);
}

/// Read-only accessor over a matrix or its transpose; no data is copied.
class MatrixView {
 public:
  MatrixView(const Matrix& m, Transpose t) : m_(&m), t_(t) {}
  index_t rows() const { return t_ == Transpose::NoTranspose ? m_->rows() : m_->cols(); }
  index_t cols() const { return t_ == Transpose::NoTranspose ? m_->cols() : m_->rows(); }
  QuadFloat operator()(index_t i, index_t j) const {
    return t_ == Transpose::NoTranspose ? (*m_)(i, j) : (*m_)(j, i);
  }

 private:
  const Matrix* m_;
  Transpose t_;
};

inline MatrixView view(const Matrix& m, Transpose t = Transpose::NoTranspose) { return MatrixView(m, t); }

/// Packed (ld == rows) copy of a view.
Matrix materialize(const MatrixView& v);

/// Packed copy of a rows x cols matrix read from raw column-major storage.
Matrix gather(std::span<const QuadFloat> storage, index_t rows, index_t cols, index_t ld);

/// True when all logical elements have identical bit patterns (padding ignored).
bool bit_equal(const Matrix& a, const Matrix& b);

/// FNV-1a over the little-endian words of the logical elements, column-major,
/// preceded by the shape.
std::uint64_t digest(const Matrix& m);

// "QMAT1" binary format: 24-byte little-endian header (magic "QMAT1\0",
// u32 rows, u32 cols, u32 ld, u32 reserved) then ld * cols 16-byte words.
void write_qmat(std::ostream& out, const Matrix& m);
Matrix read_qmat(std::istream& in);

// Text format: "rows cols" header line, then one hex-float per line in
// column-major order (logical elements only).
void write_text(std::ostream& out, const Matrix& m);
Matrix read_text(std::istream& in);

/// Dispatches on extension: ".qmat" binary, anything else text.
void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

}  // namespace qgemm
