#include <bit>
#include "qgemm/matrix.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "qgemm/digest.hpp"
#include "qgemm/errors.hpp"

namespace qgemm {

std::optional<Transpose> parse_transpose(char flag) {
  switch (flag) {
    case 'N': case 'n': return Transpose::NoTranspose;
    case 'T': case 't': return Transpose::Transpose;
    default: return std::nullopt;
  }
}

char transpose_char(Transpose t) { return t == Transpose::NoTranspose ? 'N' : 'T'; }

Matrix::Matrix(index_t rows, index_t cols, index_t ld, QuadFloat fill) : rows_(rows), cols_(cols), ld_(ld) {
  if (rows < 0 || cols < 0) throw DimensionError("matrix dimensions must be non-negative");
  if (ld < rows) {
    throw DimensionError("leading dimension " + std::to_string(ld) + " is smaller than rows " +
                         std::to_string(rows));
  }
  data_.assign(static_cast<std::size_t>(ld * cols), fill);
}

Matrix Matrix::identity(index_t n) {
  Matrix m(n, n);
  for (index_t i = 0; i < n; ++i) m(i, i) = quad::one;
  return m;
}

namespace {

QuadFloat uniform113(std::mt19937_64& gen) {
  // Two draws, high word first; keep 113 bits and scale by 2^-113. Exact.
  const u128 hi = gen();
  const u128 r = ((hi << 64) | gen()) >> 15;
  if (r == 0) return quad::zero;
  const int top = 127 - (static_cast<std::uint64_t>(r >> 64) != 0 ? std::countl_zero(static_cast<std::uint64_t>(r >> 64))
                                                                   : 64 + std::countl_zero(static_cast<std::uint64_t>(r)));
  const u128 frac = (r << (112 - top)) & ((u128{1} << 112) - 1);
  return encode(false, static_cast<std::uint32_t>(0x3FFF - 113 + top), frac);
}

}  // namespace

Matrix random_uniform(index_t rows, index_t cols, index_t ld, std::uint64_t seed) {
  Matrix m(rows, cols, ld);
  std::mt19937_64 gen(seed);
  for (index_t j = 0; j < cols; ++j) {
    for (index_t i = 0; i < rows; ++i) m(i, j) = uniform113(gen);
  }
  return m;
}

Matrix materialize(const MatrixView& v) {
  Matrix out(v.rows(), v.cols());
  for (index_t j = 0; j < v.cols(); ++j) {
    for (index_t i = 0; i < v.rows(); ++i) out(i, j) = v(i, j);
  }
  return out;
}

Matrix gather(std::span<const QuadFloat> storage, index_t rows, index_t cols, index_t ld) {
  if (rows < 0 || cols < 0 || ld < rows) throw DimensionError("invalid shape for gather");
  if (rows > 0 && cols > 0 && static_cast<index_t>(storage.size()) < ld * (cols - 1) + rows) {
    throw DimensionError("storage too small for the requested shape");
  }
  Matrix out(rows, cols);
  for (index_t j = 0; j < cols; ++j) {
    for (index_t i = 0; i < rows; ++i) out(i, j) = storage[static_cast<std::size_t>(i + j * ld)];
  }
  return out;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (index_t j = 0; j < a.cols(); ++j) {
    for (index_t i = 0; i < a.rows(); ++i) {
      if (!a(i, j).same_bits(b(i, j))) return false;
    }
  }
  return true;
}

std::uint64_t digest(const Matrix& m) {
  Fnv1a h;
  h.update(std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  for (index_t j = 0; j < m.cols(); ++j) {
    for (index_t i = 0; i < m.rows(); ++i) {
      const auto bytes = to_bytes_le(m(i, j));
      h.update(bytes.data(), bytes.size());
    }
  }
  return h.value();
}

namespace {

constexpr std::array<char, 6> kMagic = {'Q', 'M', 'A', 'T', '1', '\0'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                                 static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw FormatError(0, "truncated QMAT1 header");
  return b[0] | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
}

std::uint32_t checked_u32(index_t v, const char* what) {
  if (v < 0 || v > static_cast<index_t>(UINT32_MAX)) throw DimensionError(std::string(what) + " does not fit QMAT1");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_qmat(std::ostream& out, const Matrix& m) {
  out.write(kMagic.data(), kMagic.size());
  // Header is 24 bytes: 6 magic + 2 pad bytes keep the u32 fields aligned.
  out.write("\0\0", 2);
  put_u32(out, checked_u32(m.rows(), "rows"));
  put_u32(out, checked_u32(m.cols(), "cols"));
  put_u32(out, checked_u32(m.ld(), "ld"));
  put_u32(out, 0);
  for (QuadFloat q : m.storage()) {
    const auto bytes = to_bytes_le(q);
    out.write(reinterpret_cast<const char*>(bytes.data()), 16);
  }
  if (!out) throw FormatError(0, "write failed");
}

Matrix read_qmat(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), 8);
  if (!in || std::memcmp(magic.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError(0, "missing QMAT1 magic");
  }
  const index_t rows = get_u32(in), cols = get_u32(in), ld = get_u32(in);
  get_u32(in);
  if (ld < rows) throw FormatError(0, "QMAT1 leading dimension smaller than rows");
  Matrix m(rows, cols, ld);
  for (QuadFloat& q : m.storage()) {
    std::array<std::uint8_t, 16> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), 16);
    if (!in) throw FormatError(0, "truncated QMAT1 payload");
    q = from_bytes_le(bytes);
  }
  return m;
}

void write_text(std::ostream& out, const Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (index_t j = 0; j < m.cols(); ++j) {
    for (index_t i = 0; i < m.rows(); ++i) out << format_hexfloat(m(i, j)) << '\n';
  }
  if (!out) throw FormatError(0, "write failed");
}

Matrix read_text(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  if (!next_line()) throw FormatError(1, "missing 'rows cols' header");
  std::istringstream header(line);
  index_t rows = -1, cols = -1;
  if (!(header >> rows >> cols) || rows < 0 || cols < 0) throw FormatError(lineno, "bad 'rows cols' header");
  Matrix m(rows, cols);
  for (index_t j = 0; j < cols; ++j) {
    for (index_t i = 0; i < rows; ++i) {
      if (!next_line()) throw FormatError(lineno + 1, "unexpected end of matrix data");
      try {
        m(i, j) = parse_hexfloat(line);
      } catch (const ParseError& e) {
        throw FormatError(lineno, e.what());
      }
    }
  }
  return m;
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  const bool binary = path.extension() == ".qmat";
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw FormatError(0, "cannot open " + path.string() + " for writing");
  if (binary) write_qmat(out, m);
  else write_text(out, m);
}

Matrix load_matrix(const std::filesystem::path& path) {
  const bool binary = path.extension() == ".qmat";
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw FormatError(0, "cannot open " + path.string());
  return binary ? read_qmat(in) : read_text(in);
}

}  // namespace qgemm
