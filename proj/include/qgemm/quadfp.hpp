#pragma once

// IEEE 754 binary128 arithmetic in software.
//
// All operations round to nearest, ties to even. There are no status flags:
// infinities and NaNs travel as ordinary values. Invalid operations produce
// the canonical quiet NaN (+, exponent all ones, fraction 0x8000...0); when an
// input is already a NaN, the first NaN operand is returned with its quiet bit
// set.

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qgemm {

using u128 = unsigned __int128;

/// Multiply-add rounding behaviour of a processing element.
enum class MaddMode {
  TwoRoundings,  ///< round(round(a*b) + c)
  Fused,         ///< round(a*b + c), single rounding
};

/// One binary128 value held as its raw 128-bit pattern.
class QuadFloat {
 public:
  static constexpr int kFractionBits = 112;
  static constexpr int kExponentBias = 16383;
  static constexpr std::uint32_t kExponentMask = 0x7FFF;

  constexpr QuadFloat() = default;

  static constexpr QuadFloat from_bits(u128 bits) {
    QuadFloat q;
    q.bits_ = bits;
    return q;
  }
  static constexpr QuadFloat from_words(std::uint64_t hi, std::uint64_t lo) {
    return from_bits((u128{hi} << 64) | lo);
  }

  constexpr u128 bits() const { return bits_; }
  constexpr std::uint64_t hi() const { return static_cast<std::uint64_t>(bits_ >> 64); }
  constexpr std::uint64_t lo() const { return static_cast<std::uint64_t>(bits_); }

  constexpr bool sign() const { return (bits_ >> 127) != 0; }
  constexpr std::uint32_t biased_exponent() const {
    return static_cast<std::uint32_t>(bits_ >> kFractionBits) & kExponentMask;
  }
  constexpr u128 fraction() const { return bits_ & ((u128{1} << kFractionBits) - 1); }

  constexpr bool is_nan() const { return biased_exponent() == kExponentMask && fraction() != 0; }
  constexpr bool is_inf() const { return biased_exponent() == kExponentMask && fraction() == 0; }
  constexpr bool is_finite() const { return biased_exponent() != kExponentMask; }
  constexpr bool is_zero() const { return (bits_ << 1) == 0; }
  constexpr bool is_subnormal() const { return biased_exponent() == 0 && fraction() != 0; }

  /// Bitwise identity, unlike operator== which follows IEEE comparison.
  constexpr bool same_bits(QuadFloat other) const { return bits_ == other.bits_; }

 private:
  u128 bits_ = 0;
};

/// Assembles a value from its fields; fraction is truncated to 112 bits.
constexpr QuadFloat encode(bool sign, std::uint32_t biased_exponent, u128 fraction) {
  return QuadFloat::from_bits((u128{sign} << 127) |
                              (u128{biased_exponent & QuadFloat::kExponentMask} << 112) |
                              (fraction & ((u128{1} << 112) - 1)));
}

namespace quad {
inline constexpr QuadFloat zero = QuadFloat::from_bits(0);
inline constexpr QuadFloat neg_zero = encode(true, 0, 0);
inline constexpr QuadFloat one = encode(false, 0x3FFF, 0);
inline constexpr QuadFloat inf = encode(false, 0x7FFF, 0);
inline constexpr QuadFloat canonical_nan = encode(false, 0x7FFF, u128{1} << 111);
inline constexpr QuadFloat max_finite = encode(false, 0x7FFE, ~u128{0});
inline constexpr QuadFloat min_normal = encode(false, 1, 0);
inline constexpr QuadFloat min_subnormal = encode(false, 0, 1);
}  // namespace quad

QuadFloat qadd(QuadFloat a, QuadFloat b);
QuadFloat qsub(QuadFloat a, QuadFloat b);
QuadFloat qmul(QuadFloat a, QuadFloat b);
QuadFloat qdiv(QuadFloat a, QuadFloat b);
QuadFloat qmadd(QuadFloat a, QuadFloat b, QuadFloat c, MaddMode mode);

/// Total order on non-NaN values with -0 == +0; any NaN is unordered.
std::partial_ordering qcmp(QuadFloat a, QuadFloat b);

constexpr QuadFloat qabs(QuadFloat a) { return QuadFloat::from_bits(a.bits() & ~(u128{1} << 127)); }
constexpr QuadFloat qneg(QuadFloat a) { return QuadFloat::from_bits(a.bits() ^ (u128{1} << 127)); }

QuadFloat from_f64(double x);
double to_f64(QuadFloat q);

/// Parse failure in a hexadecimal floating literal.
class ParseError : public std::invalid_argument {
 public:
  ParseError(std::size_t position, const std::string& what)
      : std::invalid_argument(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Accepts [+-]0x<hex>[.<hex>]p[+-]<dec>, plus inf and nan / nan(0x<payload>).
/// Literals with more precision than binary128 are rounded to nearest even.
QuadFloat parse_hexfloat(std::string_view text);
/// Shortest exact hex literal; parse_hexfloat(format_hexfloat(q)) reproduces q bit for bit.
std::string format_hexfloat(QuadFloat q);

/// 16 bytes, least-significant byte first.
std::array<std::uint8_t, 16> to_bytes_le(QuadFloat q);
QuadFloat from_bytes_le(const std::array<std::uint8_t, 16>& bytes);

inline QuadFloat operator+(QuadFloat a, QuadFloat b) { return qadd(a, b); }
inline QuadFloat operator-(QuadFloat a, QuadFloat b) { return qsub(a, b); }
inline QuadFloat operator*(QuadFloat a, QuadFloat b) { return qmul(a, b); }
inline QuadFloat operator/(QuadFloat a, QuadFloat b) { return qdiv(a, b); }
constexpr QuadFloat operator-(QuadFloat a) { return qneg(a); }
inline bool operator==(QuadFloat a, QuadFloat b) { return qcmp(a, b) == std::partial_ordering::equivalent; }
inline std::partial_ordering operator<=>(QuadFloat a, QuadFloat b) { return qcmp(a, b); }

}  // namespace qgemm
