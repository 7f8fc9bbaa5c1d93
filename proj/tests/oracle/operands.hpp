#pragma once

// Operand generators for soft-float conformance runs.

#include <cstdint>
#include <random>
#include <vector>

#include "qgemm/quadfp.hpp"

namespace qgemm::testkit {

/// Random binary128 patterns biased toward interesting regions: raw bit
/// noise, operands with nearby exponents (where rounding actually happens),
/// subnormals, and the occasional special value.
class OperandSource {
 public:
  explicit OperandSource(std::uint64_t seed) : rng_(seed) {}

  QuadFloat raw() { return QuadFloat::from_words(rng_(), rng_()); }

  QuadFloat near_exponent(int center, int spread) {
    std::uniform_int_distribution<int> off(-spread, spread);
    int e = center + off(rng_);
    if (e < 1) e = 1;
    if (e > 0x7FFE) e = 0x7FFE;
    const u128 frac = (u128{rng_()} << 64) | rng_();
    return encode((rng_() & 1) != 0, static_cast<std::uint32_t>(e), frac);
  }

  QuadFloat subnormal() {
    const u128 frac = ((u128{rng_()} << 64) | rng_()) >> (16 + (rng_() % 100));
    return encode((rng_() & 1) != 0, 0, frac == 0 ? 1 : frac);
  }

  /// Few set bits in the fraction: exercises exact ties and cancellations.
  QuadFloat sparse(int center, int spread) {
    QuadFloat q = near_exponent(center, spread);
    u128 frac = 0;
    const int nbits = static_cast<int>(rng_() % 4);
    for (int i = 0; i < nbits; ++i) frac |= u128{1} << (rng_() % 112);
    return encode(q.sign(), q.biased_exponent(), frac);
  }

  QuadFloat special() {
    static const QuadFloat kSpecials[] = {
        quad::zero, quad::neg_zero, quad::inf, qneg(quad::inf), quad::canonical_nan,
        quad::min_subnormal, quad::min_normal, quad::max_finite, quad::one, qneg(quad::one)};
    return kSpecials[rng_() % std::size(kSpecials)];
  }

  /// Mixed stream: a shared exponent center keeps the pair's magnitudes
  /// comparable most of the time.
  std::pair<QuadFloat, QuadFloat> pair() {
    const auto kind = rng_() % 16;
    const int center = static_cast<int>(1 + rng_() % 0x7FFD);
    switch (kind) {
      case 0: case 1: return {raw(), raw()};
      case 2: return {subnormal(), subnormal()};
      case 3: return {subnormal(), near_exponent(1, 120)};
      case 4: return {special(), near_exponent(center, 4)};
      case 5: return {sparse(center, 3), sparse(center, 3)};
      case 6: return {near_exponent(0x7FFE, 3), near_exponent(0x7FFE, 3)};
      case 7: return {near_exponent(8191, 3), near_exponent(8191, 3)};
      default: return {near_exponent(center, 2), near_exponent(center, 116)};
    }
  }

  std::uint64_t next() { return rng_(); }

 private:
  std::mt19937_64 rng_;
};

/// Directed operands: signed zeros, subnormal edges, ulp neighbours of 1,
/// the overflow boundary, infinities and NaNs (quiet and signaling).
inline std::vector<QuadFloat> directed_values() {
  std::vector<QuadFloat> base = {
      quad::zero,
      quad::min_subnormal,
      encode(false, 0, (u128{1} << 112) - 1),  // largest subnormal
      encode(false, 0, u128{1} << 111),
      quad::min_normal,
      encode(false, 1, 1),
      quad::one,
      encode(false, 0x3FFF, 1),                 // 1 + ulp
      encode(false, 0x3FFE, (u128{1} << 112) - 1),  // 1 - ulp/2
      encode(false, 0x3FFF - 113, 0),           // 2^-113, half ulp of 1
      encode(false, 0x3FFF - 112, 0),
      encode(false, 0x4000, u128{1} << 111),    // 3
      encode(false, 0x3FFD, (u128{0x5555555555555555ull} << 48)),  // ~1/3
      quad::max_finite,
      encode(false, 0x7FFE, 0),
      encode(false, 0x7FFD, (u128{1} << 112) - 1),
      quad::inf,
      quad::canonical_nan,
      encode(false, 0x7FFF, 1),                 // signaling NaN
      encode(false, 0x7FFF, (u128{1} << 111) | 0xABCD),
  };
  std::vector<QuadFloat> out;
  for (QuadFloat q : base) {
    out.push_back(q);
    out.push_back(qneg(q));
  }
  return out;
}

}  // namespace qgemm::testkit
