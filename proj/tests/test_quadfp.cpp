#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracle/operands.hpp"
#include "oracle/oracle.hpp"
#include "qgemm/quadfp.hpp"

using namespace qgemm;

namespace {

QuadFloat pow2(int e) { return encode(false, static_cast<std::uint32_t>(e + 16383), 0); }

QuadFloat next_up(QuadFloat q) { return QuadFloat::from_bits(q.bits() + 1); }

std::string hex(QuadFloat q) { return format_hexfloat(q); }

}  // namespace

TEST_CASE("qadd small cases") {
  CHECK(qadd(from_f64(1.0), from_f64(2.0)).same_bits(from_f64(3.0)));
  const QuadFloat x = parse_hexfloat("0x1.23456789abcdef0123456789abcdp-7");
  CHECK(qadd(x, qneg(x)).same_bits(quad::zero));
  CHECK(qadd(qneg(x), x).same_bits(quad::zero));
  CHECK(qadd(quad::one, pow2(-113)).same_bits(quad::one));
  // 1 + ulp + half ulp rounds up to even (1 + 2 ulp)
  const QuadFloat one_ulp = next_up(quad::one);
  CHECK(qadd(one_ulp, pow2(-113)).same_bits(next_up(one_ulp)));
  CHECK(qadd(quad::neg_zero, quad::neg_zero).same_bits(quad::neg_zero));
  CHECK(qadd(quad::neg_zero, quad::zero).same_bits(quad::zero));
  CHECK(qadd(quad::inf, qneg(quad::inf)).same_bits(quad::canonical_nan));
  CHECK(qadd(quad::max_finite, quad::max_finite).same_bits(quad::inf));
}

TEST_CASE("qmul identity and overflow") {
  testkit::OperandSource src(7);
  for (int i = 0; i < 2000; ++i) {
    QuadFloat x = src.raw();
    if (!x.is_finite()) continue;
    CHECK(qmul(x, quad::one).same_bits(x));
  }
  CHECK(qmul(pow2(10000), pow2(10000)).same_bits(quad::inf));
  CHECK(qmul(qneg(pow2(10000)), pow2(10000)).same_bits(qneg(quad::inf)));
  CHECK(qmul(pow2(-10000), pow2(-10000)).same_bits(quad::zero));
  CHECK(qmul(quad::min_normal, pow2(-1)).same_bits(encode(false, 0, u128{1} << 111)));
  CHECK(qmul(quad::inf, quad::zero).same_bits(quad::canonical_nan));
}

TEST_CASE("qdiv special values") {
  const QuadFloat x = parse_hexfloat("-0x1.fedcba9876543210fedcba987654p+100");
  CHECK(qdiv(x, quad::one).same_bits(x));
  CHECK(qdiv(quad::one, quad::zero).same_bits(quad::inf));
  CHECK(qdiv(quad::one, quad::neg_zero).same_bits(qneg(quad::inf)));
  CHECK(qdiv(quad::zero, quad::zero).is_nan());
  CHECK(qdiv(from_f64(1.0), from_f64(3.0)).same_bits(parse_hexfloat("0x1.5555555555555555555555555555p-2")));
}

TEST_CASE("qmadd modes") {
  for (MaddMode mode : {MaddMode::TwoRoundings, MaddMode::Fused}) {
    CHECK(qmadd(quad::one, quad::one, quad::one, mode).same_bits(from_f64(2.0)));
    const QuadFloat x = from_f64(12345.678), c = from_f64(-0.25);
    CHECK(qmadd(x, quad::zero, c, mode).same_bits(c));
  }
  // (1 + 2^-60)^2 - (1 + 2^-59): the 2^-120 term survives only when fused.
  const QuadFloat a = qadd(quad::one, pow2(-60));
  const QuadFloat c = qneg(qadd(quad::one, pow2(-59)));
  CHECK(qmadd(a, a, c, MaddMode::Fused).same_bits(pow2(-120)));
  CHECK(qmadd(a, a, c, MaddMode::TwoRoundings).same_bits(quad::zero));
}

TEST_CASE("qmadd modes disagree by exactly one ulp somewhere") {
  testkit::OperandSource src(99);
  bool found = false;
  for (int i = 0; i < 1000 && !found; ++i) {
    const QuadFloat a = src.near_exponent(16383, 1), b = src.near_exponent(16383, 1);
    const QuadFloat c = qabs(src.near_exponent(16383, 1));
    const QuadFloat fused = qmadd(a, b, c, MaddMode::Fused);
    const QuadFloat twice = qmadd(a, b, c, MaddMode::TwoRoundings);
    REQUIRE(fused.same_bits(oracle::fma(a, b, c)));
    const u128 d = fused.bits() > twice.bits() ? fused.bits() - twice.bits() : twice.bits() - fused.bits();
    if (d == 1 && fused.sign() == twice.sign()) found = true;
  }
  CHECK(found);
}

TEST_CASE("qcmp ordering") {
  CHECK(qcmp(quad::neg_zero, quad::zero) == std::partial_ordering::equivalent);
  CHECK(qcmp(from_f64(1.0), from_f64(2.0)) == std::partial_ordering::less);
  CHECK(qcmp(from_f64(-1.0), from_f64(-2.0)) == std::partial_ordering::greater);
  CHECK(qcmp(quad::canonical_nan, quad::one) == std::partial_ordering::unordered);
  CHECK_FALSE(quad::canonical_nan == quad::canonical_nan);
  CHECK(qneg(quad::inf) < quad::min_subnormal);
  CHECK(qneg(quad::min_subnormal) < quad::zero);
}

TEST_CASE("qabs and qneg touch only the sign bit") {
  CHECK(qabs(from_f64(-3.5)).same_bits(from_f64(3.5)));
  CHECK(qneg(quad::zero).same_bits(quad::neg_zero));
  const QuadFloat nan = encode(true, 0x7FFF, (u128{1} << 111) | 0x1234);
  CHECK(qabs(nan).same_bits(encode(false, 0x7FFF, (u128{1} << 111) | 0x1234)));
}

TEST_CASE("binary64 conversions") {
  CHECK(from_f64(1.5).same_bits(encode(false, 0x3FFF, u128{1} << 111)));
  testkit::OperandSource src(3);
  for (int i = 0; i < 20000; ++i) {
    const double x = std::bit_cast<double>(src.next());
    const double y = to_f64(from_f64(x));
    CHECK(std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y));
  }
  const double dmin = std::numeric_limits<double>::denorm_min();
  CHECK(to_f64(from_f64(dmin)) == dmin);
  const QuadFloat q = qadd(quad::one, pow2(-60));
  CHECK(to_f64(q) == oracle::to_f64(q));
  CHECK(to_f64(q) == 1.0);
  const QuadFloat above_tie = qadd(qadd(quad::one, pow2(-53)), pow2(-100));
  CHECK(to_f64(above_tie) == oracle::to_f64(above_tie));
  CHECK(to_f64(above_tie) == 1.0 + std::ldexp(1.0, -52));
  for (int i = 0; i < 20000; ++i) {
    const QuadFloat r = src.near_exponent(16383 - 1022 + static_cast<int>(src.next() % 2100) - 1050, 2);
    CHECK(std::bit_cast<std::uint64_t>(to_f64(r)) == std::bit_cast<std::uint64_t>(oracle::to_f64(r)));
  }
}

TEST_CASE("hexfloat literals") {
  CHECK(parse_hexfloat("0x1p+0").bits() == (u128{0x3FFF} << 112));
  CHECK(parse_hexfloat("0x1.8p+1").same_bits(from_f64(3.0)));
  CHECK(parse_hexfloat("-0X1.8P1").same_bits(from_f64(-3.0)));
  CHECK(parse_hexfloat("0x.8p0").same_bits(from_f64(0.5)));
  CHECK(parse_hexfloat("0x10p-4").same_bits(quad::one));
  CHECK(parse_hexfloat("inf").same_bits(quad::inf));
  CHECK(parse_hexfloat("-nan").is_nan());
  CHECK(hex(quad::one) == "0x1p+0");
  CHECK(hex(from_f64(-3.0)) == "-0x1.8p+1");
  CHECK(hex(quad::min_subnormal) == "0x0.0000000000000000000000000001p-16382");
  CHECK(hex(quad::neg_zero) == "-0x0p+0");

  // 1 + 2^-113 is a tie, 1 + 2^-113 + 2^-200 is not.
  CHECK(parse_hexfloat("0x1.00000000000000000000000000008p0").same_bits(quad::one));
  CHECK(parse_hexfloat("0x1.000000000000000000000000000080000000000000000001p0")
            .same_bits(next_up(quad::one)));
  CHECK(parse_hexfloat("0x1p+16384").same_bits(quad::inf));
  CHECK(parse_hexfloat("0x1p-16495").same_bits(quad::zero));
  CHECK(parse_hexfloat("0x1.8p-16495").same_bits(quad::min_subnormal));
}

TEST_CASE("hexfloat parse errors carry a position") {
  auto position_of = [](std::string_view s) -> long {
    try {
      parse_hexfloat(s);
    } catch (const ParseError& e) {
      return static_cast<long>(e.position());
    }
    return -1;
  };
  CHECK(position_of("1.0") == 0);
  CHECK(position_of("0x") == 2);
  CHECK(position_of("0x1.8") == 5);
  CHECK(position_of("0x1p") == 4);
  CHECK(position_of("0x1p+3z") == 6);
  CHECK(position_of("0x1..p0") == 4);
  CHECK(position_of("nan(0x0)") == 6);
}

TEST_CASE("hexfloat round trip and rounding against the oracle") {
  testkit::OperandSource src(11);
  for (int i = 0; i < 10000; ++i) {
    const QuadFloat q = (i % 3 == 0) ? src.subnormal() : src.raw();
    const QuadFloat back = parse_hexfloat(format_hexfloat(q));
    REQUIRE_MESSAGE(back.same_bits(q), format_hexfloat(q));
  }
  // Literals with 40 hex digits are rounded exactly like the rational value.
  for (int i = 0; i < 2000; ++i) {
    std::string digits;
    for (int d = 0; d < 40; ++d) digits += "0123456789abcdef"[src.next() % 16];
    const int e = static_cast<int>(src.next() % 40000) - 20000;
    const std::string lit = "0x" + digits.substr(0, 1) + "." + digits.substr(1) + "p" + std::to_string(e);
    mpz_class mant(digits, 16);
    mpq_class v(mant);
    const long shift = 4L * 39 - e;
    if (shift >= 0) v /= mpq_class(mpz_class(1) << static_cast<unsigned long>(shift));
    else v *= mpq_class(mpz_class(1) << static_cast<unsigned long>(-shift));
    const QuadFloat expected = oracle::from_rational(v);
    REQUIRE_MESSAGE(parse_hexfloat(lit).same_bits(expected), lit);
  }
}

TEST_CASE("little-endian byte form") {
  const QuadFloat q = QuadFloat::from_words(0x0011223344556677ull, 0x8899AABBCCDDEEFFull);
  const auto bytes = to_bytes_le(q);
  CHECK(bytes[0] == 0xFF);
  CHECK(bytes[7] == 0x88);
  CHECK(bytes[8] == 0x77);
  CHECK(bytes[15] == 0x00);
  CHECK(from_bytes_le(bytes).same_bits(q));
}

TEST_CASE("random operands match the oracle bit for bit") {
  testkit::OperandSource src(2024);
  for (int i = 0; i < 20000; ++i) {
    const auto [a, b] = src.pair();
    const QuadFloat c = src.pair().first;
    REQUIRE_MESSAGE(qadd(a, b).same_bits(oracle::add(a, b)), hex(a) << " + " << hex(b));
    REQUIRE_MESSAGE(qmul(a, b).same_bits(oracle::mul(a, b)), hex(a) << " * " << hex(b));
    REQUIRE_MESSAGE(qdiv(a, b).same_bits(oracle::div(a, b)), hex(a) << " / " << hex(b));
    REQUIRE_MESSAGE(qmadd(a, b, c, MaddMode::Fused).same_bits(oracle::fma(a, b, c)),
                    hex(a) << " * " << hex(b) << " + " << hex(c));
  }
}

TEST_CASE("algebraic properties") {
  testkit::OperandSource src(5);
  for (int i = 0; i < 20000; ++i) {
    const auto [a, b] = src.pair();
    const QuadFloat c = src.near_exponent(static_cast<int>(a.biased_exponent()), 3);
    const u128 abits = a.bits(), bbits = b.bits();
    if (!a.is_nan() && !b.is_nan()) {
      CHECK(qadd(a, b).same_bits(qadd(b, a)));
      CHECK(qmul(a, b).same_bits(qmul(b, a)));
    }
    CHECK(qmadd(a, b, c, MaddMode::TwoRoundings).same_bits(qadd(qmul(a, b), c)));
    CHECK(a.bits() == abits);
    CHECK(b.bits() == bbits);
    // Monotone rounding: b1 < b2 implies a + b1 <= a + b2.
    if (a.is_finite() && b.is_finite() && c.is_finite()) {
      const QuadFloat lo = (b < c) ? b : c, hi = (b < c) ? c : b;
      const QuadFloat s1 = qadd(a, lo), s2 = qadd(a, hi);
      CHECK(qcmp(s1, s2) != std::partial_ordering::greater);
    }
  }
}
