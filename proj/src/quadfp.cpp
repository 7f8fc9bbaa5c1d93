#include "qgemm/quadfp.hpp"

#include <bit>
#include <cstring>

namespace qgemm {
namespace {

constexpr int kBias = QuadFloat::kExponentBias;
constexpr int kEmin = 1 - kBias;  // exponent of the smallest normal
constexpr int kEmax = kBias;
constexpr u128 kHidden = u128{1} << 112;
constexpr u128 kQuietBit = u128{1} << 111;

inline int clz128(u128 x) {
  const auto hi = static_cast<std::uint64_t>(x >> 64);
  if (hi != 0) return std::countl_zero(hi);
  return 64 + std::countl_zero(static_cast<std::uint64_t>(x));
}

// x >> n with every shifted-out one bit ORed into the result's lsb.
inline u128 shift_right_jam(u128 x, int n) {
  if (n == 0) return x;
  if (n >= 128) return x != 0 ? 1 : 0;
  const u128 lost = x & ((u128{1} << n) - 1);
  return (x >> n) | (lost != 0 ? 1 : 0);
}

struct U256 {
  u128 hi = 0;
  u128 lo = 0;
};

inline U256 mul_full(u128 a, u128 b) {
  const auto a0 = static_cast<std::uint64_t>(a), a1 = static_cast<std::uint64_t>(a >> 64);
  const auto b0 = static_cast<std::uint64_t>(b), b1 = static_cast<std::uint64_t>(b >> 64);
  const u128 p00 = u128{a0} * b0;
  const u128 p01 = u128{a0} * b1;
  const u128 p10 = u128{a1} * b0;
  const u128 p11 = u128{a1} * b1;
  const u128 mid = (p00 >> 64) + static_cast<std::uint64_t>(p01) + static_cast<std::uint64_t>(p10);
  U256 r;
  r.lo = (mid << 64) | static_cast<std::uint64_t>(p00);
  r.hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
  return r;
}

inline bool less(const U256& a, const U256& b) { return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo); }

inline U256 shl(const U256& x, int n) {
  if (n == 0) return x;
  if (n >= 128) return {x.lo << (n - 128), 0};
  return {(x.hi << n) | (x.lo >> (128 - n)), x.lo << n};
}

inline U256 shift_right_jam(const U256& x, int n) {
  if (n == 0) return x;
  if (n >= 256) return {0, (x.hi | x.lo) != 0 ? u128{1} : 0};
  U256 r;
  bool lost;
  if (n >= 128) {
    const int m = n - 128;
    lost = x.lo != 0 || (m != 0 && (x.hi & ((u128{1} << m) - 1)) != 0);
    r.lo = m == 0 ? x.hi : x.hi >> m;
    r.hi = 0;
  } else {
    lost = (x.lo & ((u128{1} << n) - 1)) != 0;
    r.lo = (x.lo >> n) | (x.hi << (128 - n));
    r.hi = x.hi >> n;
  }
  if (lost) r.lo |= 1;
  return r;
}

inline U256 add(const U256& a, const U256& b) {
  U256 r;
  r.lo = a.lo + b.lo;
  r.hi = a.hi + b.hi + (r.lo < a.lo ? 1 : 0);
  return r;
}

inline U256 sub(const U256& a, const U256& b) {
  U256 r;
  r.lo = a.lo - b.lo;
  r.hi = a.hi - b.hi - (a.lo < b.lo ? 1 : 0);
  return r;
}

inline int clz256(const U256& x) { return x.hi != 0 ? clz128(x.hi) : 128 + clz128(x.lo); }

// Finite nonzero value as sig * 2^(exp - 112) with sig in [2^112, 2^113).
struct Unpacked {
  bool sign;
  int exp;
  u128 sig;
};

inline Unpacked unpack(QuadFloat q) {
  const int e = static_cast<int>(q.biased_exponent());
  const u128 f = q.fraction();
  if (e != 0) return {q.sign(), e - kBias, f | kHidden};
  const int shift = clz128(f) - 15;
  return {q.sign(), kEmin - shift, f << shift};
}

// Biased exponent in [1, 0x7FFE]: finite, nonzero, not subnormal.
inline bool is_normal(QuadFloat q) { return q.biased_exponent() - 1u < 0x7FFEu; }

inline Unpacked unpack_normal(QuadFloat q) {
  return {q.sign(), static_cast<int>(q.biased_exponent()) - kBias, q.fraction() | kHidden};
}

inline QuadFloat signed_zero(bool sign) { return encode(sign, 0, 0); }
inline QuadFloat signed_inf(bool sign) { return encode(sign, 0x7FFF, 0); }
inline QuadFloat quiet(QuadFloat q) { return QuadFloat::from_bits(q.bits() | kQuietBit); }

// Rounds sig * 2^(exp - 127) to a binary128 value. sig must have bit 127 set;
// its lsb may carry a sticky bit from earlier truncation.
inline QuadFloat round_pack(bool sign, int exp, u128 sig) {
  if (exp >= kEmin && exp < kEmax) [[likely]] {
    u128 kept = sig >> 15;
    const u128 rem = sig & 0x7FFF;
    if (rem > 0x4000 || (rem == 0x4000 && (kept & 1) != 0)) ++kept;
    if (kept == (u128{1} << 113)) {
      kept >>= 1;
      ++exp;
    }
    return encode(sign, static_cast<std::uint32_t>(exp + kBias), kept - kHidden);
  }
  if (exp > kEmax) return signed_inf(sign);
  int shift = 15;
  if (exp < kEmin) {
    const long extra = static_cast<long>(kEmin) - exp;
    if (extra > 113) return signed_zero(sign);
    shift += static_cast<int>(extra);
    exp = kEmin;
  }
  u128 kept;
  if (shift >= 128) {
    // Only reachable at shift == 128: the whole significand sits below the
    // smallest subnormal and the value is at least half of it.
    const u128 half = u128{1} << 127;
    kept = sig > half ? 1 : 0;
  } else {
    kept = sig >> shift;
    const u128 rem = sig & ((u128{1} << shift) - 1);
    const u128 half = u128{1} << (shift - 1);
    if (rem > half || (rem == half && (kept & 1) != 0)) ++kept;
  }
  if (kept == (u128{1} << 113)) {
    kept >>= 1;
    ++exp;
  }
  if (kept < kHidden) return encode(sign, 0, kept);
  const int biased = exp + kBias;
  if (biased >= 0x7FFF) return signed_inf(sign);
  return encode(sign, static_cast<std::uint32_t>(biased), kept - kHidden);
}

QuadFloat add_finite(Unpacked a, Unpacked b) {
  if (b.exp > a.exp || (b.exp == a.exp && b.sig > a.sig)) std::swap(a, b);
  const int d = a.exp - b.exp;
  const u128 x = a.sig << 14;
  const u128 y = shift_right_jam(b.sig << 14, d);
  u128 s;
  if (a.sign == b.sign) {
    s = x + y;
  } else {
    s = x - y;
    if (s == 0) return quad::zero;
  }
  const int lz = clz128(s);
  return round_pack(a.sign, a.exp + 1 - lz, s << lz);
}

QuadFloat add_zero_operands(QuadFloat a, QuadFloat b) {
  if (a.is_zero() && b.is_zero()) return signed_zero(a.sign() && b.sign());
  return a.is_zero() ? b : a;
}

}  // namespace

QuadFloat qadd(QuadFloat a, QuadFloat b) {
  if (is_normal(a) && is_normal(b)) [[likely]] return add_finite(unpack_normal(a), unpack_normal(b));
  if (a.is_nan()) return quiet(a);
  if (b.is_nan()) return quiet(b);
  if (a.is_inf()) {
    if (b.is_inf() && a.sign() != b.sign()) return quad::canonical_nan;
    return a;
  }
  if (b.is_inf()) return b;
  if (a.is_zero() || b.is_zero()) return add_zero_operands(a, b);
  return add_finite(unpack(a), unpack(b));
}

QuadFloat qsub(QuadFloat a, QuadFloat b) {
  if (b.is_nan()) return a.is_nan() ? quiet(a) : quiet(b);
  return qadd(a, qneg(b));
}

namespace {

inline QuadFloat mul_finite(bool sign, const Unpacked& ua, const Unpacked& ub) {
  const U256 p = mul_full(ua.sig, ub.sig);
  // p lies in [2^224, 2^226).
  const bool top = (p.hi >> 97) != 0;
  const int drop = top ? 98 : 97;
  u128 sig = (p.hi << (128 - drop)) | (p.lo >> drop);
  if ((p.lo & ((u128{1} << drop) - 1)) != 0) sig |= 1;
  return round_pack(sign, ua.exp + ub.exp + (top ? 1 : 0), sig);
}

}  // namespace

QuadFloat qmul(QuadFloat a, QuadFloat b) {
  const bool sign = a.sign() != b.sign();
  if (is_normal(a) && is_normal(b)) [[likely]] return mul_finite(sign, unpack_normal(a), unpack_normal(b));
  if (a.is_nan()) return quiet(a);
  if (b.is_nan()) return quiet(b);
  if (a.is_inf() || b.is_inf()) {
    if (a.is_zero() || b.is_zero()) return quad::canonical_nan;
    return signed_inf(sign);
  }
  if (a.is_zero() || b.is_zero()) return signed_zero(sign);
  return mul_finite(sign, unpack(a), unpack(b));
}

QuadFloat qdiv(QuadFloat a, QuadFloat b) {
  if (a.is_nan()) return quiet(a);
  if (b.is_nan()) return quiet(b);
  const bool sign = a.sign() != b.sign();
  if (a.is_inf()) return b.is_inf() ? quad::canonical_nan : signed_inf(sign);
  if (b.is_inf()) return signed_zero(sign);
  if (b.is_zero()) return a.is_zero() ? quad::canonical_nan : signed_inf(sign);
  if (a.is_zero()) return signed_zero(sign);
  const Unpacked ua = unpack(a), ub = unpack(b);
  int exp = ua.exp - ub.exp;
  u128 rem = ua.sig;
  if (rem < ub.sig) {
    rem <<= 1;
    --exp;
  }
  u128 q = 0;
  for (int i = 0; i < 128; ++i) {
    q <<= 1;
    if (rem >= ub.sig) {
      rem -= ub.sig;
      q |= 1;
    }
    rem <<= 1;
  }
  if (rem != 0) q |= 1;
  return round_pack(sign, exp, q);
}

namespace {

QuadFloat fused_finite(bool psign, const Unpacked& ua, const Unpacked& ub, const Unpacked& uc) {
  // Both terms aligned so their leading bit sits at position 254.
  U256 p = mul_full(ua.sig, ub.sig);
  const bool top = (p.hi >> 97) != 0;
  p = shl(p, top ? 29 : 30);
  int pexp = ua.exp + ub.exp + (top ? 1 : 0);
  U256 q{uc.sig << 14, 0};
  int qexp = uc.exp;
  bool psgn = psign, qsgn = uc.sign;
  if (qexp > pexp || (qexp == pexp && less(p, q))) {
    std::swap(p, q);
    std::swap(pexp, qexp);
    std::swap(psgn, qsgn);
  }
  const long gap = static_cast<long>(pexp) - qexp;
  q = shift_right_jam(q, gap > 256 ? 256 : static_cast<int>(gap));
  U256 s;
  if (psgn == qsgn) {
    s = add(p, q);
  } else {
    s = sub(p, q);
    if (s.hi == 0 && s.lo == 0) return quad::zero;
  }
  const int lz = clz256(s);
  s = shl(s, lz);
  u128 sig = s.hi;
  if (s.lo != 0) sig |= 1;
  return round_pack(psgn, pexp + 1 - lz, sig);
}

}  // namespace

QuadFloat qmadd(QuadFloat a, QuadFloat b, QuadFloat c, MaddMode mode) {
  if (mode == MaddMode::TwoRoundings) return qadd(qmul(a, b), c);
  if (is_normal(a) && is_normal(b) && is_normal(c)) [[likely]] {
    return fused_finite(a.sign() != b.sign(), unpack_normal(a), unpack_normal(b), unpack_normal(c));
  }

  if (a.is_nan()) return quiet(a);
  if (b.is_nan()) return quiet(b);
  if (c.is_nan()) return quiet(c);
  const bool psign = a.sign() != b.sign();
  if (a.is_inf() || b.is_inf()) {
    if (a.is_zero() || b.is_zero()) return quad::canonical_nan;
    if (c.is_inf() && c.sign() != psign) return quad::canonical_nan;
    return signed_inf(psign);
  }
  if (c.is_inf()) return c;
  if (a.is_zero() || b.is_zero()) return add_zero_operands(signed_zero(psign), c);
  if (c.is_zero()) return qmul(a, b);

  return fused_finite(psign, unpack(a), unpack(b), unpack(c));
}

std::partial_ordering qcmp(QuadFloat a, QuadFloat b) {
  if (a.is_nan() || b.is_nan()) return std::partial_ordering::unordered;
  if (a.is_zero() && b.is_zero()) return std::partial_ordering::equivalent;
  const u128 ma = qabs(a).bits(), mb = qabs(b).bits();
  if (a.sign() != b.sign()) return a.sign() ? std::partial_ordering::less : std::partial_ordering::greater;
  if (ma == mb) return std::partial_ordering::equivalent;
  const bool mag_less = ma < mb;
  return (mag_less != a.sign()) ? std::partial_ordering::less : std::partial_ordering::greater;
}

QuadFloat from_f64(double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  const bool sign = (bits >> 63) != 0;
  const auto e = static_cast<int>((bits >> 52) & 0x7FF);
  const std::uint64_t f = bits & ((std::uint64_t{1} << 52) - 1);
  if (e == 0x7FF) return encode(sign, 0x7FFF, u128{f} << 60);
  if (e == 0) {
    if (f == 0) return signed_zero(sign);
    const int shift = std::countl_zero(f) - 11;  // bring the leading bit to position 52
    const int exp = -1022 - shift;
    const std::uint64_t sig = f << shift;
    return encode(sign, static_cast<std::uint32_t>(exp + kBias),
                  u128{sig & ((std::uint64_t{1} << 52) - 1)} << 60);
  }
  return encode(sign, static_cast<std::uint32_t>(e - 1023 + kBias), u128{f} << 60);
}

double to_f64(QuadFloat q) {
  const bool sign = q.sign();
  const std::uint64_t sbit = std::uint64_t{sign} << 63;
  if (q.is_nan()) {
    auto payload = static_cast<std::uint64_t>(q.fraction() >> 60);
    if (payload == 0) payload = std::uint64_t{1} << 51;
    return std::bit_cast<double>(sbit | (std::uint64_t{0x7FF} << 52) | payload);
  }
  if (q.is_inf()) return std::bit_cast<double>(sbit | (std::uint64_t{0x7FF} << 52));
  if (q.is_zero()) return std::bit_cast<double>(sbit);

  const Unpacked u = unpack(q);
  const u128 sig = u.sig << 15;  // leading bit at 127
  int exp = u.exp;
  if (exp > 1023) return std::bit_cast<double>(sbit | (std::uint64_t{0x7FF} << 52));
  int shift = 128 - 53;
  if (exp < -1022) {
    const long extra = -1022L - exp;
    if (extra > 53) return std::bit_cast<double>(sbit);
    shift += static_cast<int>(extra);
    exp = -1022;
  }
  u128 kept;
  if (shift >= 128) {
    kept = sig > (u128{1} << 127) ? 1 : 0;
  } else {
    kept = sig >> shift;
    const u128 rem = sig & ((u128{1} << shift) - 1);
    const u128 half = u128{1} << (shift - 1);
    if (rem > half || (rem == half && (kept & 1) != 0)) ++kept;
  }
  if (kept == (u128{1} << 53)) {
    kept >>= 1;
    ++exp;
  }
  const auto k = static_cast<std::uint64_t>(kept);
  if (k < (std::uint64_t{1} << 52)) return std::bit_cast<double>(sbit | k);
  const int biased = exp + 1023;
  if (biased >= 0x7FF) return std::bit_cast<double>(sbit | (std::uint64_t{0x7FF} << 52));
  return std::bit_cast<double>(sbit | (std::uint64_t(biased) << 52) | (k & ((std::uint64_t{1} << 52) - 1)));
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool match_word(std::string_view text, std::size_t pos, std::string_view word) {
  if (text.size() - pos < word.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    char c = text[pos + i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != word[i]) return false;
  }
  return true;
}

std::string hex_digits(u128 v, int min_digits) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  while (v != 0 || static_cast<int>(out.size()) < min_digits) {
    out.insert(out.begin(), kDigits[static_cast<int>(v & 0xF)]);
    v >>= 4;
  }
  return out;
}

}  // namespace

QuadFloat parse_hexfloat(std::string_view text) {
  std::size_t pos = 0;
  bool sign = false;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    sign = text[pos] == '-';
    ++pos;
  }
  if (match_word(text, pos, "inf")) {
    const std::size_t end = match_word(text, pos, "infinity") ? pos + 8 : pos + 3;
    if (end != text.size()) throw ParseError(end, "trailing characters after infinity");
    return signed_inf(sign);
  }
  if (match_word(text, pos, "nan")) {
    pos += 3;
    if (pos == text.size()) return encode(sign, 0x7FFF, kQuietBit);
    if (text[pos] != '(') throw ParseError(pos, "expected '(' after nan");
    ++pos;
    if (!match_word(text, pos, "0x")) throw ParseError(pos, "expected 0x in NaN payload");
    pos += 2;
    u128 payload = 0;
    const std::size_t first = pos;
    while (pos < text.size() && hex_value(text[pos]) >= 0) {
      if ((payload >> 108) != 0) throw ParseError(pos, "NaN payload wider than 112 bits");
      payload = (payload << 4) | static_cast<unsigned>(hex_value(text[pos]));
      ++pos;
    }
    if (pos == first) throw ParseError(pos, "expected hex digits in NaN payload");
    if (pos >= text.size() || text[pos] != ')') throw ParseError(pos, "expected ')'");
    ++pos;
    if (pos != text.size()) throw ParseError(pos, "trailing characters after NaN");
    if (payload == 0) throw ParseError(first, "NaN payload must be nonzero");
    return encode(sign, 0x7FFF, payload);
  }
  if (!match_word(text, pos, "0x")) throw ParseError(pos, "expected 0x prefix");
  pos += 2;

  // value = acc * 2^bexp, digits past the accumulator's capacity go to sticky.
  u128 acc = 0;
  long bexp = 0;
  bool sticky = false;
  bool any_digit = false;
  bool seen_point = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (c == '.') {
      if (seen_point) throw ParseError(pos, "second radix point");
      seen_point = true;
      continue;
    }
    const int d = hex_value(c);
    if (d < 0) break;
    any_digit = true;
    if ((acc >> 120) == 0) {
      acc = (acc << 4) | static_cast<unsigned>(d);
      if (seen_point) bexp -= 4;
    } else {
      if (d != 0) sticky = true;
      if (!seen_point) bexp += 4;
    }
  }
  if (!any_digit) throw ParseError(pos, "expected hex digits");
  if (pos >= text.size() || (text[pos] != 'p' && text[pos] != 'P')) {
    throw ParseError(pos, "expected binary exponent 'p'");
  }
  ++pos;
  bool eneg = false;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    eneg = text[pos] == '-';
    ++pos;
  }
  const std::size_t estart = pos;
  long e = 0;
  for (; pos < text.size() && text[pos] >= '0' && text[pos] <= '9'; ++pos) {
    if (e < 1'000'000'000L) e = e * 10 + (text[pos] - '0');
  }
  if (pos == estart) throw ParseError(pos, "expected exponent digits");
  if (pos != text.size()) throw ParseError(pos, "trailing characters");

  if (acc == 0) return signed_zero(sign);
  const int lz = clz128(acc);
  u128 sig = acc << lz;
  if (sticky) sig |= 1;
  long exp = bexp + (eneg ? -e : e) + 127 - lz;
  if (exp > 100000) exp = 100000;
  if (exp < -100000) exp = -100000;
  return round_pack(sign, static_cast<int>(exp), sig);
}

std::string format_hexfloat(QuadFloat q) {
  std::string out = q.sign() ? "-" : "";
  if (q.is_nan()) return out + "nan(0x" + hex_digits(q.fraction(), 1) + ")";
  if (q.is_inf()) return out + "inf";
  if (q.is_zero()) return out + "0x0p+0";
  const bool subnormal = q.is_subnormal();
  std::string frac = hex_digits(q.fraction(), 28);
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  out += subnormal ? "0x0" : "0x1";
  if (!frac.empty()) out += "." + frac;
  const int exp = subnormal ? kEmin : static_cast<int>(q.biased_exponent()) - kBias;
  out += exp < 0 ? "p-" : "p+";
  out += std::to_string(exp < 0 ? -exp : exp);
  return out;
}

std::array<std::uint8_t, 16> to_bytes_le(QuadFloat q) {
  std::array<std::uint8_t, 16> out{};
  u128 v = q.bits();
  for (auto& byte : out) {
    byte = static_cast<std::uint8_t>(v & 0xFF);
    v >>= 8;
  }
  return out;
}

QuadFloat from_bytes_le(const std::array<std::uint8_t, 16>& bytes) {
  u128 v = 0;
  for (int i = 15; i >= 0; --i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
  return QuadFloat::from_bits(v);
}

}  // namespace qgemm
