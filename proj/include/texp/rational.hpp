#ifndef TEXP_RATIONAL_HPP
#define TEXP_RATIONAL_HPP

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "texp/errors.hpp"

namespace texp {

/**
 * Exact rational number on 64-bit numerator/denominator.
 *
 * Scores, leaf weights and thresholds are decimals of bounded precision, so
 * all arithmetic performed by the library (sums of leaf weights, midpoints,
 * stratum means) stays well inside the 64-bit range; intermediates use
 * 128-bit arithmetic and overflow of the reduced result throws.
 */
class Rat {
 public:
  constexpr Rat() = default;
  Rat(long long n) : num_(n), den_(1) {}  // NOLINT: implicit by design
  Rat(long long n, long long d) : num_(n), den_(d) { normalize(); }

  /** Parses "-12.345", "7", "2.5e-3" (plain decimal with optional exponent). */
  static Rat from_decimal(std::string_view s);

  long long num() const { return num_; }
  long long den() const { return den_; }

  int sign() const { return num_ > 0 ? 1 : num_ < 0 ? -1 : 0; }
  bool is_zero() const { return num_ == 0; }
  Rat abs() const { return num_ < 0 ? Rat(-num_, den_) : *this; }

  Rat operator-() const { return Rat(-num_, den_); }
  Rat operator+(const Rat& o) const {
    return make(i128(num_) * o.den_ + i128(o.num_) * den_, i128(den_) * o.den_);
  }
  Rat operator-(const Rat& o) const {
    return make(i128(num_) * o.den_ - i128(o.num_) * den_, i128(den_) * o.den_);
  }
  Rat operator*(const Rat& o) const {
    return make(i128(num_) * o.num_, i128(den_) * o.den_);
  }
  Rat operator/(const Rat& o) const {
    if (o.num_ == 0) throw std::domain_error("rational division by zero");
    return make(i128(num_) * o.den_, i128(den_) * o.num_);
  }
  Rat& operator+=(const Rat& o) { return *this = *this + o; }
  Rat& operator-=(const Rat& o) { return *this = *this - o; }
  Rat& operator*=(const Rat& o) { return *this = *this * o; }
  Rat& operator/=(const Rat& o) { return *this = *this / o; }

  bool operator==(const Rat& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Rat& o) const { return !(*this == o); }
  bool operator<(const Rat& o) const { return i128(num_) * o.den_ < i128(o.num_) * den_; }
  bool operator>(const Rat& o) const { return o < *this; }
  bool operator<=(const Rat& o) const { return !(o < *this); }
  bool operator>=(const Rat& o) const { return !(*this < o); }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /** Exact decimal rendering when the denominator is of the form 2^a*5^b, else "n/d". */
  std::string to_string() const;

  /** Fewest fractional digits d such that (*this) * 10^d is an integer, if any. */
  std::optional<int> decimal_places() const;

 private:
  using i128 = __int128;

  long long num_ = 0;
  long long den_ = 1;

  static Rat make(i128 n, i128 d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) { n = -n; d = -d; }
    i128 g = gcd128(n < 0 ? -n : n, d);
    if (g > 1) { n /= g; d /= g; }
    constexpr i128 kMax = INT64_MAX;
    if (n > kMax || n < -kMax || d > kMax)
      throw std::overflow_error("rational overflow");
    Rat r;
    r.num_ = static_cast<long long>(n);
    r.den_ = static_cast<long long>(d);
    return r;
  }

  static i128 gcd128(i128 a, i128 b) {
    while (b != 0) { i128 t = a % b; a = b; b = t; }
    return a == 0 ? 1 : a;
  }

  void normalize() { *this = make(num_, den_); }
};

inline Rat Rat::from_decimal(std::string_view s) {
  const auto fail = [&] { throw ParseError("not a decimal number: '" + std::string(s) + "'"); };
  std::string_view rest = s;
  bool neg = false;
  if (!rest.empty() && (rest.front() == '+' || rest.front() == '-')) {
    neg = rest.front() == '-';
    rest.remove_prefix(1);
  }
  i128 mantissa = 0;
  int frac_digits = 0;
  long exponent = 0;
  bool any_digit = false, in_frac = false, done = false;
  size_t i = 0;
  for (; i < rest.size() && !done; ++i) {
    char c = rest[i];
    if (c >= '0' && c <= '9') {
      mantissa = mantissa * 10 + (c - '0');
      if (mantissa > i128(INT64_MAX)) fail();
      if (in_frac) ++frac_digits;
      any_digit = true;
    } else if (c == '.' && !in_frac) {
      in_frac = true;
    } else if ((c == 'e' || c == 'E') && any_digit) {
      auto tail = rest.substr(i + 1);
      auto res = std::from_chars(tail.data(), tail.data() + tail.size(), exponent);
      if (res.ec != std::errc() || res.ptr != tail.data() + tail.size()) fail();
      done = true;
    } else {
      fail();
    }
  }
  if (!any_digit) fail();
  long shift = exponent - frac_digits;
  i128 num = neg ? -mantissa : mantissa;
  i128 den = 1;
  for (; shift > 0; --shift) { num *= 10; if (num > i128(INT64_MAX) || num < -i128(INT64_MAX)) fail(); }
  for (; shift < 0; ++shift) { den *= 10; if (den > i128(INT64_MAX)) fail(); }
  Rat r;
  r.num_ = static_cast<long long>(num);
  r.den_ = static_cast<long long>(den);
  r.normalize();
  return r;
}

inline std::string Rat::to_string() const {
  auto places = decimal_places();
  if (!places) return std::to_string(num_) + "/" + std::to_string(den_);
  if (*places == 0) return std::to_string(num_);
  i128 scale = 1;
  for (int i = 0; i < *places; ++i) scale *= 10;
  i128 scaled = i128(num_) * (scale / den_);
  bool neg = scaled < 0;
  if (neg) scaled = -scaled;
  i128 ip = scaled / scale, fp = scaled % scale;
  std::string frac(*places, '0');
  for (int i = *places - 1; i >= 0; --i) { frac[i] = char('0' + int(fp % 10)); fp /= 10; }
  return (neg ? "-" : "") + std::to_string(static_cast<long long>(ip)) + "." + frac;
}

inline std::optional<int> Rat::decimal_places() const {
  long long d = den_;
  int twos = 0, fives = 0;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  if (d != 1) return std::nullopt;
  return std::max(twos, fives);
}

}  // namespace texp

#endif  // TEXP_RATIONAL_HPP
