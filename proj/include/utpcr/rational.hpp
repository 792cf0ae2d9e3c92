#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>

#include "utpcr/error.hpp"

namespace utpcr {

/// Exact fraction with a positive denominator, always kept in lowest terms.
/// Reward arithmetic is done here and converted to double only on output.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t value) : num_(value), den_(1) {}  // NOLINT(implicit)
  Rational(std::int64_t num, std::int64_t den) { assign(num, den); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  std::string to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  /// Accepts "p/q", integers, and finite decimals ("0.8" -> 4/5). Decimals are exact.
  static Rational parse(std::string_view text) {
    auto fail = [&]() -> Rational {
      throw Error(ErrorCode::InvalidConfig, "not a rational literal: '" + std::string(text) + "'");
    };
    if (text.empty()) return fail();
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
    }
    auto dot = text.find('.');
    if (dot == std::string_view::npos) return Rational(parse_int(text));
    std::string_view int_part = text.substr(0, dot);
    std::string_view frac_part = text.substr(dot + 1);
    if (frac_part.empty() || frac_part.size() > 15) return fail();
    bool negative = !int_part.empty() && int_part.front() == '-';
    if (negative) int_part.remove_prefix(1);
    std::int64_t whole = int_part.empty() ? 0 : parse_int(int_part);
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac_part.size(); ++i) scale *= 10;
    std::int64_t frac = parse_int(frac_part);
    Rational r(whole * scale + frac, scale);
    return negative ? -r : r;
  }

  /// Best rational approximation with denominator <= max_den (continued fractions).
  static Rational approximate(double value, std::int64_t max_den = 1'000'000) {
    if (!std::isfinite(value)) throw Error(ErrorCode::InvalidConfig, "non-finite value");
    bool negative = value < 0;
    double x = std::fabs(value);
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int iter = 0; iter < 64; ++iter) {
      double a_d = std::floor(x);
      if (a_d > 9.0e15) break;
      auto a = static_cast<std::int64_t>(a_d);
      std::int64_t q2 = q0 + a * q1;
      if (q2 > max_den) break;
      std::int64_t p2 = p0 + a * p1;
      p0 = p1; q0 = q1; p1 = p2; q1 = q2;
      double rem = x - a_d;
      if (rem < 1e-15) break;
      x = 1.0 / rem;
    }
    if (q1 == 0) return Rational(0);
    Rational r(p1, q1);
    return negative ? -r : r;
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                     static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw Error(ErrorCode::InvalidConfig, "rational division by zero");
    return from_wide(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  Rational operator-() const { return Rational(-num_, den_); }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }

  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    auto lhs = static_cast<__int128>(a.num_) * b.den_;
    auto rhs = static_cast<__int128>(b.num_) * a.den_;
    return lhs <=> rhs;
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.to_string(); }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;

  void assign(std::int64_t num, std::int64_t den) {
    if (den == 0) throw Error(ErrorCode::InvalidConfig, "rational with zero denominator");
    if (den < 0) { num = -num; den = -den; }
    std::int64_t g = std::gcd(num, den);
    if (g == 0) g = 1;
    num_ = num / g;
    den_ = den / g;
  }

  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) { __int128 t = a % b; a = b; b = t; }
    return a;
  }

  static Rational from_wide(__int128 num, __int128 den) {
    if (den < 0) { num = -num; den = -den; }
    __int128 g = gcd128(num, den);
    if (g == 0) g = 1;
    num /= g;
    den /= g;
    constexpr __int128 kMax = INT64_MAX;
    if (num > kMax || num < -kMax || den > kMax) {
      throw Error(ErrorCode::InvalidConfig, "rational overflow");
    }
    Rational r;
    r.num_ = static_cast<std::int64_t>(num);
    r.den_ = static_cast<std::int64_t>(den);
    return r;
  }

  static std::int64_t parse_int(std::string_view s) {
    if (s.empty()) throw Error(ErrorCode::InvalidConfig, "empty integer literal");
    bool negative = false;
    if (s.front() == '-' || s.front() == '+') {
      negative = s.front() == '-';
      s.remove_prefix(1);
    }
    if (s.empty() || s.size() > 18) throw Error(ErrorCode::InvalidConfig, "bad integer literal");
    std::int64_t v = 0;
    for (char c : s) {
      if (c < '0' || c > '9') throw Error(ErrorCode::InvalidConfig, "bad integer literal");
      v = v * 10 + (c - '0');
    }
    return negative ? -v : v;
  }
};

}  // namespace utpcr
