#pragma once

#include <cctype>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "dspkit/error.hpp"

namespace dspkit {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

enum class Mode { additive, multiplicative };

constexpr std::string_view to_string(Mode m) { return m == Mode::additive ? "additive" : "multiplicative"; }

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

}  // namespace detail

/// Parses "a", "a/b", "-a/b" (integers a, b; b > 0).
inline Rational parse_rational(std::string_view text) {
  std::string s = detail::trim(text);
  bool negative = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    negative = s[0] == '-';
    s = detail::trim(std::string_view(s).substr(1));
  }
  const auto slash = s.find('/');
  const std::string num = detail::trim(std::string_view(s).substr(0, slash));
  const std::string den = slash == std::string::npos ? "1" : detail::trim(std::string_view(s).substr(slash + 1));
  if (!detail::all_digits(num) || !detail::all_digits(den))
    throw Error(ErrorCode::invalid_input, "malformed rational '" + std::string(text) + "'");
  const Integer d(den);
  if (d == 0) throw Error(ErrorCode::invalid_input, "zero denominator in '" + std::string(text) + "'");
  Rational r(Integer(num), d);
  return negative ? Rational(-r) : r;
}

inline std::string format_rational(const Rational& r) {
  const Integer num = boost::multiprecision::numerator(r);
  const Integer den = boost::multiprecision::denominator(r);
  return den == 1 ? num.str() : num.str() + "/" + den.str();
}

inline Integer floor_of(const Rational& r) {
  const Integer num = boost::multiprecision::numerator(r);
  const Integer den = boost::multiprecision::denominator(r);
  Integer q = num / den;  // truncates toward zero
  if (num < 0 && q * den != num) --q;
  return q;
}

/// r mod 1, in [0, 1).
inline Rational frac(const Rational& r) { return r - Rational(floor_of(r)); }

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Gaussian rational re + im i.
struct AdditiveScalar {
  Rational re;
  Rational im;

  AdditiveScalar() = default;
  AdditiveScalar(Rational r, Rational i = 0) : re(std::move(r)), im(std::move(i)) {}

  friend bool operator==(const AdditiveScalar&, const AdditiveScalar&) = default;
  friend bool operator<(const AdditiveScalar& a, const AdditiveScalar& b) {
    return a.re < b.re || (a.re == b.re && a.im < b.im);
  }
  friend AdditiveScalar operator+(const AdditiveScalar& a, const AdditiveScalar& b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend AdditiveScalar operator-(const AdditiveScalar& a) { return {-a.re, -a.im}; }
  friend AdditiveScalar operator*(const Rational& k, const AdditiveScalar& a) { return {k * a.re, k * a.im}; }

  std::complex<double> to_complex() const { return {to_double(re), to_double(im)}; }

  /// "a/b" or "a/b+c/d i" (also "c/d i" and "a-c i").
  static AdditiveScalar parse(std::string_view text) {
    std::string s = detail::trim(text);
    if (s.empty()) throw Error(ErrorCode::invalid_input, "empty scalar");
    if (s.back() != 'i') return {parse_rational(s), 0};
    s = detail::trim(std::string_view(s).substr(0, s.size() - 1));
    // find the sign separating real and imaginary parts (not a leading sign)
    std::size_t split = std::string::npos;
    for (std::size_t k = s.size(); k-- > 1;)
      if (s[k] == '+' || s[k] == '-') {
        split = k;
        break;
      }
    auto imag = [&](std::string_view t) {
      std::string u = detail::trim(t);
      if (u.empty() || u == "+") return Rational(1);
      if (u == "-") return Rational(-1);
      return parse_rational(u);
    };
    if (split == std::string::npos) return {0, imag(s)};
    return {parse_rational(std::string_view(s).substr(0, split)), imag(std::string_view(s).substr(split))};
  }

  std::string to_string() const {
    if (im == 0) return format_rational(re);
    std::string s = format_rational(re);
    s += im < 0 ? "-" : "+";
    s += format_rational(im < 0 ? Rational(-im) : im);
    return s + " i";
  }
};

/// modulus * exp(2 pi i arg), modulus > 0 rational, arg rational in [0, 1).
struct MultiplicativeScalar {
  Rational modulus{1};
  Rational arg{0};

  MultiplicativeScalar() = default;
  MultiplicativeScalar(Rational mod, Rational a) : modulus(std::move(mod)), arg(frac(a)) {
    if (modulus <= 0) throw Error(ErrorCode::invalid_input, "modulus must be positive");
  }

  /// A root of unity exp(2 pi i arg).
  static MultiplicativeScalar unit(Rational a) { return {1, std::move(a)}; }

  friend bool operator==(const MultiplicativeScalar&, const MultiplicativeScalar&) = default;
  friend bool operator<(const MultiplicativeScalar& a, const MultiplicativeScalar& b) {
    return a.modulus < b.modulus || (a.modulus == b.modulus && a.arg < b.arg);
  }
  friend MultiplicativeScalar operator*(const MultiplicativeScalar& a, const MultiplicativeScalar& b) {
    return {a.modulus * b.modulus, a.arg + b.arg};
  }

  MultiplicativeScalar inverse() const { return {1 / modulus, -arg}; }

  MultiplicativeScalar pow(long k) const {
    MultiplicativeScalar base = k < 0 ? inverse() : *this;
    unsigned long e = static_cast<unsigned long>(k < 0 ? -k : k);
    MultiplicativeScalar out;
    while (e) {
      if (e & 1UL) out = out * base;
      base = base * base;
      e >>= 1;
    }
    return out;
  }

  std::complex<double> to_complex() const {
    return std::polar(to_double(modulus), 2.0 * std::numbers::pi * to_double(arg));
  }

  /// "{mod: a/b, arg: p/q}"; either key may be omitted (defaults 1 and 0).
  static MultiplicativeScalar parse(std::string_view text) {
    std::string s = detail::trim(text);
    if (s.size() < 2 || s.front() != '{' || s.back() != '}')
      throw Error(ErrorCode::invalid_input, "multiplicative scalar must look like {mod: a/b, arg: p/q}");
    s = s.substr(1, s.size() - 2);
    Rational mod = 1, a = 0;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      const std::size_t comma = s.find(',', pos);
      const std::string item = detail::trim(std::string_view(s).substr(pos, comma - pos));
      if (!item.empty()) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw Error(ErrorCode::invalid_input, "missing ':' in '" + item + "'");
        const std::string key = detail::trim(std::string_view(item).substr(0, colon));
        const Rational value = parse_rational(std::string_view(item).substr(colon + 1));
        if (key == "mod")
          mod = value;
        else if (key == "arg")
          a = value;
        else
          throw Error(ErrorCode::invalid_input, "unknown key '" + key + "'");
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return {mod, a};
  }

  std::string to_string() const {
    return "{mod: " + format_rational(modulus) + ", arg: " + format_rational(arg) + "}";
  }
};

/// Group structure used by the relation machinery: sums for additive
/// eigenvalues, products for multiplicative ones.
template <class S>
struct scalar_traits;

template <>
struct scalar_traits<AdditiveScalar> {
  static constexpr Mode mode = Mode::additive;
  static AdditiveScalar identity() { return {}; }
  static AdditiveScalar combine(const AdditiveScalar& a, const AdditiveScalar& b) { return a + b; }
  static AdditiveScalar inverse(const AdditiveScalar& a) { return -a; }
  static AdditiveScalar power(const AdditiveScalar& a, long k) { return Rational(k) * a; }
};

template <>
struct scalar_traits<MultiplicativeScalar> {
  static constexpr Mode mode = Mode::multiplicative;
  static MultiplicativeScalar identity() { return {}; }
  static MultiplicativeScalar combine(const MultiplicativeScalar& a, const MultiplicativeScalar& b) { return a * b; }
  static MultiplicativeScalar inverse(const MultiplicativeScalar& a) { return a.inverse(); }
  static MultiplicativeScalar power(const MultiplicativeScalar& a, long k) { return a.pow(k); }
};

template <class S>
concept EigenScalar = requires { scalar_traits<S>::mode; };

}  // namespace dspkit
