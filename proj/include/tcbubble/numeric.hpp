#pragma once

// Scalar support shared by every module. Two scalar types are supported:
// `double` (float mode) and `Rational` (exact mode, GMP rationals).

#include <gmpxx.h>

#include <cmath>
#include <string>
#include <string_view>
#include <type_traits>

namespace tcbubble {

using Rational = mpq_class;

template <class T>
inline constexpr bool is_exact_v = std::is_same_v<T, Rational>;

inline double to_double(double x) { return x; }
// Rounds to nearest, ties to even. mpq_get_d truncates toward zero.
double to_double(const Rational& x);

// Accepts "p/q", integers, and decimal literals with an optional exponent
// ("0.25", "-1.5e-3"). Decimal literals are converted exactly.
Rational parse_rational(std::string_view text);

// "p" when the denominator is 1, "p/q" otherwise.
std::string to_string(const Rational& x);
// Shortest round-trip decimal representation.
std::string to_string(double x);

template <class T>
T parse_number(std::string_view text) {
    if constexpr (is_exact_v<T>) {
        return parse_rational(text);
    } else {
        return to_double(parse_rational(text));
    }
}

template <class To, class From>
To convert_scalar(const From& x) {
    if constexpr (std::is_same_v<To, From>) {
        return x;
    } else if constexpr (is_exact_v<To>) {
        return Rational(x);
    } else {
        return to_double(x);
    }
}

inline int sign(double x) { return (x > 0) - (x < 0); }
inline int sign(const Rational& x) { return sgn(x); }

inline double abs_value(double x) { return std::fabs(x); }
inline Rational abs_value(const Rational& x) { return abs(x); }

// Comparisons that are literal in exact mode and relative-tolerant in float
// mode. The tolerance argument is ignored for rationals.
template <class T>
bool approx_eq(const T& a, const T& b, double tol) {
    if constexpr (is_exact_v<T>) {
        return a == b;
    } else {
        return std::fabs(a - b) <= tol * (1.0 + std::fmax(std::fabs(a), std::fabs(b)));
    }
}

template <class T>
bool approx_le(const T& a, const T& b, double tol) {
    if constexpr (is_exact_v<T>) {
        return a <= b;
    } else {
        return a <= b + tol * (1.0 + std::fmax(std::fabs(a), std::fabs(b)));
    }
}

template <class T>
bool approx_zero(const T& a, double tol) {
    if constexpr (is_exact_v<T>) {
        return sgn(a) == 0;
    } else {
        return std::fabs(a) <= tol;
    }
}

}  // namespace tcbubble
