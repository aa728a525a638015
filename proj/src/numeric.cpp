#include "tcbubble/numeric.hpp"

#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>

namespace tcbubble {

namespace {

Rational parse_decimal(std::string_view text) {
    std::size_t pos = 0;
    bool negative = false;
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        negative = text[pos] == '-';
        ++pos;
    }
    std::string digits;
    long exponent = 0;
    bool seen_digit = false;
    bool seen_point = false;
    for (; pos < text.size(); ++pos) {
        const char c = text[pos];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            seen_digit = true;
            if (seen_point) --exponent;
        } else if (c == '.' && !seen_point) {
            seen_point = true;
        } else {
            break;
        }
    }
    if (!seen_digit) throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
        ++pos;
        long e = 0;
        const char* first = text.data() + pos;
        const char* last = text.data() + text.size();
        if (first != last && *first == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, last, e);
        if (ec != std::errc() || ptr != last) {
            throw std::invalid_argument("bad exponent in '" + std::string(text) + "'");
        }
        exponent += e;
        pos = text.size();
    }
    if (pos != text.size()) throw std::invalid_argument("not a number: '" + std::string(text) + "'");

    mpz_class numerator(digits, 10);
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
    Rational result = exponent < 0 ? Rational(numerator, scale) : Rational(numerator * scale);
    result.canonicalize();
    return negative ? Rational(-result) : result;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

Rational parse_rational(std::string_view text) {
    text = trim(text);
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return parse_decimal(text);
    const Rational num = parse_decimal(trim(text.substr(0, slash)));
    const Rational den = parse_decimal(trim(text.substr(slash + 1)));
    if (sgn(den) == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    return Rational(num / den);
}

double to_double(const Rational& x) {
    const double d = x.get_d();
    if (sgn(x) == 0 || !std::isfinite(d)) return d;
    const double away = std::nextafter(d, sgn(x) > 0 ? HUGE_VAL : -HUGE_VAL);
    if (!std::isfinite(away)) return d;
    const int cmp = ::cmp(Rational(abs(Rational(away) - x)), Rational(abs(x - Rational(d))));
    if (cmp < 0) return away;
    if (cmp > 0) return d;
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    return (bits & 1) ? away : d;
}

std::string to_string(const Rational& x) { return x.get_str(); }

std::string to_string(double x) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), x);
    return std::string(buffer, ptr);
}

}  // namespace tcbubble
