#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "pruw/errors.hpp"

namespace pruw {

using i128 = __int128;
using u128 = unsigned __int128;

namespace detail {

inline i128 checked_add(i128 a, i128 b) {
    i128 r;
    if (__builtin_add_overflow(a, b, &r)) fail(Errc::overflow, "rational addition overflow");
    return r;
}

inline i128 checked_mul(i128 a, i128 b) {
    i128 r;
    if (__builtin_mul_overflow(a, b, &r)) fail(Errc::overflow, "rational multiplication overflow");
    return r;
}

inline i128 iabs(i128 x) { return x < 0 ? -x : x; }

inline i128 gcd128(i128 a, i128 b) {
    a = iabs(a);
    b = iabs(b);
    while (b) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

inline std::string i128_to_string(i128 x) {
    if (x == 0) return "0";
    bool neg = x < 0;
    u128 m = neg ? u128(0) - u128(x) : u128(x);
    std::string s;
    while (m) {
        s.push_back(char('0' + int(m % 10)));
        m /= 10;
    }
    if (neg) s.push_back('-');
    return {s.rbegin(), s.rend()};
}

} // namespace detail

/// Exact rational number, always normalized (den > 0, gcd(|num|, den) = 1).
/// Backed by 128-bit integers with overflow detection: every result is either
/// exact or an Errc::overflow error, never silently wrong.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {} // NOLINT(google-explicit-constructor)
    Rational(i128 n, i128 d) : num_(n), den_(d) { normalize(); }

    i128 num() const { return num_; }
    i128 den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_integer() const { return den_ == 1; }

    Rational operator+(const Rational& o) const {
        return Rational(detail::checked_add(detail::checked_mul(num_, o.den_), detail::checked_mul(o.num_, den_)),
                        detail::checked_mul(den_, o.den_));
    }
    Rational operator-(const Rational& o) const { return *this + Rational(-o.num_, o.den_); }
    Rational operator*(const Rational& o) const {
        return Rational(detail::checked_mul(num_, o.num_), detail::checked_mul(den_, o.den_));
    }
    Rational operator/(const Rational& o) const {
        if (o.num_ == 0) fail(Errc::division_by_zero, "rational division by zero");
        return Rational(detail::checked_mul(num_, o.den_), detail::checked_mul(den_, o.num_));
    }
    Rational operator-() const { return Rational(-num_, den_); }

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const {
        return detail::checked_mul(num_, o.den_) < detail::checked_mul(o.num_, den_);
    }
    bool operator<=(const Rational& o) const { return !(o < *this); }
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator>=(const Rational& o) const { return !(*this < o); }

    /// Parses "a/b", an integer, or a decimal string ("0.7" means exactly 7/10).
    static Rational parse(std::string_view s) {
        if (s.empty()) fail(Errc::bad_value, "empty rational");
        bool neg = false;
        std::size_t i = 0;
        if (s[0] == '+' || s[0] == '-') {
            neg = s[0] == '-';
            i = 1;
        }
        i128 num = 0, den = 1;
        bool digits = false, in_frac = false, in_den = false;
        for (; i < s.size(); ++i) {
            char c = s[i];
            if (c >= '0' && c <= '9') {
                i128 d = c - '0';
                if (in_den)
                    den = detail::checked_add(detail::checked_mul(den, 10), d);
                else {
                    num = detail::checked_add(detail::checked_mul(num, 10), d);
                    if (in_frac) den = detail::checked_mul(den, 10);
                }
                digits = true;
            } else if (c == '.' && !in_frac && !in_den) {
                in_frac = true;
            } else if (c == '/' && !in_frac && !in_den && digits) {
                in_den = true;
                den = 0;
                digits = false;
            } else {
                fail(Errc::bad_value, "malformed rational: " + std::string(s));
            }
        }
        if (!digits) fail(Errc::bad_value, "malformed rational: " + std::string(s));
        if (den == 0) fail(Errc::bad_value, "rational with zero denominator: " + std::string(s));
        return Rational(neg ? -num : num, den);
    }

    std::string to_fraction_string() const {
        if (den_ == 1) return detail::i128_to_string(num_);
        return detail::i128_to_string(num_) + "/" + detail::i128_to_string(den_);
    }

    /// Decimal expansion by long division. Exact when it terminates within
    /// max_frac_digits, truncated otherwise.
    std::string to_decimal_string(int max_frac_digits = 10) const {
        i128 n = detail::iabs(num_);
        std::string s = (num_ < 0 ? "-" : "") + detail::i128_to_string(n / den_);
        i128 rem = n % den_;
        if (rem == 0) return s;
        s.push_back('.');
        for (int k = 0; k < max_frac_digits && rem != 0; ++k) {
            rem = detail::checked_mul(rem, 10);
            s.push_back(char('0' + int(rem / den_)));
            rem %= den_;
        }
        return s;
    }

private:
    void normalize() {
        if (den_ == 0) fail(Errc::division_by_zero, "rational with zero denominator");
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        i128 g = detail::gcd128(num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    i128 num_, den_;
};

} // namespace pruw
