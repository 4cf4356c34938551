#include "tilted/rational.hpp"

#include <charconv>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace tilted {

namespace {

__extension__ typedef __int128 i128;

std::int64_t narrow(i128 v) {
    if (v > std::numeric_limits<std::int64_t>::max() || v < -std::numeric_limits<std::int64_t>::max()) {
        throw std::overflow_error("rational arithmetic overflow");
    }
    return static_cast<std::int64_t>(v);
}

i128 gcd128(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

Rational make(i128 num, i128 den) {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    i128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return Rational(narrow(num), narrow(den));
}

} // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    if (den < 0) {
        if (num == std::numeric_limits<std::int64_t>::min() || den == std::numeric_limits<std::int64_t>::min()) {
            throw std::overflow_error("rational arithmetic overflow");
        }
        num = -num;
        den = -den;
    }
    std::int64_t g = std::gcd(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    num_ = num;
    den_ = den;
}

std::int64_t Rational::floor() const noexcept {
    std::int64_t q = num_ / den_;
    if (num_ % den_ != 0 && num_ < 0) --q;
    return q;
}

std::int64_t Rational::ceil() const noexcept {
    std::int64_t q = num_ / den_;
    if (num_ % den_ != 0 && num_ > 0) ++q;
    return q;
}

Rational Rational::operator-() const { return Rational(narrow(-static_cast<i128>(num_)), den_); }

Rational &Rational::operator+=(const Rational &rhs) {
    *this = make(static_cast<i128>(num_) * rhs.den_ + static_cast<i128>(rhs.num_) * den_,
                 static_cast<i128>(den_) * rhs.den_);
    return *this;
}

Rational &Rational::operator-=(const Rational &rhs) {
    *this = make(static_cast<i128>(num_) * rhs.den_ - static_cast<i128>(rhs.num_) * den_,
                 static_cast<i128>(den_) * rhs.den_);
    return *this;
}

Rational &Rational::operator*=(const Rational &rhs) {
    *this = make(static_cast<i128>(num_) * rhs.num_, static_cast<i128>(den_) * rhs.den_);
    return *this;
}

Rational &Rational::operator/=(const Rational &rhs) {
    if (rhs.num_ == 0) throw std::domain_error("rational division by zero");
    *this = make(static_cast<i128>(num_) * rhs.den_, static_cast<i128>(den_) * rhs.num_);
    return *this;
}

std::strong_ordering operator<=>(const Rational &a, const Rational &b) {
    i128 lhs = static_cast<i128>(a.num_) * b.den_;
    i128 rhs = static_cast<i128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

std::string Rational::str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

std::optional<Rational> Rational::parse(std::string_view text) {
    auto parse_int = [](std::string_view s, std::int64_t &out, bool allow_sign) {
        if (s.empty()) return false;
        if (!allow_sign && (s.front() == '-' || s.front() == '+')) return false;
        if (s.front() == '+') s.remove_prefix(1);
        auto res = std::from_chars(s.data(), s.data() + s.size(), out);
        return res.ec == std::errc() && res.ptr == s.data() + s.size();
    };
    std::int64_t num = 0;
    std::int64_t den = 1;
    auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        if (!parse_int(text, num, true)) return std::nullopt;
    } else {
        if (!parse_int(text.substr(0, slash), num, true)) return std::nullopt;
        if (!parse_int(text.substr(slash + 1), den, false) || den == 0) return std::nullopt;
    }
    return Rational(num, den);
}

Rational Rational::pow(int e) const {
    Rational base = *this;
    if (e < 0) {
        base = Rational(1) / base;
        e = -e;
    }
    Rational result(1);
    while (e > 0) {
        if (e & 1) result *= base;
        e >>= 1;
        if (e > 0) base *= base;
    }
    return result;
}

Rational abs(const Rational &r) { return r.sign() < 0 ? -r : r; }
Rational min(const Rational &a, const Rational &b) { return b < a ? b : a; }
Rational max(const Rational &a, const Rational &b) { return a < b ? b : a; }

Rational pow_int(std::int64_t p, int e) { return Rational(p).pow(e); }

int vp(std::int64_t m, std::int64_t p) {
    if (m == 0) throw std::domain_error("vp of zero");
    int v = 0;
    while (m % p == 0) {
        m /= p;
        ++v;
    }
    return v;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("integer overflow");
    return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("integer overflow");
    return r;
}

std::int64_t ipow(std::int64_t base, int e) {
    if (e < 0) throw std::domain_error("ipow with negative exponent");
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) r = checked_mul(r, base);
    return r;
}

const Rational &ValCap::value() const {
    if (!finite_) throw std::logic_error("value() of infinite cap");
    return value_;
}

ValCap operator+(const ValCap &a, const ValCap &b) {
    if (!a.finite_ || !b.finite_) return ValCap::infinity();
    return ValCap(a.value_ + b.value_);
}

ValCap operator-(const ValCap &a, const Rational &b) {
    if (!a.finite_) return a;
    return ValCap(a.value_ - b);
}

ValCap operator*(const ValCap &a, const Rational &positive) {
    if (!a.finite_) return a;
    return ValCap(a.value_ * positive);
}

bool operator==(const ValCap &a, const ValCap &b) {
    if (a.finite_ != b.finite_) return false;
    return !a.finite_ || a.value_ == b.value_;
}

std::strong_ordering operator<=>(const ValCap &a, const ValCap &b) {
    if (!a.finite_ && !b.finite_) return std::strong_ordering::equal;
    if (!a.finite_) return std::strong_ordering::greater;
    if (!b.finite_) return std::strong_ordering::less;
    return a.value_ <=> b.value_;
}

std::string ValCap::str() const { return finite_ ? value_.str() : std::string("inf"); }

ValCap min(const ValCap &a, const ValCap &b) { return b < a ? b : a; }
ValCap max(const ValCap &a, const ValCap &b) { return a < b ? b : a; }

} // namespace tilted
