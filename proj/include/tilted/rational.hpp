#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tilted {

/// Exact rational with 64-bit numerator and denominator.
///
/// Always normalized: den > 0 and gcd(|num|, den) = 1. Every operation is
/// overflow-checked through 128-bit intermediates and throws
/// std::overflow_error instead of wrapping.
class Rational {
  public:
    constexpr Rational() noexcept = default;
    Rational(std::int64_t num) noexcept : num_(num) {} // NOLINT(implicit)
    Rational(std::int64_t num, std::int64_t den);

    [[nodiscard]] std::int64_t num() const noexcept { return num_; }
    [[nodiscard]] std::int64_t den() const noexcept { return den_; }

    [[nodiscard]] bool is_integer() const noexcept { return den_ == 1; }
    [[nodiscard]] int sign() const noexcept { return (num_ > 0) - (num_ < 0); }

    /// Largest integer <= *this.
    [[nodiscard]] std::int64_t floor() const noexcept;
    /// Smallest integer >= *this.
    [[nodiscard]] std::int64_t ceil() const noexcept;

    Rational operator-() const;
    Rational &operator+=(const Rational &rhs);
    Rational &operator-=(const Rational &rhs);
    Rational &operator*=(const Rational &rhs);
    Rational &operator/=(const Rational &rhs);

    friend Rational operator+(Rational a, const Rational &b) { return a += b; }
    friend Rational operator-(Rational a, const Rational &b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational &b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational &b) { return a /= b; }

    friend bool operator==(const Rational &, const Rational &) = default;
    friend std::strong_ordering operator<=>(const Rational &a, const Rational &b);

    /// "a/b", or "a" when the denominator is 1.
    [[nodiscard]] std::string str() const;
    /// Parses ['-'] digits ['/' digits]. Returns nullopt on malformed input.
    static std::optional<Rational> parse(std::string_view text);

    /// Integer power with exponent of either sign.
    [[nodiscard]] Rational pow(int e) const;

  private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

Rational abs(const Rational &r);
Rational min(const Rational &a, const Rational &b);
Rational max(const Rational &a, const Rational &b);

/// p^e as an exact rational, e of either sign.
Rational pow_int(std::int64_t p, int e);

/// p-adic valuation of a nonzero integer.
int vp(std::int64_t m, std::int64_t p);

/// Checked integer helpers; throw std::overflow_error.
std::int64_t checked_add(std::int64_t a, std::int64_t b);
std::int64_t checked_mul(std::int64_t a, std::int64_t b);
std::int64_t ipow(std::int64_t base, int e);

/// Extended rational: a finite exact rational or +infinity. Used for
/// precision caps and for the valuation of exact zero.
class ValCap {
  public:
    constexpr ValCap() noexcept = default; // +infinity
    ValCap(Rational r) noexcept : finite_(true), value_(r) {} // NOLINT(implicit)
    ValCap(std::int64_t r) noexcept : finite_(true), value_(r) {} // NOLINT(implicit)

    static ValCap infinity() noexcept { return {}; }

    [[nodiscard]] bool is_finite() const noexcept { return finite_; }
    [[nodiscard]] bool is_infinite() const noexcept { return !finite_; }
    /// Precondition: is_finite().
    [[nodiscard]] const Rational &value() const;

    friend ValCap operator+(const ValCap &a, const ValCap &b);
    friend ValCap operator-(const ValCap &a, const Rational &b);
    friend ValCap operator*(const ValCap &a, const Rational &positive);

    friend bool operator==(const ValCap &a, const ValCap &b);
    friend std::strong_ordering operator<=>(const ValCap &a, const ValCap &b);

    /// "inf" or the rational string.
    [[nodiscard]] std::string str() const;

  private:
    bool finite_ = false;
    Rational value_;
};

ValCap min(const ValCap &a, const ValCap &b);
ValCap max(const ValCap &a, const ValCap &b);

} // namespace tilted
