#pragma once

// Truncated perfected Laurent series over F_p in two variables:
//
//   u = eps - 1   with val(u) = p/(p-1)
//   t = pi (tilt) with val(t) = 1
//
// Exponents live in Z[1/p] with denominators bounded by p^D. Internally every
// exponent is stored as an integer multiple of 1/p^D and every monomial
// valuation as an integer multiple of 1/((p-1) p^D), so the hot paths never
// touch rationals.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tilted/errors.hpp"
#include "tilted/rational.hpp"

namespace tilted {

/// Arithmetic context shared by all series of one computation.
struct Ring {
    std::int64_t p = 3;
    /// Denominator cap exponent D: exponents have denominators dividing p^D.
    int denom_cap = 6;
    /// Absolute precision used when an exact input forces an infinite
    /// expansion (inverses, negative eps powers).
    Rational work_prec = 40;

    /// Throws std::invalid_argument unless p is an odd prime, D >= 1 and
    /// work_prec > 0.
    void validate() const;

    /// p^D
    [[nodiscard]] std::int64_t exp_scale() const;
    /// (p-1) p^D
    [[nodiscard]] std::int64_t val_scale() const;
    /// val(u) = p/(p-1)
    [[nodiscard]] Rational val_u() const { return Rational(p, p - 1); }

    [[nodiscard]] Ring with_work_prec(Rational prec) const {
        Ring r = *this;
        r.work_prec = prec;
        return r;
    }

    /// Same p and D; work_prec may differ.
    [[nodiscard]] bool compatible(const Ring &other) const noexcept {
        return p == other.p && denom_cap == other.denom_cap;
    }
};

bool is_prime(std::int64_t n);

/// An exponent num / p^kden in Z[1/p], normalized so that kden = 0 or
/// p does not divide num.
struct PExp {
    std::int64_t num = 0;
    int kden = 0;

    static PExp normalized(std::int64_t num, int kden, std::int64_t p);
    /// Throws CapExceeded if the denominator of r is not a power of p, or is
    /// a power above the ring's cap.
    static PExp from_rational(const Rational &r, const Ring &ring);

    [[nodiscard]] Rational value(std::int64_t p) const;
    /// num * p^(D - kden).
    [[nodiscard]] std::int64_t scaled(const Ring &ring) const;

    friend bool operator==(const PExp &, const PExp &) = default;
};

/// u^eu t^et with both exponents stored scaled by p^D.
struct Monomial {
    std::int64_t eu = 0;
    std::int64_t et = 0;

    [[nodiscard]] PExp u_exp(const Ring &ring) const;
    [[nodiscard]] PExp t_exp(const Ring &ring) const;
    /// Scaled valuation eu*p + et*(p-1), in units of 1/((p-1) p^D).
    [[nodiscard]] std::int64_t scaled_val(const Ring &ring) const;
    [[nodiscard]] Rational val(const Ring &ring) const;

    friend bool operator==(const Monomial &, const Monomial &) = default;
};

struct Term {
    Monomial mono;
    std::int64_t sval = 0; // cached Monomial::scaled_val
    std::uint32_t coeff = 0;
};

/// Exact valuation, or the lower-bound marker ">= prec" for a series with
/// no known terms.
struct Valuation {
    ValCap value;
    bool lower_bound = false;

    [[nodiscard]] bool is_exact() const noexcept { return !lower_bound; }
    [[nodiscard]] std::string str() const;

    friend bool operator==(const Valuation &, const Valuation &) = default;
};

/// A finitely supported series known modulo terms of valuation >= prec.
///
/// Terms are kept sorted by (valuation, eu, et) with nonzero coefficients in
/// [1, p), and every term has valuation strictly below prec.
class PerfSeries {
  public:
    explicit PerfSeries(const Ring &ring, ValCap prec = ValCap::infinity());

    static PerfSeries zero(const Ring &ring, ValCap prec = ValCap::infinity()) { return PerfSeries(ring, prec); }
    static PerfSeries constant(const Ring &ring, std::int64_t c, ValCap prec = ValCap::infinity());
    static PerfSeries one(const Ring &ring) { return constant(ring, 1); }
    /// c * u^eu * t^et with rational exponents; throws CapExceeded.
    static PerfSeries monomial(const Ring &ring, std::int64_t c, const Rational &eu, const Rational &et,
                               ValCap prec = ValCap::infinity());
    static PerfSeries u(const Ring &ring) { return monomial(ring, 1, 1, 0); }
    static PerfSeries t(const Ring &ring) { return monomial(ring, 1, 0, 1); }
    static PerfSeries from_mono(const Ring &ring, std::int64_t c, Monomial m, ValCap prec = ValCap::infinity());

    [[nodiscard]] const Ring &ring() const noexcept { return ring_; }
    [[nodiscard]] const ValCap &prec() const noexcept { return prec_; }
    [[nodiscard]] std::span<const Term> terms() const noexcept { return terms_; }
    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
    /// No known terms (zero modulo the precision).
    [[nodiscard]] bool empty() const noexcept { return terms_.empty(); }
    [[nodiscard]] bool is_exact() const noexcept { return prec_.is_infinite(); }
    /// Coefficient of m in [0, p).
    [[nodiscard]] std::uint32_t coefficient(const Monomial &m) const;

    [[nodiscard]] Valuation val() const;
    /// Lower bound usable in precision propagation: val() or prec if empty.
    [[nodiscard]] ValCap val_bound() const;

    /// Drops every term of valuation >= cap and lowers prec to cap.
    [[nodiscard]] PerfSeries truncated(const ValCap &cap) const;

    /// Terms satisfying pred, same prec.
    template <typename Pred>
    [[nodiscard]] PerfSeries filtered(Pred pred) const {
        PerfSeries out(ring_, prec_);
        for (const auto &term : terms_) {
            if (pred(term)) out.terms_.push_back(term);
        }
        return out;
    }

    PerfSeries operator-() const;
    friend PerfSeries operator+(const PerfSeries &x, const PerfSeries &y);
    friend PerfSeries operator-(const PerfSeries &x, const PerfSeries &y);
    friend PerfSeries operator*(const PerfSeries &x, const PerfSeries &y);
    PerfSeries &operator+=(const PerfSeries &y) { return *this = *this + y; }
    PerfSeries &operator-=(const PerfSeries &y) { return *this = *this - y; }
    PerfSeries &operator*=(const PerfSeries &y) { return *this = *this * y; }

    [[nodiscard]] PerfSeries scaled(std::int64_t c) const;
    /// Multiplication by c * m; exact shift, prec moves by val(m).
    [[nodiscard]] PerfSeries shifted(const Monomial &m, std::int64_t c = 1) const;

    /// Structural equality: same terms and same prec.
    friend bool operator==(const PerfSeries &x, const PerfSeries &y);

    /// x - y has no known terms below min(prec x, prec y).
    [[nodiscard]] bool equals_to_precision(const PerfSeries &y) const;

  private:
    friend class SeriesBuilder;
    friend PerfSeries frobenius(const PerfSeries &x, int n);
    friend PerfSeries frobenius_inv(const PerfSeries &x, int n);

    void check_compatible(const PerfSeries &other) const;

    Ring ring_;
    std::vector<Term> terms_;
    ValCap prec_;
};

/// Accumulates (monomial, coefficient) pairs and produces a normalized
/// series truncated to a cap.
class SeriesBuilder {
  public:
    SeriesBuilder(const Ring &ring, ValCap prec);

    void add(const Monomial &m, std::int64_t coeff);
    void add(const Term &term) { add(term.mono, term.coeff); }
    [[nodiscard]] PerfSeries build() &&;

  private:
    Ring ring_;
    ValCap prec_;
    bool bounded_;
    std::int64_t cut_ = 0;
    std::vector<Term> raw_;
};

/// Scaled valuation cut for a cap: a term is kept iff sval < cut.
std::int64_t scaled_cut(const ValCap &cap, const Ring &ring);

Valuation val(const PerfSeries &x);

/// Exponents and prec multiplied by p^n.
PerfSeries frobenius(const PerfSeries &x, int n = 1);
/// Exponents and prec divided by p^n; throws CapExceeded at the cap.
PerfSeries frobenius_inv(const PerfSeries &x, int n = 1);

/// Inverse of a series with a strictly dominant leading monomial. Infinite
/// expansions are truncated at min(cap, propagated precision); an infinite
/// cap falls back to ring().work_prec.
PerfSeries invert(const PerfSeries &x, ValCap cap = ValCap::infinity());

/// x^n for any integer n, negative powers through invert().
PerfSeries pow(const PerfSeries &x, std::int64_t n, ValCap cap = ValCap::infinity());

/// Parses the series grammar; throws ParseError or CapExceeded.
PerfSeries parse_series(std::string_view text, const Ring &ring);
/// Canonical text form: ascending valuation, ties by (eu, et).
std::string format_series(const PerfSeries &x);

std::string format_pexp(const PExp &e, std::int64_t p);

} // namespace tilted
