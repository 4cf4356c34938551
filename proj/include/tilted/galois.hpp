#pragma once

// The semidirect group generated by tau (fixes eps, sends t to eps*t) and
// gamma_a (fixes t, sends eps to eps^a), acting on PerfSeries.
//
// An element (c, a) is the operator tau^c o gamma_a: gamma_a is applied
// first. The group law follows from gamma_a tau gamma_a^{-1} = tau^a:
//
//   (c1, a1) * (c2, a2) = (c1 + a1*c2, a1*a2).

#include <cstdint>
#include <string>
#include <string_view>

#include "tilted/ring.hpp"

namespace tilted {

struct GroupElem {
    std::int64_t c = 0;
    std::int64_t a = 1;
    /// 0 when c and a are exact integers; otherwise p^N, meaning c and a are
    /// only known modulo p^N (stored reduced into [0, p^N)).
    std::int64_t modulus = 0;

    static GroupElem identity() { return {}; }
    static GroupElem tau(std::int64_t c = 1) { return {c, 1, 0}; }
    static GroupElem gamma(std::int64_t a) { return {0, a, 0}; }

    [[nodiscard]] bool is_exact() const noexcept { return modulus == 0; }

    friend bool operator==(const GroupElem &, const GroupElem &) = default;
};

/// Throws std::invalid_argument if p divides a.
void check_group_elem(const GroupElem &g, std::int64_t p);

GroupElem compose(const GroupElem &g, const GroupElem &h);

/// Inverse with c and a reduced modulo p^accuracy. When a = +-1 the inverse
/// is an exact integer pair and the accuracy is ignored.
GroupElem inverse(const GroupElem &g, std::int64_t p, int accuracy);

/// Smallest N such that an element known modulo p^N acts correctly on every
/// series of the ring up to absolute precision prec, whatever its exponent
/// denominators (bounded by p^D) and valuation (>= min_val).
int required_accuracy(const Ring &ring, const Rational &prec, const Rational &min_val = 0);

/// tau-level membership: c = 0 mod p^k.
bool in_tau_level(const GroupElem &g, std::int64_t p, int k);
/// gamma-level membership: c = 0 and a = 1 mod p^k.
bool in_gamma_level(const GroupElem &g, std::int64_t p, int k);

/// (1+u)^r for r in Z[1/p], as (1 + u^{p^e})^m with r = m p^e and p not
/// dividing m. Positive m expands the binomial through the base-p digits of m
/// (finite, exact when cap is infinite); negative m goes through invert().
PerfSeries eps_pow(const Rational &r, const Ring &ring, ValCap cap = ValCap::infinity());

/// The operator tau^c o gamma_a applied to x. The result has the precision
/// of x (capped at work_prec when g is only approximately known or an
/// infinite expansion is forced by an exact input).
PerfSeries act(const GroupElem &g, const PerfSeries &x);

/// p^{v_p(m)} * p/(p-1), the valuation of eps^m - 1.
Rational lemma_eps_val(std::int64_t m, std::int64_t p);

/// Parses "tau^c * gamma_a", "tau^c", "gamma_a", "tau", "id".
GroupElem parse_group_elem(std::string_view text);
std::string format_group_elem(const GroupElem &g);

} // namespace tilted
