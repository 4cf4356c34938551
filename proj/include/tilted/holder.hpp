#pragma once

// Super-Hoelder membership: bounds of the form
//
//   val((g - 1) x) >= p^lambda * p^i + mu   for g in the level-(k+i) subgroup.
//
// lambda itself is never materialized. p^lambda is kept as coeff * p^frac with
// a rational coeff and frac in [0, 1), so that the usual exponents c_p + d
// (p^{c_p} = p/(p-1)) stay exact even for fractional d.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tilted/galois.hpp"
#include "tilted/ring.hpp"

namespace tilted {

/// The positive real coeff * p^frac.
struct PLambda {
    Rational coeff = 1;
    Rational frac = 0;

    /// Rational p^lambda.
    static PLambda of(const Rational &value);
    /// p^{k + c_p + d} = p^k * p/(p-1) * p^d.
    static PLambda cp_level(std::int64_t p, int k, const Rational &d = 0);
    /// coeff * p^frac with frac normalized into [0, 1).
    static PLambda make(std::int64_t p, const Rational &coeff, const Rational &frac);

    [[nodiscard]] bool is_rational() const noexcept { return frac.sign() == 0; }
    /// Throws std::logic_error unless is_rational().
    [[nodiscard]] const Rational &rational() const;
    /// Multiplied by r > 0.
    [[nodiscard]] PLambda times(const Rational &r) const;
    /// "3/2" or "3/2*3^{1/2}".
    [[nodiscard]] std::string str(std::int64_t p) const;

    friend bool operator==(const PLambda &, const PLambda &) = default;
};

/// Parses "c" or "c*P^{a/b}" (P must equal p).
PLambda parse_plambda(std::string_view text, std::int64_t p);

/// Sign of x - y as -1, 0, 1, exact even when y is irrational.
int compare(const Rational &x, const PLambda &y, std::int64_t p);

enum class FamilyKind { Tau, Gamma };

struct SubgroupFamily {
    FamilyKind kind = FamilyKind::Tau;
    int k = 0;

    /// tau^{m p^{k+i}} or gamma_{1 + m p^{k+i}}; the gamma family needs k >= 1.
    [[nodiscard]] GroupElem element(std::int64_t p, int i, std::int64_t m) const;
};

enum class ShStatus { Pass, Fail, Inconclusive };
std::string to_string(ShStatus s);

/// One check of the bound at level i.
struct Margin {
    int i = 0;
    Valuation v;        // minimal observed val((g-1)x) over the samples
    ValCap prec;        // precision of the differences
    PLambda plambda_pi; // p^lambda * p^i
    Rational mu = 0;
    ShStatus status = ShStatus::Pass;

    [[nodiscard]] std::string bound_str(std::int64_t p) const;
};

struct ShVerdict {
    ShStatus status = ShStatus::Pass;
    std::vector<Margin> margins;
    /// First violating level and the offending element.
    std::optional<std::pair<int, GroupElem>> witness;
};

/// Default sample set {1, ..., p-1}.
std::vector<std::int64_t> default_samples(std::int64_t p);

/// Verdict for one measured level: Fail on a definite violation, Inconclusive
/// when nothing was seen below a bound that reaches the precision.
ShStatus judge(const Valuation &v, const ValCap &prec, const PLambda &bound_coeff, const Rational &mu,
               std::int64_t p);

/// Folds per-level verdicts: any Fail wins, then any Inconclusive.
ShStatus combine(ShStatus a, ShStatus b);

ShVerdict sh_test(const PerfSeries &x, const SubgroupFamily &fam, const PLambda &plambda, const Rational &mu,
                  int i_max, std::vector<std::int64_t> m_samples = {});

/// Minimal val((g-1)x) over the sampled level-i elements, with the precision
/// of the differences and the minimizing element.
struct LevelMeasure {
    Valuation v;
    ValCap prec;
    GroupElem argmin;
};
LevelMeasure measure_level(const PerfSeries &x, const SubgroupFamily &fam, int i,
                           const std::vector<std::int64_t> &m_samples);

struct ShEstimate {
    Rational plambda_hat;              // p^{lambda hat}, from the last two levels
    Rational mu_hat;                   // v_0 - p^{lambda hat}
    bool consistent = false;           // every consecutive pair gives the same value
    std::vector<Rational> per_level;   // estimate from levels (i, i+1)
    std::vector<Rational> v;           // measured v_i
};

/// Fits p^lambda from measured margins. Throws DegenerateOrbit when x is
/// fixed by every sample and PrecisionExhausted when some level has no known
/// difference term.
ShEstimate sh_estimate(const PerfSeries &x, const SubgroupFamily &fam, int i_max,
                       std::vector<std::int64_t> m_samples = {});
/// Same fit from given exact v_0..v_{i_max}.
ShEstimate fit_levels(const std::vector<Rational> &v, std::int64_t p);

enum class WitnessStatus { Refuted, NotRefutedAtHorizon };
std::string to_string(WitnessStatus s);

struct WitnessReport {
    WitnessStatus status = WitnessStatus::NotRefutedAtHorizon;
    std::vector<Valuation> v;
    /// sign of m_{i+1} - m_i where m_i = v_i - p^lambda p^i
    std::vector<int> step_signs;
    /// First level whose margin drops below mu, if any within the horizon.
    std::optional<int> first_violation;
};

/// Searches for the growth defect that rules out every mu: the margins
/// m_i = v_i - p^lambda p^i must decrease at every step, and by at least as
/// much at each step as at the previous one.
WitnessReport nonmembership_witness(const PerfSeries &x, const SubgroupFamily &fam, const PLambda &plambda,
                                    int i_max, const Rational &mu = 0, std::vector<std::int64_t> m_samples = {});
/// The same test on a precomputed orbit valuation sequence.
WitnessReport witness_from_levels(const std::vector<Valuation> &v, const PLambda &plambda, std::int64_t p,
                                  const Rational &mu = 0);

/// Least n with frobenius^n(x) in F_p((t)); nullopt if x involves u or needs
/// n beyond the cap.
std::optional<int> deperfection_level(const PerfSeries &x);

struct GammaFixedReport {
    bool fixed = true;
    bool structural = true; // no monomial involves u
    std::optional<std::int64_t> witness;
};

GammaFixedReport gamma_fixed_test(const PerfSeries &x, const std::vector<std::int64_t> &a_samples,
                                  const ValCap &prec);

/// mu for f*x + y given that x and y pass at a common p^lambda <= p^k p/(p-1)
/// with mu_x, mu_y and f is a Laurent polynomial in t.
Rational closure_mu(const Rational &val_f, const Rational &val_x, const Rational &mu_x, const Rational &mu_y);

} // namespace tilted
