#include "tilted/holder.hpp"

#include <algorithm>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

namespace tilted {

namespace {

using boost::multiprecision::cpp_int;

cpp_int big_pow(cpp_int base, std::int64_t e) {
    cpp_int r = 1;
    while (e > 0) {
        if (e & 1) r *= base;
        base *= base;
        e >>= 1;
    }
    return r;
}

} // namespace

PLambda PLambda::of(const Rational &value) {
    if (value.sign() <= 0) throw std::invalid_argument("p^lambda must be positive");
    return {value, 0};
}

PLambda PLambda::cp_level(std::int64_t p, int k, const Rational &d) {
    return make(p, pow_int(p, k) * Rational(p, p - 1), d);
}

PLambda PLambda::make(std::int64_t p, const Rational &coeff, const Rational &frac) {
    if (coeff.sign() <= 0) throw std::invalid_argument("p^lambda coefficient must be positive");
    std::int64_t whole = frac.floor();
    if (whole > 64 || whole < -64) throw std::invalid_argument("p^lambda exponent out of range");
    return {coeff * pow_int(p, static_cast<int>(whole)), frac - Rational(whole)};
}

const Rational &PLambda::rational() const {
    if (!is_rational()) throw std::logic_error("p^lambda is irrational");
    return coeff;
}

PLambda PLambda::times(const Rational &r) const {
    if (r.sign() <= 0) throw std::invalid_argument("scaling p^lambda by a non-positive factor");
    return {coeff * r, frac};
}

std::string PLambda::str(std::int64_t p) const {
    if (is_rational()) return coeff.str();
    return coeff.str() + "*" + std::to_string(p) + "^{" + frac.str() + "}";
}

PLambda parse_plambda(std::string_view text, std::int64_t p) {
    auto star = text.find('*');
    auto coeff = Rational::parse(text.substr(0, star));
    if (!coeff || coeff->sign() <= 0) throw ParseError("expected positive rational p^lambda", 0);
    if (star == std::string_view::npos) return PLambda::of(*coeff);
    std::string_view rest = text.substr(star + 1);
    std::string base = std::to_string(p) + "^{";
    if (rest.substr(0, base.size()) != base || rest.empty() || rest.back() != '}') {
        throw ParseError("expected '" + base + "a/b}'", star + 1);
    }
    auto frac = Rational::parse(rest.substr(base.size(), rest.size() - base.size() - 1));
    if (!frac) throw ParseError("bad exponent", star + 1 + base.size());
    return PLambda::make(p, *coeff, *frac);
}

int compare(const Rational &x, const PLambda &y, std::int64_t p) {
    if (y.is_rational()) {
        auto c = x <=> y.coeff;
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    if (x.sign() <= 0) return -1;
    // x <> coeff * p^{a/b}  <=>  (x/coeff)^b <> p^a, all positive.
    Rational q = x / y.coeff;
    std::int64_t a = y.frac.num();
    std::int64_t b = y.frac.den();
    cpp_int lhs = big_pow(cpp_int(q.num()), b);
    cpp_int rhs = big_pow(cpp_int(p), a) * big_pow(cpp_int(q.den()), b);
    if (lhs < rhs) return -1;
    if (lhs > rhs) return 1;
    return 0;
}

GroupElem SubgroupFamily::element(std::int64_t p, int i, std::int64_t m) const {
    std::int64_t step = checked_mul(m, ipow(p, k + i));
    if (kind == FamilyKind::Tau) return GroupElem::tau(step);
    // 1 + m would hit multiples of p; the gamma side starts at 1 + pZ_p.
    if (k + i < 1) throw std::invalid_argument("gamma family needs level k >= 1");
    return GroupElem::gamma(checked_add(1, step));
}

std::string to_string(ShStatus s) {
    switch (s) {
    case ShStatus::Pass: return "pass";
    case ShStatus::Fail: return "fail";
    case ShStatus::Inconclusive: return "inconclusive";
    }
    return "?";
}

std::string to_string(WitnessStatus s) {
    return s == WitnessStatus::Refuted ? "refuted" : "not_refuted_at_horizon";
}

std::string Margin::bound_str(std::int64_t p) const {
    if (plambda_pi.is_rational()) return (plambda_pi.coeff + mu).str();
    std::string out = plambda_pi.str(p);
    if (mu.sign() != 0) out += (mu.sign() > 0 ? " + " : " - ") + abs(mu).str();
    return out;
}

std::vector<std::int64_t> default_samples(std::int64_t p) {
    std::vector<std::int64_t> out;
    for (std::int64_t m = 1; m < p; ++m) out.push_back(m);
    return out;
}

ShStatus judge(const Valuation &v, const ValCap &prec, const PLambda &bound_coeff, const Rational &mu,
               std::int64_t p) {
    if (v.is_exact() && v.value.is_finite() && compare(v.value.value() - mu, bound_coeff, p) < 0) {
        return ShStatus::Fail;
    }
    if (prec.is_finite() && compare(prec.value() - mu, bound_coeff, p) <= 0) return ShStatus::Inconclusive;
    return ShStatus::Pass;
}

ShStatus combine(ShStatus a, ShStatus b) {
    if (a == ShStatus::Fail || b == ShStatus::Fail) return ShStatus::Fail;
    if (a == ShStatus::Inconclusive || b == ShStatus::Inconclusive) return ShStatus::Inconclusive;
    return ShStatus::Pass;
}

static void check_samples(const std::vector<std::int64_t> &m_samples, std::int64_t p) {
    if (m_samples.empty()) throw std::invalid_argument("sample list is empty");
    for (auto m : m_samples) {
        if (m % p == 0) throw std::invalid_argument("sample " + std::to_string(m) + " is divisible by p");
    }
}

LevelMeasure measure_level(const PerfSeries &x, const SubgroupFamily &fam, int i,
                           const std::vector<std::int64_t> &m_samples) {
    const std::int64_t p = x.ring().p;
    LevelMeasure out{Valuation{ValCap::infinity(), false}, ValCap::infinity(), fam.element(p, i, m_samples.front())};
    for (auto m : m_samples) {
        GroupElem g = fam.element(p, i, m);
        PerfSeries diff = act(g, x) - x;
        Valuation v = val(diff);
        out.prec = min(out.prec, diff.prec());
        if (v.value < out.v.value || (v.value == out.v.value && out.v.is_exact() && !v.is_exact())) {
            out.v = v;
            out.argmin = g;
        }
    }
    return out;
}

ShVerdict sh_test(const PerfSeries &x, const SubgroupFamily &fam, const PLambda &plambda, const Rational &mu,
                  int i_max, std::vector<std::int64_t> m_samples) {
    const std::int64_t p = x.ring().p;
    if (m_samples.empty()) m_samples = default_samples(p);
    check_samples(m_samples, p);
    ShVerdict verdict;
    for (int i = 0; i <= i_max; ++i) {
        // Every sample is judged, so a violation is caught even when another
        // sample at the same level has a smaller lower-bound marker.
        Margin margin{i, Valuation{ValCap::infinity(), false}, ValCap::infinity(), plambda.times(pow_int(p, i)), mu,
                      ShStatus::Pass};
        for (auto m : m_samples) {
            GroupElem g = fam.element(p, i, m);
            PerfSeries diff = act(g, x) - x;
            Valuation v = val(diff);
            ShStatus s = judge(v, diff.prec(), margin.plambda_pi, mu, p);
            if (s == ShStatus::Fail && !verdict.witness) verdict.witness = std::make_pair(i, g);
            margin.status = combine(margin.status, s);
            if (v.value < margin.v.value) margin.v = v;
            margin.prec = min(margin.prec, diff.prec());
        }
        verdict.status = combine(verdict.status, margin.status);
        verdict.margins.push_back(margin);
    }
    return verdict;
}

ShEstimate fit_levels(const std::vector<Rational> &v, std::int64_t p) {
    if (v.size() < 2) throw std::invalid_argument("fit needs at least two levels");
    ShEstimate est;
    est.v = v;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        est.per_level.push_back((v[i + 1] - v[i]) / (pow_int(p, static_cast<int>(i)) * Rational(p - 1)));
    }
    est.plambda_hat = est.per_level.back();
    est.mu_hat = v.front() - est.plambda_hat;
    est.consistent = std::all_of(est.per_level.begin(), est.per_level.end(),
                                 [&](const Rational &r) { return r == est.plambda_hat; });
    return est;
}

ShEstimate sh_estimate(const PerfSeries &x, const SubgroupFamily &fam, int i_max,
                       std::vector<std::int64_t> m_samples) {
    const std::int64_t p = x.ring().p;
    if (i_max < 2) throw std::invalid_argument("sh_estimate needs i_max >= 2");
    if (m_samples.empty()) m_samples = default_samples(p);
    check_samples(m_samples, p);
    std::vector<Valuation> measured;
    for (int i = 0; i <= i_max; ++i) measured.push_back(measure_level(x, fam, i, m_samples).v);
    auto fixed = [](const Valuation &v) { return v.value.is_infinite(); };
    if (std::all_of(measured.begin(), measured.end(), fixed)) {
        throw DegenerateOrbit("x is fixed by every sampled element");
    }
    std::vector<Rational> v;
    for (std::size_t i = 0; i < measured.size(); ++i) {
        if (!measured[i].is_exact()) {
            throw PrecisionExhausted("orbit differences vanish to precision at level " + std::to_string(i));
        }
        if (fixed(measured[i])) throw DegenerateOrbit("x is fixed at level " + std::to_string(i));
        v.push_back(measured[i].value.value());
    }
    ShEstimate est = fit_levels(v, p);
    if (std::all_of(est.per_level.begin(), est.per_level.end(), [](const Rational &r) { return r.sign() == 0; })) {
        throw DegenerateOrbit("all level differences vanish");
    }
    return est;
}

WitnessReport witness_from_levels(const std::vector<Valuation> &v, const PLambda &plambda, std::int64_t p,
                                  const Rational &mu) {
    WitnessReport rep;
    rep.v = v;
    bool all_exact = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_exact() || v[i].value.is_infinite()) {
            all_exact = false;
            continue;
        }
        if (!rep.first_violation &&
            compare(v[i].value.value() - mu, plambda.times(pow_int(p, static_cast<int>(i))), p) < 0) {
            rep.first_violation = static_cast<int>(i);
        }
    }
    if (!all_exact || v.size() < 3) return rep;

    // m_{i+1} - m_i = (v_{i+1} - v_i) - p^lambda p^i (p-1); the second
    // difference compares against p^lambda p^i (p-1)^2.
    bool refuted = true;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        Rational dv = v[i + 1].value.value() - v[i].value.value();
        int s = compare(dv, plambda.times(pow_int(p, static_cast<int>(i)) * Rational(p - 1)), p);
        rep.step_signs.push_back(s);
        if (s >= 0) refuted = false;
        if (i + 2 < v.size()) {
            Rational ddv = v[i + 2].value.value() - 2 * v[i + 1].value.value() + v[i].value.value();
            Rational scale = pow_int(p, static_cast<int>(i)) * Rational((p - 1) * (p - 1));
            if (compare(ddv, plambda.times(scale), p) > 0) refuted = false;
        }
    }
    if (refuted) rep.status = WitnessStatus::Refuted;
    return rep;
}

WitnessReport nonmembership_witness(const PerfSeries &x, const SubgroupFamily &fam, const PLambda &plambda,
                                    int i_max, const Rational &mu, std::vector<std::int64_t> m_samples) {
    const std::int64_t p = x.ring().p;
    if (m_samples.empty()) m_samples = default_samples(p);
    check_samples(m_samples, p);
    std::vector<Valuation> v;
    for (int i = 0; i <= i_max; ++i) v.push_back(measure_level(x, fam, i, m_samples).v);
    return witness_from_levels(v, plambda, p, mu);
}

std::optional<int> deperfection_level(const PerfSeries &x) {
    const Ring &ring = x.ring();
    int level = 0;
    for (const auto &term : x.terms()) {
        if (term.mono.eu != 0) return std::nullopt;
        level = std::max(level, term.mono.t_exp(ring).kden);
    }
    if (level > ring.denom_cap) return std::nullopt;
    return level;
}

GammaFixedReport gamma_fixed_test(const PerfSeries &x, const std::vector<std::int64_t> &a_samples,
                                  const ValCap &prec) {
    GammaFixedReport rep;
    rep.structural = std::none_of(x.terms().begin(), x.terms().end(),
                                  [](const Term &term) { return term.mono.eu != 0; });
    for (auto a : a_samples) {
        PerfSeries diff = (act(GroupElem::gamma(a), x) - x).truncated(prec);
        if (!diff.empty()) {
            rep.fixed = false;
            rep.witness = a;
            break;
        }
    }
    return rep;
}

Rational closure_mu(const Rational &val_f, const Rational &val_x, const Rational &mu_x, const Rational &mu_y) {
    return min(val_f + min(mu_x, val_x), mu_y);
}

} // namespace tilted
