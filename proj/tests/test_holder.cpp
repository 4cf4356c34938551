#include "doctest.h"

#include <random>

#include "support.hpp"
#include "tilted/holder.hpp"

using namespace tilted;
using tilted::testing::random_laurent;
using tilted::testing::ring_p;

namespace {

PerfSeries S(const char *text, const Ring &ring) { return parse_series(text, ring); }

const SubgroupFamily tau0{FamilyKind::Tau, 0};

// p^e * p/(p-1) computed without the library's helpers.
Rational cp_scaled(std::int64_t p, int e) {
    Rational r(p, p - 1);
    for (int i = 0; i < e; ++i) r *= Rational(p);
    for (int i = 0; i > e; --i) r /= Rational(p);
    return r;
}

} // namespace

TEST_CASE("exact comparison with irrational p^lambda") {
    // 3/2 * sqrt(3) ~ 2.598
    PLambda pl = PLambda::cp_level(3, 0, Rational(1, 2));
    CHECK(pl.coeff == Rational(3, 2));
    CHECK(pl.frac == Rational(1, 2));
    CHECK(compare(Rational(5, 2), pl, 3) < 0);
    CHECK(compare(Rational(13, 5), pl, 3) > 0);
    CHECK(compare(Rational(-1), pl, 3) < 0);
    CHECK(compare(Rational(3, 2), PLambda::of(Rational(3, 2)), 3) == 0);
    CHECK(PLambda::make(3, 1, Rational(5, 2)) == PLambda{9, Rational(1, 2)});
    CHECK(parse_plambda("3/2*3^{1/2}", 3) == pl);
    CHECK(parse_plambda("3/2", 3) == PLambda::of(Rational(3, 2)));
    CHECK_THROWS_AS(parse_plambda("3/2*5^{1/2}", 3), ParseError);
}

TEST_CASE("t passes at the cp level with margins on the nose") {
    Ring r3 = ring_p(3);
    auto t = PerfSeries::t(r3);
    for (int k : {0, 1}) {
        auto verdict = sh_test(t, SubgroupFamily{FamilyKind::Tau, k}, PLambda::cp_level(3, k), 1, 4);
        CHECK(verdict.status == ShStatus::Pass);
        REQUIRE(verdict.margins.size() == 5);
        for (const auto &m : verdict.margins) {
            CHECK(m.v.value == ValCap(cp_scaled(3, k + m.i) + 1));
            CHECK(m.bound_str(3) == (cp_scaled(3, k + m.i) + 1).str());
        }
    }
}

TEST_CASE("constants are fixed") {
    Ring r3 = ring_p(3);
    auto one = PerfSeries::one(r3);
    for (auto kind : {FamilyKind::Tau, FamilyKind::Gamma}) {
        auto v = sh_test(one, SubgroupFamily{kind, 1}, PLambda::of(100), 50, 3);
        CHECK(v.status == ShStatus::Pass);
    }
    CHECK_THROWS_AS(sh_estimate(one, tau0, 3), DegenerateOrbit);
    CHECK_THROWS_AS((void)SubgroupFamily({FamilyKind::Gamma, 0}).element(3, 0, 2), std::invalid_argument);
    auto w = nonmembership_witness(one, tau0, PLambda::of(2), 4);
    CHECK(w.status == WitnessStatus::NotRefutedAtHorizon);
}

TEST_CASE("perfection level one halves the exponent") {
    Ring r3 = ring_p(3);
    auto x = S("t^{1/3}", r3);
    CHECK(sh_test(x, tau0, PLambda::of(Rational(1, 2)), Rational(1, 3), 4).status == ShStatus::Pass);
    auto strict = sh_test(x, tau0, PLambda::of(Rational(3, 2)), Rational(1, 3), 4);
    CHECK(strict.status == ShStatus::Fail);
    REQUIRE(strict.witness.has_value());
    CHECK(strict.witness->first == 0);
}

TEST_CASE("inconclusive when the bound reaches the precision") {
    Ring r3 = ring_p(3);
    auto x = S("t + O(6)", r3);
    auto v = sh_test(x, tau0, PLambda::cp_level(3, 0), 1, 3);
    CHECK(v.status == ShStatus::Inconclusive);
    CHECK(v.margins[0].status == ShStatus::Pass);
    CHECK(v.margins[1].status == ShStatus::Pass);
    CHECK(v.margins[2].status == ShStatus::Inconclusive);
    // A definite violation still fails even though later bounds are out of reach.
    auto f = sh_test(x, tau0, PLambda::of(3), 1, 3);
    CHECK(f.status == ShStatus::Fail);
}

TEST_CASE("estimates") {
    Ring r3 = ring_p(3);
    auto t = PerfSeries::t(r3);
    auto est = sh_estimate(t, tau0, 4);
    CHECK(est.plambda_hat == Rational(3, 2));
    CHECK(est.mu_hat == 1);
    CHECK(est.consistent);

    auto root = sh_estimate(frobenius_inv(t), tau0, 4);
    CHECK(root.plambda_hat == est.plambda_hat / 3);
    CHECK(root.consistent);

    auto shifted = sh_estimate(t, SubgroupFamily{FamilyKind::Tau, 1}, 4);
    CHECK(shifted.plambda_hat == est.plambda_hat * 3);

    CHECK_THROWS_AS(sh_estimate(S("t + O(5)", r3), tau0, 3), PrecisionExhausted);
}

TEST_CASE("deperfection matches the fitted exponent") {
    Ring r3 = ring_p(3);
    for (int n = 0; n <= 3; ++n) {
        auto x = frobenius_inv(PerfSeries::t(r3), n);
        CHECK(deperfection_level(x) == n);
        for (int k : {0, 1}) {
            auto est = sh_estimate(x, SubgroupFamily{FamilyKind::Tau, k}, 3);
            CHECK(est.consistent);
            CHECK(est.plambda_hat == cp_scaled(3, k - n));
        }
    }
    CHECK(deperfection_level(S("t^{1/3}", r3)) == 1);
    CHECK_FALSE(deperfection_level(S("u", r3)).has_value());
    CHECK(deperfection_level(S("t^{5/9} + t^2", r3)) == 2);
    CHECK(deperfection_level(S("t^{-1} + 1", r3)) == 0);
}

TEST_CASE("nonmembership witnesses") {
    Ring r3 = ring_p(3);
    PLambda above = PLambda::cp_level(3, 0, Rational(1, 2));
    for (const char *text : {"t", "t + t^2"}) {
        auto w = nonmembership_witness(S(text, r3), tau0, above, 6);
        CHECK(w.status == WitnessStatus::Refuted);
        REQUIRE(w.step_signs.size() == 6);
        for (int s : w.step_signs) CHECK(s < 0);
        CHECK(w.first_violation == 0);
    }
    auto quarter = nonmembership_witness(S("t + t^2", r3), tau0, PLambda::cp_level(3, 0, Rational(1, 4)), 6);
    CHECK(quarter.status == WitnessStatus::Refuted);
    REQUIRE(quarter.first_violation.has_value());
    // With a large mu the first violating level moves out.
    auto late = nonmembership_witness(S("t", r3), tau0, above, 6, -10);
    REQUIRE(late.first_violation.has_value());
    CHECK(*late.first_violation > 0);
    // At the true exponent the margins are constant: no refutation.
    auto exact = nonmembership_witness(S("t", r3), tau0, PLambda::cp_level(3, 0), 6);
    CHECK(exact.status == WitnessStatus::NotRefutedAtHorizon);
}

TEST_CASE("gamma fixed vectors") {
    Ring r3 = ring_p(3);
    std::vector<std::int64_t> as{4, 7, 10};
    auto a = gamma_fixed_test(S("t + t^{1/3}", r3), as, ValCap(20));
    CHECK(a.fixed);
    CHECK(a.structural);
    auto b = gamma_fixed_test(S("u", r3), as, ValCap(20));
    CHECK_FALSE(b.fixed);
    CHECK_FALSE(b.structural);
    CHECK(b.witness == 4);
    CHECK(gamma_fixed_test(PerfSeries::one(r3), as, ValCap(20)).fixed);
}

TEST_CASE("monotonicity in the bound") {
    // Negative t-exponents expand eps^{-c} to work_prec, which must clear the bounds.
    Ring r3 = ring_p(3, 200);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto x = random_laurent(rng, r3, -1, 4);
        auto mu = val(x).value.value() - std::uniform_int_distribution<int>(0, 2)(rng);
        auto v = sh_test(x, tau0, PLambda::cp_level(3, 0), mu, 3);
        CHECK(v.status == ShStatus::Pass);
        // Any pointwise-smaller bound passes as well.
        CHECK(sh_test(x, tau0, PLambda::of(1), mu - 1, 3).status == ShStatus::Pass);
        CHECK(sh_test(x, tau0, PLambda::cp_level(3, -1), mu, 3).status == ShStatus::Pass);
    }
}

TEST_CASE("verdicts are deterministic") {
    Ring r3 = ring_p(3);
    auto x = S("t + 2*t^{4/3} + t^5", r3);
    auto a = sh_test(x, tau0, PLambda::cp_level(3, 0, Rational(1, 3)), 0, 4);
    auto b = sh_test(x, tau0, PLambda::cp_level(3, 0, Rational(1, 3)), 0, 4);
    CHECK(a.status == b.status);
    REQUIRE(a.margins.size() == b.margins.size());
    for (std::size_t i = 0; i < a.margins.size(); ++i) CHECK(a.margins[i].v == b.margins[i].v);
}

TEST_CASE("linear combinations stay in the class") {
    Ring r3 = ring_p(3, 200);
    std::mt19937_64 rng(17);
    PLambda pl = PLambda::cp_level(3, 0);
    for (int trial = 0; trial < 20; ++trial) {
        auto f = random_laurent(rng, r3, -2, 3);
        auto x = random_laurent(rng, r3, 1, 3);
        auto y = random_laurent(rng, r3, 1, 4);
        auto mu_x = sh_estimate(x, tau0, 3).mu_hat;
        auto mu_y = sh_estimate(y, tau0, 3).mu_hat;
        REQUIRE(sh_test(x, tau0, pl, mu_x, 4).status == ShStatus::Pass);
        REQUIRE(sh_test(y, tau0, pl, mu_y, 4).status == ShStatus::Pass);
        Rational mu = closure_mu(val(f).value.value(), val(x).value.value(), mu_x, mu_y);
        CHECK(sh_test(f * x + y, tau0, pl, mu, 4).status == ShStatus::Pass);
    }
}
