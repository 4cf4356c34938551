#include "doctest.h"

#include <random>
#include <sstream>

#include "support.hpp"
#include "tilted/errors.hpp"
#include "tilted/phitau.hpp"

using namespace tilted;
using tilted::testing::random_laurent;
using tilted::testing::ring_p;

namespace {

PerfSeries S(const char *text, const Ring &ring) { return parse_series(text, ring); }

MatSeries M1(const PerfSeries &x) { return MatSeries::diagonal({x}); }

MatSeries upper(const Ring &ring) {
    return MatSeries::from_rows(ring, {{S("1", ring), S("t", ring)}, {S("0", ring), S("1", ring)}});
}

Rational cp(std::int64_t p, int e) {
    Rational r(p, p - 1);
    for (int i = 0; i < e; ++i) r *= Rational(p);
    return r;
}

// tau^c(B) computed entrywise with an independently built t -> eps^c t substitution.
MatSeries tau_pow_direct(const MatSeries &B, std::int64_t c) {
    const Ring &ring = B.ring();
    PerfSeries eps = PerfSeries::one(ring) + PerfSeries::u(ring);
    PerfSeries epsc = pow(eps, c);
    return B.map([&](const PerfSeries &x) {
        PerfSeries acc = PerfSeries::zero(ring);
        for (const auto &term : x.terms()) {
            std::int64_t e = term.mono.et / ring.exp_scale();
            acc += PerfSeries::from_mono(ring, term.coeff, term.mono) * pow(epsc, e);
        }
        return acc;
    });
}

} // namespace

TEST_CASE("matrix basics") {
    Ring r3 = ring_p(3);
    auto B = upper(r3);
    auto Binv = inverse(B);
    CHECK(B * Binv == MatSeries::identity(r3, 2));
    CHECK(det(B) == PerfSeries::one(r3));
    CHECK(MatSeries::identity(r3, 2).val().value == ValCap(0));
    CHECK(MatSeries::zero(r3, 2).is_zero());
    CHECK(v_tau({S("t", r3), S("t^2", r3)}).value == ValCap(1));
    CHECK(v_tau({S("0", r3), S("u", r3)}).value == ValCap(Rational(3, 2)));
    Valuation z = v_tau({PerfSeries::zero(r3, ValCap(7)), PerfSeries::zero(r3, ValCap(9))});
    CHECK_FALSE(z.is_exact());
    CHECK(z.value == ValCap(7));
}

TEST_CASE("base change examples") {
    Ring r3 = ring_p(3);
    auto trivial = basechange_from(M1(PerfSeries::one(r3)));
    CHECK(trivial.P == MatSeries::identity(r3, 1));
    CHECK(trivial.mat_tau == MatSeries::identity(r3, 1));

    auto m = basechange_from(upper(r3));
    CHECK(m.P.at(0, 1) == S("t^3 - t", r3));
    CHECK(m.P.at(0, 0) == S("1", r3));
    CHECK(m.mat_tau.at(0, 1) == S("u*t", r3));
    CHECK(m.mat_tau.at(1, 0).empty());

    auto one_t = basechange_from(M1(S("1 + t", r3)));
    CHECK(one_t.P.at(0, 0).equals_to_precision(S("1 + 2*t + t^2", r3)));
    // Mat(tau) (1 + t) = 1 + eps t
    CHECK((one_t.mat_tau.at(0, 0) * S("1 + t", r3)).equals_to_precision(S("1 + t + u*t", r3)));
}

TEST_CASE("mat_of") {
    Ring r3 = ring_p(3);
    auto B = M1(S("1 + t", r3));
    auto m = basechange_from(B);
    CHECK(mat_of(m, GroupElem::identity()) == MatSeries::identity(r3, 1));
    CHECK(mat_of(m, GroupElem::gamma(4)) == MatSeries::identity(r3, 1));
    auto expected = S("1", r3) + S("u*t", r3) * invert(S("1 + t", r3));
    CHECK(mat_of(m, GroupElem::tau()).at(0, 0).equals_to_precision(expected));

    auto binv = inverse(B);
    for (std::int64_t c : {2, 3, 5, -1, -2}) {
        auto direct = binv * tau_pow_direct(B, c);
        CAPTURE(c);
        CHECK(mat_of(m, GroupElem::tau(c)).equals_to_precision(direct));
    }
    auto mt = mat_of(m, GroupElem::tau());
    CHECK(mat_of(m, GroupElem::tau(2)).equals_to_precision(mt * act(GroupElem::tau(), mt)));

    // Exact upper-triangular case: Mat(tau^c) - Id = (eps^c - 1) t above the diagonal.
    auto u2 = basechange_from(upper(r3));
    for (std::int64_t c : {1, 2, 3, 9, 7}) {
        auto diff = mat_of(u2, GroupElem::tau(c)) - MatSeries::identity(r3, 2);
        CHECK(diff.at(0, 1) == (eps_pow(Rational(c), r3) - PerfSeries::one(r3)) * PerfSeries::t(r3));
        CHECK(diff.at(0, 0).empty());
    }
}

TEST_CASE("cocycle identity") {
    Ring r3 = ring_p(3);
    auto trivial = PhiTauModule(r3, MatSeries::identity(r3, 2), MatSeries::identity(r3, 2));
    auto rep = cocycle_check(trivial, GroupElem::tau());
    CHECK(rep.ok);
    CHECK(rep.residual.value.is_infinite());

    auto m = basechange_from(M1(S("1 + t", r3)));
    CHECK(cocycle_check(m, GroupElem::tau()).ok);
    // Both sides equal (1 + eps^3 t^3)/(1 + t).
    auto mt = m.mat_tau.at(0, 0);
    auto closed = S("1 + t^3 + u^3*t^3", r3) * invert(S("1 + t", r3));
    CHECK((m.P.at(0, 0) * frobenius(mt)).equals_to_precision(closed));
    CHECK((mt * act(GroupElem::tau(), m.P.at(0, 0))).equals_to_precision(closed));

    // A tampered Mat(tau) is caught.
    auto bad = m;
    bad.mat_tau.at(0, 0) += S("t^2", r3);
    CHECK_FALSE(cocycle_check(bad, GroupElem::tau()).ok);
}

TEST_CASE("generated modules satisfy the cocycle identity") {
    Ring r3 = ring_p(3, 30);
    for (int d = 1; d <= 3; ++d) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            auto m = basechange_generate(r3, d, seed, 2);
            m.validate();
            for (std::int64_t c : {1, 2, 3, -1}) {
                CAPTURE(d);
                CAPTURE(seed);
                CAPTURE(c);
                CHECK(cocycle_check(m, GroupElem::tau(c)).ok);
                CHECK(cocycle_check(m, GroupElem{c, 4, 0}).ok);
            }
        }
    }
    auto twisted = basechange_generate(r3, 2, 7, 4);
    CHECK(cocycle_check(twisted, GroupElem::tau()).ok);
}

TEST_CASE("mat_of is a cocycle") {
    Ring r3 = ring_p(3, 30);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> cs(-4, 6);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        auto m = basechange_generate(r3, 2, seed, 2);
        for (int trial = 0; trial < 4; ++trial) {
            GroupElem g{cs(rng), 1, 0};
            GroupElem h{cs(rng), 1, 0};
            auto lhs = mat_of(m, compose(g, h));
            auto rhs = mat_of(m, g) * act(g, mat_of(m, h));
            CHECK(lhs.equals_to_precision(rhs));
        }
    }
}

TEST_CASE("lattice valuation") {
    Ring r3 = ring_p(3);
    auto one = PhiTauModule(r3, MatSeries::identity(r3, 1), MatSeries::identity(r3, 1), MatSeries::identity(r3, 1));
    auto x = std::vector<PerfSeries>{S("t^2 + u", r3)};
    CHECK(v_tilde(one, x) == v_tau(x));

    auto m = basechange_from(M1(S("1 + t", r3)));
    CHECK(v_tilde(m, {PerfSeries::one(r3)}).value == ValCap(0));
    CHECK_THROWS_AS((void)v_tilde(PhiTauModule(r3, MatSeries::identity(r3, 1), MatSeries::identity(r3, 1)), x),
                    std::invalid_argument);

    std::vector<std::vector<PerfSeries>> samples{{S("1", r3)}, {S("t + u", r3)}, {S("t^{-1}", r3)}};
    CHECK(equiv_constant(one, samples).sampled == 0);
    CHECK(equiv_constant(m, samples).sampled == 0);
    CHECK(equiv_constant(m, samples).analytic == 0);

    auto shifted = PhiTauModule(r3, MatSeries::identity(r3, 1), MatSeries::identity(r3, 1), M1(S("t^2", r3)));
    auto c = equiv_constant(shifted, samples);
    CHECK(c.sampled == 2);
    CHECK(c.analytic == 2);
}

TEST_CASE("lattice isometry") {
    Ring r3 = ring_p(3, 30);
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> cs(1, 5);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto m = basechange_generate(r3, 2, seed, 2);
        std::vector<std::vector<PerfSeries>> samples;
        for (int trial = 0; trial < 4; ++trial) {
            std::vector<PerfSeries> x{random_laurent(rng, r3, -1, 3), random_laurent(rng, r3, 0, 3)};
            GroupElem g = GroupElem::tau(cs(rng));
            auto gx = act_on_coords(m, g, x);
            CHECK(v_tilde(m, gx) == v_tilde(m, x));
            samples.push_back(x);
        }
        auto c = equiv_constant(m, samples);
        CHECK(c.sampled <= c.analytic);
    }
}

TEST_CASE("descent") {
    Ring r3 = ring_p(3);
    auto trivial = PhiTauModule(r3, MatSeries::identity(r3, 2), MatSeries::identity(r3, 2));
    auto t0 = descend_fixed_point(trivial, GroupElem::tau(), 1, 10);
    CHECK(t0.H.is_zero());
    CHECK(t0.iterations == 1);

    auto m = basechange_from(M1(S("1 + t", r3)));
    auto rep = descend_fixed_point(m, GroupElem::tau(), 1, 12);
    auto expected = S("u", r3) * invert(S("1 + t", r3));
    CHECK(rep.H.at(0, 0).equals_to_precision(expected.truncated(ValCap(12))));
    CHECK(rep.iterations <= rep.iteration_bound);
    for (std::size_t j = 1; j + 1 < rep.deltas.size(); ++j) {
        CHECK(rep.deltas[j].value >= rep.deltas[j - 1].value + ValCap(rep.val_q));
        CHECK(rep.deltas[j].value > rep.deltas[j - 1].value);
    }

    CHECK_THROWS_AS((void)descend_fixed_point(m, GroupElem::tau(), 0, 12), PreconditionViolated);
    auto scaled = PhiTauModule(r3, M1(S("t^{-1}", r3)), MatSeries::identity(r3, 1));
    CHECK_THROWS_AS((void)descend_fixed_point(scaled, GroupElem::tau(), 1, 12), PreconditionViolated);
    // Mat(tau) - 1 has valuation 5/2 here, so r = 3 puts tau below the level.
    CHECK_THROWS_AS((void)descend_fixed_point(m, GroupElem::tau(), 3, 12), PreconditionViolated);
}

TEST_CASE("descent on generated modules") {
    Ring r3 = ring_p(3, 30);
    int ran = 0;
    for (int d = 1; d <= 3; ++d) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            auto m = basechange_generate(r3, d, seed, 2);
            auto params = find_descent_params(m, 0, 4);
            REQUIRE(params.has_value());
            auto mm = params->s == 0 ? m : rescale_basis(m, params->s);
            CHECK(cocycle_check(mm, GroupElem::tau()).ok);
            GroupElem g = GroupElem::tau(ipow(3, params->level));
            Rational target = 10;
            auto rep = descend_fixed_point(mm, g, params->r, target);
            auto expected = (mat_of(mm, g) - MatSeries::identity(r3, d))
                                .shifted_t(Rational(-params->r))
                                .truncated(ValCap(target));
            CHECK(rep.H.equals_to_precision(expected));
            CHECK(rep.iterations <= rep.iteration_bound);
            ++ran;
        }
    }
    CHECK(ran == 9);
}

TEST_CASE("floor margin") {
    CHECK(floor_margin(Rational(5, 2), PLambda::of(Rational(3, 2)), 3) == 1);
    // 3/2 sqrt 3 ~ 2.598
    CHECK(floor_margin(Rational(7), PLambda::cp_level(3, 0, Rational(1, 2)), 3) == 4);
    CHECK(floor_margin(Rational(2), PLambda::cp_level(3, 0, Rational(1, 2)), 3) == -1);
}

TEST_CASE("matrix super-Hoelder tests") {
    Ring r3 = ring_p(3);
    auto trivial = PhiTauModule(r3, MatSeries::identity(r3, 2), MatSeries::identity(r3, 2));
    for (int mu : {0, -3}) {
        CHECK(matrix_sh_test(trivial, 0, PLambda::of(100), 3, Rational(mu)).verdict.status == ShStatus::Pass);
    }

    auto u2 = basechange_from(upper(r3));
    for (int k : {0, 1}) {
        auto rep = matrix_sh_test(u2, k, PLambda::cp_level(3, k), 3);
        CHECK(rep.verdict.status == ShStatus::Pass);
        REQUIRE(rep.fit.has_value());
        CHECK(rep.fit->plambda_hat == cp(3, k));
        CHECK(rep.fit->consistent);
    }
    auto above = matrix_sh_test(u2, 0, PLambda::cp_level(3, 0, Rational(1, 2)), 4);
    CHECK(above.verdict.status == ShStatus::Fail);
    CHECK(above.witness.status == WitnessStatus::Refuted);

    Ring big = ring_p(3, 120);
    auto m = basechange_from(M1(S("1 + t", big)));
    auto rep = matrix_sh_test(m, 0, PLambda::cp_level(3, 0), 3);
    CHECK(rep.verdict.status == ShStatus::Pass);
    REQUIRE(rep.fit.has_value());
    CHECK(rep.fit->plambda_hat == Rational(3, 2));
}

TEST_CASE("module tests under both valuations") {
    Ring r3 = ring_p(3, 60);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto m = basechange_generate(r3, 2, seed, 2);
        auto reps = module_sh_test(m, 0, 0, 3);
        REQUIRE(reps.size() == 2);
        std::vector<std::vector<PerfSeries>> samples;
        for (const auto &r : reps) {
            CHECK(r.under_tau.verdict.status == ShStatus::Pass);
            CHECK(r.under_tilde.verdict.status == ShStatus::Pass);
            if (r.under_tau.fit && r.under_tilde.fit) {
                CHECK(r.under_tau.fit->plambda_hat == r.under_tilde.fit->plambda_hat);
                CHECK(abs(r.under_tau.fit->mu_hat - r.under_tilde.fit->mu_hat) <=
                      equiv_constant(m, samples).analytic);
            }
        }
    }
    auto trivial = PhiTauModule(r3, MatSeries::identity(r3, 1), MatSeries::identity(r3, 1), MatSeries::identity(r3, 1));
    for (const auto &r : module_sh_test(trivial, 0, 1, 3)) {
        if (!r.scaled) CHECK(r.under_tau.verdict.status == ShStatus::Pass);
    }
}

TEST_CASE("frobenius twist raises the exponent by one") {
    Ring r3 = ring_p(3, 80);
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 3; ++trial) {
        PerfSeries f = random_laurent(rng, r3, 1, 2);
        if (val(f).value != ValCap(1)) f = f + PerfSeries::t(r3) * PerfSeries::constant(r3, 1);
        auto B = M1(PerfSeries::one(r3) + f);
        if (B.at(0, 0).size() < 2) continue;
        auto base = matrix_sh_test(basechange_from(B), 0, PLambda::cp_level(3, 0), 2);
        auto twist = matrix_sh_test(basechange_from(frobenius(B)), 0, PLambda::cp_level(3, 1), 2);
        REQUIRE(base.fit.has_value());
        REQUIRE(twist.fit.has_value());
        CHECK(twist.fit->plambda_hat == base.fit->plambda_hat * 3);
    }
}

TEST_CASE("module file round trip") {
    Ring r3 = ring_p(3, 30);
    auto m = basechange_generate(r3, 2, 5, 2);
    std::stringstream ss;
    write_module(ss, m);
    auto back = read_module(ss);
    CHECK(back.d == 2);
    CHECK(back.P == m.P);
    CHECK(back.mat_tau == m.mat_tau);
    REQUIRE(back.lattice.has_value());
    CHECK(*back.lattice == *m.lattice);

    std::istringstream bad("p 3\nd 2\nprec 30\ndenom_cap 6\nP\n1\n0\n");
    CHECK_THROWS_AS((void)read_module(bad), ParseError);
    std::istringstream tied("p 3\nd 1\nprec 30\ndenom_cap 6\nP\n1 + 2\nMatTau\n1\n");
    CHECK_THROWS((void)read_module(tied));
}
