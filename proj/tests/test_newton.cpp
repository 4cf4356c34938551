#include "doctest.h"

#include <random>

#include "tilted/newton.hpp"

using namespace tilted;

namespace {

NPPoint pt(std::int64_t k, Rational v) { return {k, ValCap(v)}; }

// Brute force: a finite point is a vertex iff no chord between two other
// finite points passes through or below it strictly inside the chord's span,
// and it is not interior to a collinear run.
std::vector<NPPoint> oracle_vertices(const std::vector<NPPoint> &pts) {
    std::vector<NPPoint> finite;
    for (const auto &q : pts) {
        if (q.v.is_finite()) finite.push_back(q);
    }
    std::vector<NPPoint> out;
    for (const auto &c : finite) {
        bool vertex = true;
        for (const auto &a : finite) {
            for (const auto &b : finite) {
                if (!(a.k < c.k && c.k < b.k)) continue;
                Rational chord = a.v.value() + (b.v.value() - a.v.value()) * Rational(c.k - a.k, b.k - a.k);
                if (c.v.value() >= chord) vertex = false;
            }
        }
        if (vertex) out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [](const NPPoint &x, const NPPoint &y) { return x.k < y.k; });
    return out;
}

} // namespace

TEST_CASE("hull examples") {
    auto a = lower_hull({pt(0, 1), pt(2, 0)});
    REQUIRE(a.segments.size() == 1);
    CHECK(a.segments[0].slope == Rational(-1, 2));

    auto b = lower_hull({{0, ValCap::infinity()}, pt(1, 1), pt(2, 0)});
    REQUIRE(b.segments.size() == 1);
    CHECK(b.segments[0].slope == -1);

    auto c = lower_hull({pt(0, 2), pt(1, 2), pt(2, 0)});
    CHECK(c.vertices == std::vector<NPPoint>{pt(0, 2), pt(2, 0)});

    CHECK_THROWS(lower_hull({}));
    CHECK_THROWS(lower_hull({{0, ValCap::infinity()}}));
    CHECK_THROWS(lower_hull({pt(1, 0), pt(1, 2)}));
}

TEST_CASE("kummer valuations") {
    auto v = kummer_step_valuations(3, 1, 0);
    CHECK(v == std::vector<NPPoint>{{0, ValCap::infinity()}, pt(1, Rational(5, 3)), pt(2, Rational(4, 3)), pt(3, 0)});
    auto w = kummer_step_valuations(3, 1, 1);
    CHECK(w == std::vector<NPPoint>{{0, ValCap::infinity()}, pt(1, Rational(11, 9)), pt(2, Rational(10, 9)), pt(3, 0)});
    auto z = kummer_step_valuations(5, 2, 0);
    for (int k = 1; k <= 4; ++k) CHECK(z[k].v == ValCap(Rational(2) + Rational(5 - k, 5)));
}

TEST_CASE("elementary steps") {
    auto a = verify_elementary(3, 1, 0);
    CHECK(a.ok);
    CHECK(a.polygon.segments[0].slope == Rational(-5, 6));
    auto b = verify_elementary(3, 1, 1);
    CHECK(b.ok);
    CHECK(b.polygon.segments[0].slope == Rational(-11, 18));
    auto c = verify_elementary(5, 1, 0);
    CHECK(c.ok);
    CHECK(c.polygon.segments[0].slope == Rational(-9, 20));

    for (std::int64_t p : {3, 5, 7}) {
        for (std::int64_t e : {1, 2, 3}) {
            for (int n : {0, 1, 2}) {
                auto r = verify_elementary(p, e, n);
                CHECK(r.ok);
                // Expected slope computed directly: -(e p^n/(p-1) + 1/p) / p^n.
                Rational pn = Rational(p).pow(n);
                CHECK(r.expected_slope == -(Rational(e) * pn / Rational(p - 1) + Rational(1, p)) / pn);
                // Interior Kummer points sit strictly above the single segment.
                auto pts = kummer_step_valuations(p, e, n);
                const auto &first = r.polygon.vertices.front();
                for (const auto &q : pts) {
                    if (q.v.is_infinite() || q.k == first.k || q.k == p) continue;
                    Rational line = first.v.value() + r.expected_slope * Rational(q.k - first.k);
                    CHECK(q.v.value() > line);
                }
                CHECK(r.polygon.vertices == oracle_vertices(pts));
            }
        }
    }
}

TEST_CASE("hull agrees with the pairwise oracle") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 300; ++trial) {
        int n = std::uniform_int_distribution<int>(1, 12)(rng);
        std::vector<NPPoint> pts;
        std::vector<std::int64_t> ks(20);
        for (int i = 0; i < 20; ++i) ks[i] = i;
        std::shuffle(ks.begin(), ks.end(), rng);
        for (int i = 0; i < n; ++i) {
            if (std::uniform_int_distribution<int>(0, 6)(rng) == 0) {
                pts.push_back({ks[i], ValCap::infinity()});
            } else {
                pts.push_back(pt(ks[i], Rational(std::uniform_int_distribution<int>(-10, 10)(rng),
                                                 std::uniform_int_distribution<int>(1, 4)(rng))));
            }
        }
        bool any_finite = std::any_of(pts.begin(), pts.end(), [](const NPPoint &q) { return q.v.is_finite(); });
        if (!any_finite) continue;
        auto poly = lower_hull(pts);
        CHECK(poly.vertices == oracle_vertices(pts));
        for (std::size_t i = 1; i < poly.segments.size(); ++i) {
            CHECK(poly.segments[i - 1].slope < poly.segments[i].slope);
        }
    }
}
