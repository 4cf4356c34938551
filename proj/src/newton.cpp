#include "tilted/newton.hpp"

#include <algorithm>
#include <stdexcept>

#include "tilted/ring.hpp"

namespace tilted {

namespace {

// Cross product sign of (b - a) x (c - a): negative means c lies below the
// line through a and b (turning clockwise).
int turn(const NPPoint &a, const NPPoint &b, const NPPoint &c) {
    Rational cross = Rational(b.k - a.k) * (c.v.value() - a.v.value()) -
                     (b.v.value() - a.v.value()) * Rational(c.k - a.k);
    return cross.sign();
}

} // namespace

NewtonPolygon lower_hull(std::vector<NPPoint> points) {
    std::sort(points.begin(), points.end(), [](const NPPoint &a, const NPPoint &b) { return a.k < b.k; });
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].k == points[i - 1].k) throw std::invalid_argument("repeated Newton polygon index");
    }
    std::vector<NPPoint> hull;
    for (const auto &pt : points) {
        if (pt.v.is_infinite()) continue;
        // Pop while the last vertex is on or above the chord to the new point.
        while (hull.size() >= 2 && turn(hull[hull.size() - 2], hull.back(), pt) <= 0) hull.pop_back();
        hull.push_back(pt);
    }
    if (hull.empty()) throw std::invalid_argument("Newton polygon needs a finite point");
    NewtonPolygon poly;
    poly.vertices = hull;
    for (std::size_t i = 1; i < hull.size(); ++i) {
        std::int64_t len = hull[i].k - hull[i - 1].k;
        poly.segments.push_back({(hull[i].v.value() - hull[i - 1].v.value()) / Rational(len), len});
    }
    return poly;
}

std::vector<NPPoint> kummer_step_valuations(std::int64_t p, std::int64_t e_K, int n) {
    if (!is_prime(p) || p < 3) throw std::invalid_argument("p must be an odd prime");
    if (e_K < 1 || n < 0) throw std::invalid_argument("need e_K >= 1 and n >= 0");
    std::vector<NPPoint> pts;
    pts.push_back({0, ValCap::infinity()});
    const Rational step(1, ipow(p, n + 1));
    for (std::int64_t k = 1; k < p; ++k) pts.push_back({k, ValCap(Rational(e_K) + Rational(p - k) * step)});
    pts.push_back({p, ValCap(0)});
    return pts;
}

Rational ramification_break(std::int64_t p, std::int64_t e_K, int n) {
    return Rational(e_K) * pow_int(p, n) / Rational(p - 1) + Rational(1, p);
}

ElementaryCheck verify_elementary(std::int64_t p, std::int64_t e_K, int n) {
    ElementaryCheck out;
    out.polygon = lower_hull(kummer_step_valuations(p, e_K, n));
    out.expected_slope = -ramification_break(p, e_K, n) / pow_int(p, n);
    out.ok = out.polygon.segments.size() == 1 && out.polygon.segments[0].slope == out.expected_slope;
    return out;
}

} // namespace tilted
