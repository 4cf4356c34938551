#pragma once

// Newton polygons with exact rational slopes, and the ramification check for
// one step K_{n+1}/K_n of the Kummer tower.

#include <cstdint>
#include <vector>

#include "tilted/rational.hpp"

namespace tilted {

struct NPPoint {
    std::int64_t k = 0;
    ValCap v; // infinite for a vanishing coefficient

    friend bool operator==(const NPPoint &, const NPPoint &) = default;
};

struct Segment {
    Rational slope;
    std::int64_t length = 0;

    friend bool operator==(const Segment &, const Segment &) = default;
};

struct NewtonPolygon {
    std::vector<NPPoint> vertices;
    std::vector<Segment> segments; // strictly increasing slopes
};

/// Lower convex hull of the finite points. Throws std::invalid_argument on
/// repeated indices or when no point is finite.
NewtonPolygon lower_hull(std::vector<NPPoint> points);

/// Valuations of the coefficients of (T + pi^{1/p^{n+1}})^p - pi^{1/p^n},
/// normalized by v(p) = e_K.
std::vector<NPPoint> kummer_step_valuations(std::int64_t p, std::int64_t e_K, int n);

/// i_n = e_K p^n / (p-1) + 1/p
Rational ramification_break(std::int64_t p, std::int64_t e_K, int n);

struct ElementaryCheck {
    bool ok = false;
    NewtonPolygon polygon;
    Rational expected_slope; // -i_n / p^n
};

/// The polygon must be a single segment of slope -i_n/p^n.
ElementaryCheck verify_elementary(std::int64_t p, std::int64_t e_K, int n);

} // namespace tilted
