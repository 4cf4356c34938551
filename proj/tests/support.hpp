#pragma once

// Random generators shared by the property tests.

#include <cstdint>
#include <random>
#include <vector>

#include "tilted/ring.hpp"

namespace tilted::testing {

inline Ring ring_p(std::int64_t p, Rational work_prec = 40, int denom_cap = 6) {
    Ring r;
    r.p = p;
    r.denom_cap = denom_cap;
    r.work_prec = work_prec;
    r.validate();
    return r;
}

struct SeriesShape {
    int max_terms = 4;
    int max_den_exp = 1;     // exponents drawn with denominators up to p^max_den_exp
    int t_lo = -1;           // integer range for t numerators (before division)
    int t_hi = 4;
    int u_max = 2;           // u numerators in [0, u_max]
    bool allow_u = true;
    ValCap prec = ValCap::infinity();
};

inline PerfSeries random_series(std::mt19937_64 &rng, const Ring &ring, const SeriesShape &shape = {}) {
    std::uniform_int_distribution<int> nterms(1, shape.max_terms);
    std::uniform_int_distribution<int> coeff(1, static_cast<int>(ring.p - 1));
    std::uniform_int_distribution<int> den_exp(0, shape.max_den_exp);
    std::uniform_int_distribution<int> tnum(shape.t_lo, shape.t_hi);
    std::uniform_int_distribution<int> unum(0, shape.u_max);
    SeriesBuilder b(ring, shape.prec);
    int n = nterms(rng);
    for (int i = 0; i < n; ++i) {
        Rational eu = 0;
        if (shape.allow_u) eu = Rational(unum(rng), ipow(ring.p, den_exp(rng)));
        Rational et(tnum(rng), ipow(ring.p, den_exp(rng)));
        Monomial m{PExp::from_rational(eu, ring).scaled(ring), PExp::from_rational(et, ring).scaled(ring)};
        b.add(m, coeff(rng));
    }
    return std::move(b).build();
}

/// Pure-t Laurent polynomial with integer exponents (an element of F_p[t, 1/t]).
inline PerfSeries random_laurent(std::mt19937_64 &rng, const Ring &ring, int lo, int hi, int max_terms = 3) {
    SeriesShape shape;
    shape.max_terms = max_terms;
    shape.max_den_exp = 0;
    shape.t_lo = lo;
    shape.t_hi = hi;
    shape.allow_u = false;
    PerfSeries s = random_series(rng, ring, shape);
    while (s.empty()) s = random_series(rng, ring, shape);
    return s;
}

} // namespace tilted::testing
