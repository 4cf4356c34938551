#include "tilted/phitau.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace tilted {

// ---------------------------------------------------------------- matrices

MatSeries::MatSeries(const Ring &ring, int d) : ring_(ring), d_(d) {
    if (d < 1) throw std::invalid_argument("matrix dimension must be positive");
    e_.assign(static_cast<std::size_t>(d) * d, PerfSeries::zero(ring));
}

std::size_t MatSeries::index(int i, int j) const {
    if (i < 0 || j < 0 || i >= d_ || j >= d_) throw std::out_of_range("matrix index");
    return static_cast<std::size_t>(i) * d_ + j;
}

MatSeries MatSeries::identity(const Ring &ring, int d) {
    MatSeries m(ring, d);
    for (int i = 0; i < d; ++i) m.at(i, i) = PerfSeries::one(ring);
    return m;
}

MatSeries MatSeries::from_rows(const Ring &ring, const std::vector<std::vector<PerfSeries>> &rows) {
    MatSeries m(ring, static_cast<int>(rows.size()));
    for (int i = 0; i < m.d_; ++i) {
        if (static_cast<int>(rows[i].size()) != m.d_) throw std::invalid_argument("matrix must be square");
        for (int j = 0; j < m.d_; ++j) m.at(i, j) = rows[i][j];
    }
    return m;
}

MatSeries MatSeries::diagonal(const std::vector<PerfSeries> &entries) {
    if (entries.empty()) throw std::invalid_argument("empty diagonal");
    MatSeries m(entries.front().ring(), static_cast<int>(entries.size()));
    for (int i = 0; i < m.d_; ++i) m.at(i, i) = entries[i];
    return m;
}

std::vector<PerfSeries> MatSeries::column(int j) const {
    std::vector<PerfSeries> out;
    for (int i = 0; i < d_; ++i) out.push_back(at(i, j));
    return out;
}

Valuation MatSeries::val() const {
    Valuation best{ValCap::infinity(), false};
    for (const auto &x : e_) {
        Valuation v = tilted::val(x);
        if (v.value < best.value || (v.value == best.value && !v.is_exact())) best = v;
    }
    // An exact term below every marker decides the minimum.
    Valuation exact{ValCap::infinity(), false};
    for (const auto &x : e_) {
        if (!x.empty()) exact.value = min(exact.value, tilted::val(x).value);
    }
    if (exact.value.is_finite() && exact.value <= best.value) return exact;
    return best;
}

ValCap MatSeries::prec() const {
    ValCap out = ValCap::infinity();
    for (const auto &x : e_) out = min(out, x.prec());
    return out;
}

bool MatSeries::is_zero() const {
    return std::all_of(e_.begin(), e_.end(), [](const PerfSeries &x) { return x.empty(); });
}

MatSeries MatSeries::truncated(const ValCap &cap) const {
    return map([&](const PerfSeries &x) { return x.truncated(cap); });
}

MatSeries MatSeries::scaled(const PerfSeries &s) const {
    return map([&](const PerfSeries &x) { return x * s; });
}

MatSeries MatSeries::shifted_t(const Rational &e) const {
    Monomial m{0, PExp::from_rational(e, ring_).scaled(ring_)};
    return map([&](const PerfSeries &x) { return x.shifted(m); });
}

MatSeries operator+(const MatSeries &a, const MatSeries &b) {
    if (a.d_ != b.d_) throw std::invalid_argument("matrix dimension mismatch");
    MatSeries out(a.ring_, a.d_);
    for (std::size_t i = 0; i < a.e_.size(); ++i) out.e_[i] = a.e_[i] + b.e_[i];
    return out;
}

MatSeries operator-(const MatSeries &a, const MatSeries &b) {
    if (a.d_ != b.d_) throw std::invalid_argument("matrix dimension mismatch");
    MatSeries out(a.ring_, a.d_);
    for (std::size_t i = 0; i < a.e_.size(); ++i) out.e_[i] = a.e_[i] - b.e_[i];
    return out;
}

MatSeries operator*(const MatSeries &a, const MatSeries &b) {
    if (a.d_ != b.d_) throw std::invalid_argument("matrix dimension mismatch");
    MatSeries out(a.ring_, a.d_);
    for (int i = 0; i < a.d_; ++i) {
        for (int j = 0; j < a.d_; ++j) {
            PerfSeries acc = PerfSeries::zero(a.ring_);
            for (int k = 0; k < a.d_; ++k) acc += a.at(i, k) * b.at(k, j);
            out.at(i, j) = acc;
        }
    }
    return out;
}

bool operator==(const MatSeries &a, const MatSeries &b) { return a.d_ == b.d_ && a.e_ == b.e_; }

bool MatSeries::equals_to_precision(const MatSeries &b) const {
    if (d_ != b.d_) return false;
    for (std::size_t i = 0; i < e_.size(); ++i) {
        if (!e_[i].equals_to_precision(b.e_[i])) return false;
    }
    return true;
}

std::vector<PerfSeries> operator*(const MatSeries &a, const std::vector<PerfSeries> &v) {
    if (static_cast<int>(v.size()) != a.dim()) throw std::invalid_argument("vector length mismatch");
    std::vector<PerfSeries> out;
    for (int i = 0; i < a.dim(); ++i) {
        PerfSeries acc = PerfSeries::zero(a.ring());
        for (int k = 0; k < a.dim(); ++k) acc += a.at(i, k) * v[k];
        out.push_back(acc);
    }
    return out;
}

MatSeries frobenius(const MatSeries &m, int n) {
    return m.map([&](const PerfSeries &x) { return frobenius(x, n); });
}

MatSeries act(const GroupElem &g, const MatSeries &m) {
    return m.map([&](const PerfSeries &x) { return act(g, x); });
}

namespace {

MatSeries minor_of(const MatSeries &m, int row, int col) {
    MatSeries out(m.ring(), m.dim() - 1);
    for (int i = 0, oi = 0; i < m.dim(); ++i) {
        if (i == row) continue;
        for (int j = 0, oj = 0; j < m.dim(); ++j) {
            if (j == col) continue;
            out.at(oi, oj++) = m.at(i, j);
        }
        ++oi;
    }
    return out;
}

} // namespace

PerfSeries det(const MatSeries &m) {
    if (m.dim() == 1) return m.at(0, 0);
    if (m.dim() == 2) return m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0);
    PerfSeries acc = PerfSeries::zero(m.ring());
    for (int j = 0; j < m.dim(); ++j) {
        if (m.at(0, j).empty() && m.at(0, j).is_exact()) continue;
        PerfSeries term = m.at(0, j) * det(minor_of(m, 0, j));
        acc = j % 2 == 0 ? acc + term : acc - term;
    }
    return acc;
}

MatSeries inverse(const MatSeries &m, ValCap cap) {
    PerfSeries dinv = invert(det(m), cap);
    if (m.dim() == 1) return MatSeries::diagonal({dinv});
    MatSeries out(m.ring(), m.dim());
    for (int i = 0; i < m.dim(); ++i) {
        for (int j = 0; j < m.dim(); ++j) {
            PerfSeries cof = det(minor_of(m, j, i));
            out.at(i, j) = (i + j) % 2 == 0 ? cof * dinv : -(cof * dinv);
        }
    }
    return out;
}

Valuation v_tau(const std::vector<PerfSeries> &coords) {
    if (coords.empty()) throw std::invalid_argument("empty coordinate vector");
    return MatSeries::diagonal(coords).val();
}

// ----------------------------------------------------------------- modules

PhiTauModule::PhiTauModule(const Ring &r, MatSeries p, MatSeries tau_mat, std::optional<MatSeries> w)
    : ring(r), d(p.dim()), P(std::move(p)), mat_tau(std::move(tau_mat)), lattice(std::move(w)) {
    if (mat_tau.dim() != d || (lattice && lattice->dim() != d)) {
        throw std::invalid_argument("module matrices disagree in dimension");
    }
}

void PhiTauModule::validate() const {
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            for (const auto &term : P.at(i, j).terms()) {
                if (term.mono.eu != 0 || term.mono.t_exp(ring).kden != 0) {
                    throw std::invalid_argument("P must have entries in F_p((t))");
                }
            }
        }
    }
    PerfSeries dp = det(P);
    auto terms = dp.terms();
    if (terms.empty()) throw std::invalid_argument("P is not invertible");
    if (terms.size() >= 2 && terms[0].sval == terms[1].sval) {
        throw std::invalid_argument("det P has no dominant leading term");
    }
}

PhiTauModule basechange_from(const MatSeries &B) {
    const Ring &ring = B.ring();
    MatSeries binv = inverse(B);
    MatSeries P = binv * frobenius(B);
    MatSeries tau = binv * act(GroupElem::tau(), B);
    return PhiTauModule(ring, P, tau, binv);
}

namespace {

PerfSeries random_poly(std::mt19937_64 &rng, const Ring &ring, int lo, int hi) {
    std::uniform_int_distribution<int> coeff(1, static_cast<int>(ring.p - 1));
    std::uniform_int_distribution<int> keep(0, 1);
    SeriesBuilder b(ring, ValCap::infinity());
    bool any = false;
    for (int e = lo; e <= hi; ++e) {
        if (keep(rng) == 0 && !(e == hi && !any)) continue;
        b.add(Monomial{0, e * ring.exp_scale()}, coeff(rng));
        any = true;
    }
    return std::move(b).build();
}

bool has_nonzero_derivative(const MatSeries &B) {
    const Ring &ring = B.ring();
    for (int i = 0; i < B.dim(); ++i) {
        for (int j = 0; j < B.dim(); ++j) {
            for (const auto &term : B.at(i, j).terms()) {
                std::int64_t e = term.mono.et / ring.exp_scale();
                if (e % ring.p != 0) return true;
            }
        }
    }
    return false;
}

} // namespace

MatSeries basechange_matrix(const Ring &ring, int d, std::uint64_t seed, int complexity) {
    if (d < 1) throw std::invalid_argument("d must be at least 1");
    complexity = std::max(complexity, 1);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coeff(1, static_cast<int>(ring.p - 1));
    std::uniform_int_distribution<int> index(0, d - 1);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<PerfSeries> diag;
        for (int i = 0; i < d; ++i) {
            std::int64_t k = complexity >= 3 ? std::uniform_int_distribution<int>(0, 1)(rng) : 0;
            diag.push_back(PerfSeries::monomial(ring, coeff(rng), 0, Rational(k)));
        }
        MatSeries B = MatSeries::diagonal(diag);
        if (d >= 2) {
            for (int f = 0; f < d + complexity; ++f) {
                int a = index(rng);
                int b = index(rng);
                while (b == a) b = index(rng);
                MatSeries E = MatSeries::identity(ring, d);
                E.at(a, b) = random_poly(rng, ring, 0, complexity);
                B = B * E;
            }
        }
        if (d == 1 || complexity >= 4) {
            std::vector<PerfSeries> units;
            for (int i = 0; i < d; ++i) {
                PerfSeries f = random_poly(rng, ring, 1, std::max(1, complexity - 1));
                units.push_back(PerfSeries::one(ring) + f);
            }
            B = B * MatSeries::diagonal(units);
        }
        if (has_nonzero_derivative(B)) return B;
    }
    throw std::runtime_error("could not draw a non-degenerate base change");
}

PhiTauModule basechange_generate(const Ring &ring, int d, std::uint64_t seed, int complexity) {
    return basechange_from(basechange_matrix(ring, d, seed, complexity));
}

PhiTauModule rescale_basis(const PhiTauModule &m, std::int64_t s) {
    const Ring &ring = m.ring;
    MatSeries P = m.P.shifted_t(Rational(s * (ring.p - 1)));
    MatSeries tau = m.mat_tau.scaled(eps_pow(Rational(s), ring));
    std::optional<MatSeries> w;
    if (m.lattice) w = m.lattice->shifted_t(Rational(-s));
    return PhiTauModule(ring, P, tau, w);
}

MatSeries mat_of(const PhiTauModule &m, const GroupElem &g) {
    const Ring &ring = m.ring;
    std::int64_t c = g.c;
    if (c == 0) return MatSeries::identity(ring, m.d);
    std::int64_t sign = c > 0 ? 1 : -1;
    // Mat(tau^{-1}) = tau^{-1}(Mat(tau))^{-1}.
    MatSeries base = c > 0 ? m.mat_tau : act(GroupElem::tau(-1), inverse(m.mat_tau));
    std::uint64_t n = static_cast<std::uint64_t>(c > 0 ? c : -c);

    MatSeries result = MatSeries::identity(ring, m.d);
    std::int64_t acc = 0;  // result = Mat(tau^{sign*acc})
    std::int64_t step = 1; // base = Mat(tau^{sign*step})
    while (n > 0) {
        if (n & 1U) {
            result = acc == 0 ? base : result * act(GroupElem::tau(sign * acc), base);
            acc += step;
        }
        n >>= 1U;
        if (n > 0) {
            base = base * act(GroupElem::tau(sign * step), base);
            step *= 2;
        }
    }
    return result;
}

CocycleReport cocycle_check(const PhiTauModule &m, const GroupElem &g) {
    MatSeries mg = mat_of(m, g);
    MatSeries diff = m.P * frobenius(mg) - mg * act(g, m.P);
    return {diff.is_zero(), diff.val(), diff.prec()};
}

namespace {

const MatSeries &require_lattice(const PhiTauModule &m) {
    if (!m.lattice) throw std::invalid_argument("module has no lattice");
    return *m.lattice;
}

} // namespace

Valuation v_tilde(const PhiTauModule &m, const std::vector<PerfSeries> &coords) {
    return v_tau(inverse(require_lattice(m)) * coords);
}

std::vector<PerfSeries> act_on_coords(const PhiTauModule &m, const GroupElem &g,
                                      const std::vector<PerfSeries> &coords) {
    std::vector<PerfSeries> moved;
    for (const auto &c : coords) moved.push_back(act(g, c));
    return mat_of(m, g) * moved;
}

EquivConstant equiv_constant(const PhiTauModule &m, const std::vector<std::vector<PerfSeries>> &samples) {
    const MatSeries &W = require_lattice(m);
    MatSeries winv = inverse(W);
    EquivConstant out;
    out.analytic = max(abs(W.val().value.value()), abs(winv.val().value.value()));
    for (const auto &x : samples) {
        Valuation a = v_tau(x);
        Valuation b = v_tau(winv * x);
        if (!a.is_exact() || !b.is_exact() || a.value.is_infinite() || b.value.is_infinite()) continue;
        out.sampled = max(out.sampled, abs(a.value.value() - b.value.value()));
    }
    return out;
}

// ----------------------------------------------------------------- descent

DescentReport descend_fixed_point(const PhiTauModule &m, const GroupElem &g, std::int64_t r,
                                  const Rational &target, bool force) {
    const Ring &ring = m.ring;
    const std::int64_t p = ring.p;
    const int d = m.d;
    if (r < 1) throw PreconditionViolated("r must be at least 1");
    MatSeries id = MatSeries::identity(ring, d);
    // Enough absolute precision for f_0 and Q_g to be right below target.
    ValCap cap(target + Rational(r * p) + Rational(8));

    if (!force) {
        Valuation vp_ = m.P.val();
        if (vp_.value < ValCap(0)) throw PreconditionViolated("P is not integral; rescale the basis first");
        Valuation vinv = inverse(m.P, cap).val();
        if (vinv.value + ValCap(Rational(r)) < ValCap(1)) {
            throw PreconditionViolated("t^r P^{-1} is not divisible by t for r = " + std::to_string(r));
        }
        Valuation vg = (mat_of(m, g) - id).val();
        if (vg.value < ValCap(Rational(r))) {
            throw PreconditionViolated("Mat(g) - Id has valuation " + vg.str() + " < r; g is below the level");
        }
    }

    MatSeries gp_inv = inverse(act(g, m.P), cap);
    MatSeries f0 = (m.P * gp_inv - id).shifted_t(Rational(-r)).truncated(ValCap(target));
    MatSeries Q = gp_inv.shifted_t(Rational(r * (p - 1)));

    DescentReport rep{r, MatSeries::zero(ring, d), 0, Valuation{}, {}, 0, 0};
    Valuation vq = Q.val();
    rep.val_q = vq.value.is_finite() ? vq.value.value() : Rational(0);
    Valuation v0 = f0.val();
    // Smallest J with p^J val_0 + J val(Q) >= target; the iterate after J steps
    // is only known to be correct once step J+1 shows a vanishing update.
    int J = 0;
    if (!f0.is_zero()) {
        Rational val0 = v0.value.value();
        if (val0.sign() < 0 && !force) throw PreconditionViolated("f_0 is not integral");
        while (J < 64 && pow_int(p, J) * max(val0, Rational(0)) + Rational(J) * rep.val_q < target) ++J;
    }
    rep.iteration_bound = J + 1;

    const int limit = force ? 200 : rep.iteration_bound + 4;
    MatSeries X = MatSeries::zero(ring, d).truncated(ValCap(target));
    while (true) {
        MatSeries next = (f0 + m.P * frobenius(X) * Q).truncated(ValCap(target));
        MatSeries delta = next - X;
        ++rep.iterations;
        rep.deltas.push_back(delta.val());
        X = next;
        if (delta.is_zero()) break;
        if (rep.iterations >= limit) throw NonConvergence("fixed-point iteration did not settle");
    }
    rep.H = X;
    rep.residual = rep.deltas.back();
    return rep;
}

std::optional<DescentParams> find_descent_params(const PhiTauModule &m, int k, int max_level) {
    const std::int64_t p = m.ring.p;
    DescentParams out;
    Valuation vp_ = m.P.val();
    if (!vp_.is_exact() || vp_.value.is_infinite()) return std::nullopt;
    if (vp_.value < ValCap(0)) out.s = Rational(-vp_.value.value() / Rational(p - 1)).ceil();
    PhiTauModule mm = out.s == 0 ? m : rescale_basis(m, out.s);
    Valuation vinv = inverse(mm.P).val();
    if (!vinv.is_exact() || vinv.value.is_infinite()) return std::nullopt;
    out.r = std::max<std::int64_t>(1, (Rational(1) - vinv.value.value()).ceil());
    MatSeries id = MatSeries::identity(m.ring, m.d);
    for (int l = k; l <= max_level; ++l) {
        Valuation v = (mat_of(mm, GroupElem::tau(ipow(p, l))) - id).val();
        if (v.value >= ValCap(Rational(out.r))) {
            out.level = l;
            return out;
        }
    }
    return std::nullopt;
}

// ------------------------------------------------------- super-Hoelder tests

Rational floor_margin(const Rational &v, const PLambda &plambda, std::int64_t p) {
    if (plambda.is_rational()) return v - plambda.coeff;
    // p^frac lies in (1, p), so the integer answer lies in this window.
    std::int64_t lo = (v - plambda.coeff * Rational(p)).floor();
    std::int64_t hi = (v - plambda.coeff).ceil();
    while (lo < hi) {
        std::int64_t mid = lo + (hi - lo + 1) / 2;
        if (compare(v - Rational(mid), plambda, p) >= 0) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return Rational(lo);
}

MatrixShReport sh_from_levels(const std::vector<Valuation> &v, const std::vector<ValCap> &precs,
                              const std::vector<GroupElem> &argmins, const PLambda &plambda, std::int64_t p,
                              std::optional<Rational> mu) {
    MatrixShReport rep;
    rep.v = v;
    if (mu) {
        rep.mu = *mu;
    } else {
        std::optional<Rational> best;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_exact() || v[i].value.is_infinite()) continue;
            Rational m = floor_margin(v[i].value.value(), plambda.times(pow_int(p, static_cast<int>(i))), p);
            if (!best || m < *best) best = m;
        }
        rep.mu = best.value_or(Rational(0));
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        Margin margin{static_cast<int>(i), v[i], precs[i], plambda.times(pow_int(p, static_cast<int>(i))), rep.mu,
                      ShStatus::Pass};
        margin.status = judge(v[i], precs[i], margin.plambda_pi, rep.mu, p);
        if (margin.status == ShStatus::Fail && !rep.verdict.witness) {
            rep.verdict.witness = std::make_pair(static_cast<int>(i), argmins[i]);
        }
        rep.verdict.status = combine(rep.verdict.status, margin.status);
        rep.verdict.margins.push_back(margin);
    }
    rep.witness = witness_from_levels(v, plambda, p, rep.mu);
    if (rep.witness.status == WitnessStatus::Refuted) {
        rep.verdict.status = ShStatus::Fail;
        if (!rep.verdict.witness) rep.verdict.witness = std::make_pair(static_cast<int>(v.size() - 1), argmins.back());
    }
    bool fittable = v.size() >= 3 && std::all_of(v.begin(), v.end(), [](const Valuation &x) {
                        return x.is_exact() && x.value.is_finite();
                    });
    if (fittable) {
        std::vector<Rational> vals;
        for (const auto &x : v) vals.push_back(x.value.value());
        rep.fit = fit_levels(vals, p);
    }
    return rep;
}

namespace {

struct MatCache {
    const PhiTauModule &m;
    std::map<std::int64_t, MatSeries> cache;

    const MatSeries &get(std::int64_t c) {
        auto it = cache.find(c);
        if (it == cache.end()) it = cache.emplace(c, mat_of(m, GroupElem::tau(c))).first;
        return it->second;
    }
};

void keep_min(Valuation &best, GroupElem &arg, const Valuation &v, const GroupElem &g) {
    if (v.value < best.value || (v.value == best.value && best.is_exact() && !v.is_exact())) {
        best = v;
        arg = g;
    }
}

} // namespace

MatrixShReport matrix_sh_test(const PhiTauModule &m, int k, const PLambda &plambda, int i_max,
                              std::optional<Rational> mu) {
    const std::int64_t p = m.ring.p;
    MatCache mats{m, {}};
    std::vector<Valuation> v;
    std::vector<ValCap> precs;
    std::vector<GroupElem> args;
    const std::int64_t pk = ipow(p, k);
    for (int i = 0; i <= i_max; ++i) {
        Valuation best{ValCap::infinity(), false};
        ValCap prec = ValCap::infinity();
        GroupElem arg = GroupElem::tau(pk * ipow(p, i));
        for (std::int64_t hc : {std::int64_t{0}, pk}) {
            for (std::int64_t s = 1; s < p; ++s) {
                std::int64_t gc = hc + s * ipow(p, k + i);
                MatSeries diff = mats.get(gc) - mats.get(hc);
                keep_min(best, arg, diff.val(), GroupElem::tau(gc));
                prec = min(prec, diff.prec());
            }
        }
        v.push_back(best);
        precs.push_back(prec);
        args.push_back(arg);
    }
    return sh_from_levels(v, precs, args, plambda, p, mu);
}

std::vector<BasisShReport> module_sh_test(const PhiTauModule &m, int k, int n, int i_max) {
    const Ring &ring = m.ring;
    const std::int64_t p = ring.p;
    PLambda pl = PLambda::cp_level(p, k - n);
    MatCache mats{m, {}};
    std::optional<MatSeries> winv;
    if (m.lattice) winv = inverse(*m.lattice);
    PerfSeries root = PerfSeries::monomial(ring, 1, 0, Rational(1, ipow(p, n)));

    std::vector<BasisShReport> out;
    for (int j = 0; j < m.d; ++j) {
        for (bool scaled : {false, true}) {
            if (scaled && n == 0) continue;
            std::vector<Valuation> vt, vw;
            std::vector<ValCap> pt, pw;
            std::vector<GroupElem> at, aw;
            for (int i = 0; i <= i_max; ++i) {
                Valuation bt{ValCap::infinity(), false}, bw{ValCap::infinity(), false};
                ValCap prt = ValCap::infinity(), prw = ValCap::infinity();
                GroupElem gt = GroupElem::tau(ipow(p, k + i)), gw = gt;
                for (std::int64_t s = 1; s < p; ++s) {
                    GroupElem g = GroupElem::tau(s * ipow(p, k + i));
                    std::vector<PerfSeries> col = mats.get(g.c).column(j);
                    std::vector<PerfSeries> diff;
                    if (scaled) {
                        PerfSeries moved = act(g, root);
                        for (int r = 0; r < m.d; ++r) {
                            diff.push_back(col[r] * moved - (r == j ? root : PerfSeries::zero(ring)));
                        }
                    } else {
                        for (int r = 0; r < m.d; ++r) {
                            diff.push_back(col[r] - (r == j ? PerfSeries::one(ring) : PerfSeries::zero(ring)));
                        }
                    }
                    MatSeries dm = MatSeries::diagonal(diff);
                    keep_min(bt, gt, v_tau(diff), g);
                    prt = min(prt, dm.prec());
                    if (winv) {
                        auto re = *winv * diff;
                        keep_min(bw, gw, v_tau(re), g);
                        prw = min(prw, MatSeries::diagonal(re).prec());
                    }
                }
                vt.push_back(bt);
                pt.push_back(prt);
                at.push_back(gt);
                vw.push_back(bw);
                pw.push_back(prw);
                aw.push_back(gw);
            }
            BasisShReport rep;
            rep.j = j;
            rep.scaled = scaled;
            rep.under_tau = sh_from_levels(vt, pt, at, pl, p, std::nullopt);
            if (winv) rep.under_tilde = sh_from_levels(vw, pw, aw, pl, p, std::nullopt);
            out.push_back(std::move(rep));
        }
    }
    return out;
}

// ---------------------------------------------------------------- file I/O

void write_module(std::ostream &out, const PhiTauModule &m) {
    out << "p " << m.ring.p << "\n";
    out << "d " << m.d << "\n";
    out << "prec " << m.ring.work_prec.str() << "\n";
    out << "denom_cap " << m.ring.denom_cap << "\n";
    auto dump = [&](const char *name, const MatSeries &mat) {
        out << name << "\n";
        for (int i = 0; i < m.d; ++i) {
            for (int j = 0; j < m.d; ++j) out << format_series(mat.at(i, j)) << "\n";
        }
    };
    dump("P", m.P);
    dump("MatTau", m.mat_tau);
    if (m.lattice) dump("W", *m.lattice);
}

PhiTauModule read_module(std::istream &in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        auto e = line.find_last_not_of(" \t\r");
        lines.push_back(line.substr(b, e - b + 1));
    }
    std::size_t pos = 0;
    auto header = [&](const std::string &key) -> std::string {
        if (pos >= lines.size()) throw ParseError("module file: missing '" + key + "'", pos);
        std::istringstream ls(lines[pos]);
        std::string k, v;
        ls >> k >> v;
        if (k != key || v.empty()) throw ParseError("module file: expected '" + key + " <value>'", pos);
        ++pos;
        return v;
    };
    auto integer = [&](const std::string &s) {
        auto r = Rational::parse(s);
        if (!r || r->den() != 1) throw ParseError("module file: expected integer, got '" + s + "'", pos - 1);
        return r->num();
    };
    Ring ring;
    ring.p = integer(header("p"));
    int d = static_cast<int>(integer(header("d")));
    auto prec = Rational::parse(header("prec"));
    if (!prec) throw ParseError("module file: bad prec", pos - 1);
    ring.work_prec = *prec;
    ring.denom_cap = static_cast<int>(integer(header("denom_cap")));
    ring.validate();
    if (d < 1 || d > 8) throw ParseError("module file: dimension out of range", 1);

    auto matrix = [&](const std::string &name) {
        if (pos >= lines.size() || lines[pos] != name) throw ParseError("module file: expected '" + name + "'", pos);
        ++pos;
        MatSeries mat(ring, d);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                if (pos >= lines.size()) throw ParseError("module file: truncated matrix " + name, pos);
                mat.at(i, j) = parse_series(lines[pos++], ring);
            }
        }
        return mat;
    };
    MatSeries P = matrix("P");
    MatSeries tau = matrix("MatTau");
    std::optional<MatSeries> w;
    if (pos < lines.size()) w = matrix("W");
    if (pos != lines.size()) throw ParseError("module file: trailing content", pos);
    PhiTauModule m(ring, P, tau, w);
    m.validate();
    return m;
}

} // namespace tilted
