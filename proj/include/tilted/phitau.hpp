#pragma once

// Etale (phi, tau)-modules given by matrices: P = Mat(phi) over F_p((t)) and
// Mat(tau) over the bivariate ring, with an optional tau-stable lattice.
//
// Coordinates are column vectors in the basis m_1..m_d, so for a semilinear
// g one has coords(g x) = Mat(g) * g(coords(x)).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tilted/galois.hpp"
#include "tilted/holder.hpp"
#include "tilted/ring.hpp"

namespace tilted {

class MatSeries {
  public:
    MatSeries(const Ring &ring, int d);

    static MatSeries identity(const Ring &ring, int d);
    static MatSeries zero(const Ring &ring, int d) { return MatSeries(ring, d); }
    static MatSeries from_rows(const Ring &ring, const std::vector<std::vector<PerfSeries>> &rows);
    static MatSeries diagonal(const std::vector<PerfSeries> &entries);

    [[nodiscard]] int dim() const noexcept { return d_; }
    [[nodiscard]] const Ring &ring() const noexcept { return ring_; }
    [[nodiscard]] const PerfSeries &at(int i, int j) const { return e_[index(i, j)]; }
    PerfSeries &at(int i, int j) { return e_[index(i, j)]; }
    [[nodiscard]] std::vector<PerfSeries> column(int j) const;

    /// min over entries; a lower-bound marker only if every entry is empty.
    [[nodiscard]] Valuation val() const;
    /// min of entry precisions
    [[nodiscard]] ValCap prec() const;
    /// All entries zero to their precision.
    [[nodiscard]] bool is_zero() const;

    [[nodiscard]] MatSeries truncated(const ValCap &cap) const;
    /// Every entry multiplied by s.
    [[nodiscard]] MatSeries scaled(const PerfSeries &s) const;
    /// Every entry multiplied by u^0 t^e (e may be negative).
    [[nodiscard]] MatSeries shifted_t(const Rational &e) const;

    template <typename F>
    [[nodiscard]] MatSeries map(F f) const {
        MatSeries out(ring_, d_);
        for (std::size_t i = 0; i < e_.size(); ++i) out.e_[i] = f(e_[i]);
        return out;
    }

    friend MatSeries operator+(const MatSeries &a, const MatSeries &b);
    friend MatSeries operator-(const MatSeries &a, const MatSeries &b);
    friend MatSeries operator*(const MatSeries &a, const MatSeries &b);
    friend bool operator==(const MatSeries &a, const MatSeries &b);
    [[nodiscard]] bool equals_to_precision(const MatSeries &b) const;

  private:
    [[nodiscard]] std::size_t index(int i, int j) const;

    Ring ring_;
    int d_;
    std::vector<PerfSeries> e_;
};

std::vector<PerfSeries> operator*(const MatSeries &a, const std::vector<PerfSeries> &v);

MatSeries frobenius(const MatSeries &m, int n = 1);
MatSeries act(const GroupElem &g, const MatSeries &m);
PerfSeries det(const MatSeries &m);
/// Adjugate over the determinant; the determinant must have a dominant
/// leading term. Infinite expansions stop at cap (work_prec if infinite).
MatSeries inverse(const MatSeries &m, ValCap cap = ValCap::infinity());

/// min of the coordinate valuations.
Valuation v_tau(const std::vector<PerfSeries> &coords);

struct PhiTauModule {
    Ring ring;
    int d = 1;
    MatSeries P;
    MatSeries mat_tau;
    /// Columns are the lattice basis in m-coordinates.
    std::optional<MatSeries> lattice;

    PhiTauModule(const Ring &r, MatSeries p, MatSeries tau_mat, std::optional<MatSeries> w = std::nullopt);

    /// P pure-t with integer exponents, det P with dominant leading term.
    /// Throws std::invalid_argument.
    void validate() const;
};

/// Base change of the trivial module along B in GL_d(F_p((t))):
/// P = B^{-1} phi(B), Mat(tau) = B^{-1} tau(B), W = B^{-1}.
PhiTauModule basechange_from(const MatSeries &B);

/// Random invertible B over F_p[t] for a given seed.
///   complexity 1, 2: elementary matrices and constant diagonals; det B is a
///     nonzero constant, so the module is exact.
///   complexity >= 3: also diagonal t^k factors.
///   complexity >= 4: also a diagonal factor 1 + t f(t).
/// Draws with B' = 0 (exponents all divisible by p) are redrawn.
MatSeries basechange_matrix(const Ring &ring, int d, std::uint64_t seed, int complexity);
PhiTauModule basechange_generate(const Ring &ring, int d, std::uint64_t seed, int complexity);

/// The same module in the basis t^s m_j.
PhiTauModule rescale_basis(const PhiTauModule &m, std::int64_t s);

/// Mat(g) through the cocycle rule Mat(gh) = Mat(g) g(Mat(h)); only the
/// tau-component of g contributes since Mat(gamma_a) = Id.
MatSeries mat_of(const PhiTauModule &m, const GroupElem &g);

struct CocycleReport {
    bool ok = false;
    Valuation residual;
    ValCap cap;
};

/// Checks P phi(Mat(g)) = Mat(g) g(P).
CocycleReport cocycle_check(const PhiTauModule &m, const GroupElem &g);

/// val(W^{-1} coords). Throws std::invalid_argument without a lattice.
Valuation v_tilde(const PhiTauModule &m, const std::vector<PerfSeries> &coords);

/// Coordinates of g x.
std::vector<PerfSeries> act_on_coords(const PhiTauModule &m, const GroupElem &g, const std::vector<PerfSeries> &coords);

struct EquivConstant {
    Rational sampled = 0;  // max |v_tau - v_tilde| over the samples
    Rational analytic = 0; // max(|val W|, |val W^{-1}|)
};
EquivConstant equiv_constant(const PhiTauModule &m, const std::vector<std::vector<PerfSeries>> &samples);

struct DescentReport {
    std::int64_t r = 0;
    MatSeries H;
    int iterations = 0;
    Valuation residual;
    /// val(X_{j+1} - X_j) after each iteration
    std::vector<Valuation> deltas;
    Rational val_q = 0;
    int iteration_bound = 0;
};

/// Solves H = f_0 + P phi(H) Q_g by iteration from 0, where
///   f_0 = t^{-r}(P (gP)^{-1} - Id),   Q_g = t^{r(p-1)} (gP)^{-1}.
/// The fixed point is H = t^{-r}(Mat(g) - Id). Requires val(P) >= 0,
/// val(P^{-1}) + r >= 1 and val(Mat(g) - Id) >= r unless force is set.
DescentReport descend_fixed_point(const PhiTauModule &m, const GroupElem &g, std::int64_t r,
                                  const Rational &target, bool force = false);

struct DescentParams {
    std::int64_t s = 0; // basis rescaling making P integral
    std::int64_t r = 1;
    int level = 0;      // tau^{p^level} and deeper satisfy the level condition
};
/// Smallest s, r, then level >= k, scanning up to max_level.
std::optional<DescentParams> find_descent_params(const PhiTauModule &m, int k, int max_level = 8);

/// Super-Hoelder test of g -> Mat(g) on the tau_k family. Sampled pairs are
/// h in {Id, tau^{p^k}} and g = h tau^{m p^{k+i}}. Without mu, the bound uses
/// the largest mu that the measured levels allow and only the growth
/// criterion can fail the test.
struct MatrixShReport {
    ShVerdict verdict;
    Rational mu = 0;
    std::vector<Valuation> v;
    std::optional<ShEstimate> fit;
    WitnessReport witness;
};
MatrixShReport matrix_sh_test(const PhiTauModule &m, int k, const PLambda &plambda, int i_max,
                              std::optional<Rational> mu = std::nullopt);

/// Same machinery on any measured level sequence.
MatrixShReport sh_from_levels(const std::vector<Valuation> &v, const std::vector<ValCap> &precs,
                              const std::vector<GroupElem> &argmins, const PLambda &plambda, std::int64_t p,
                              std::optional<Rational> mu);

/// Largest rational mu (an integer when p^lambda is irrational) with
/// v >= p^lambda + mu.
Rational floor_margin(const Rational &v, const PLambda &plambda, std::int64_t p);

struct BasisShReport {
    int j = 0;
    bool scaled = false; // t^{1/p^n} m_j rather than m_j
    MatrixShReport under_tau;
    MatrixShReport under_tilde;
};

/// For every basis vector m_j (and t^{1/p^n} m_j when n >= 1) tests the orbit
/// at exponent p^{k-n} p/(p-1) under v_tau and, with a lattice, v_tilde.
std::vector<BasisShReport> module_sh_test(const PhiTauModule &m, int k, int n, int i_max);

/// Text format:
///   p <p>
///   d <d>
///   prec <work_prec>
///   denom_cap <D>
///   P            followed by d*d series lines, row-major
///   MatTau       likewise
///   W            optional, likewise
void write_module(std::ostream &out, const PhiTauModule &m);
PhiTauModule read_module(std::istream &in);

} // namespace tilted
