#include "tilted/ring.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <tuple>

namespace tilted {

namespace {

bool key_less(const Term &a, const Term &b) {
    return std::tie(a.sval, a.mono.eu, a.mono.et) < std::tie(b.sval, b.mono.eu, b.mono.et);
}

std::uint32_t reduce_mod(std::int64_t c, std::int64_t p) {
    std::int64_t r = c % p;
    if (r < 0) r += p;
    return static_cast<std::uint32_t>(r);
}

std::uint32_t inverse_mod(std::uint32_t c, std::int64_t p) {
    if (c % p == 0) throw ZeroDivisor("inverse of zero coefficient");
    std::int64_t result = 1;
    std::int64_t base = c % p;
    std::int64_t e = p - 2;
    while (e > 0) {
        if (e & 1) result = result * base % p;
        base = base * base % p;
        e >>= 1;
    }
    return static_cast<std::uint32_t>(result);
}

} // namespace

bool is_prime(std::int64_t n) {
    if (n < 2) return false;
    for (std::int64_t d = 2; d * d <= n; ++d) {
        if (n % d == 0) return false;
    }
    return true;
}

void Ring::validate() const {
    if (p < 3 || !is_prime(p)) throw std::invalid_argument("p must be an odd prime");
    if (denom_cap < 1) throw std::invalid_argument("denominator cap exponent must be >= 1");
    if (work_prec.sign() <= 0) throw std::invalid_argument("precision must be positive");
    // Scaled valuations must leave ample int64 headroom.
    if (static_cast<double>(val_scale()) > 1e9) throw std::invalid_argument("denominator cap too large for p");
}

std::int64_t Ring::exp_scale() const { return ipow(p, denom_cap); }

std::int64_t Ring::val_scale() const { return checked_mul(p - 1, exp_scale()); }

// ---------------------------------------------------------------------------

PExp PExp::normalized(std::int64_t num, int kden, std::int64_t p) {
    if (num == 0) return {0, 0};
    while (kden > 0 && num % p == 0) {
        num /= p;
        --kden;
    }
    while (kden < 0) {
        num = checked_mul(num, p);
        ++kden;
    }
    return {num, kden};
}

PExp PExp::from_rational(const Rational &r, const Ring &ring) {
    std::int64_t den = r.den();
    int k = 0;
    while (den % ring.p == 0) {
        den /= ring.p;
        ++k;
    }
    if (den != 1) throw CapExceeded("exponent " + r.str() + " is not in Z[1/p]");
    if (k > ring.denom_cap) {
        throw CapExceeded("exponent " + r.str() + " exceeds denominator cap p^" + std::to_string(ring.denom_cap));
    }
    return {r.num(), k};
}

Rational PExp::value(std::int64_t p) const { return Rational(num, ipow(p, kden)); }

std::int64_t PExp::scaled(const Ring &ring) const {
    if (kden > ring.denom_cap) throw CapExceeded("exponent denominator exceeds cap");
    return checked_mul(num, ipow(ring.p, ring.denom_cap - kden));
}

PExp Monomial::u_exp(const Ring &ring) const { return PExp::normalized(eu, ring.denom_cap, ring.p); }

PExp Monomial::t_exp(const Ring &ring) const { return PExp::normalized(et, ring.denom_cap, ring.p); }

std::int64_t Monomial::scaled_val(const Ring &ring) const {
    return checked_add(checked_mul(eu, ring.p), checked_mul(et, ring.p - 1));
}

Rational Monomial::val(const Ring &ring) const { return Rational(scaled_val(ring), ring.val_scale()); }

std::string Valuation::str() const { return lower_bound ? ">=" + value.str() : value.str(); }

std::int64_t scaled_cut(const ValCap &cap, const Ring &ring) {
    Rational scaled = cap.value() * Rational(ring.val_scale());
    return scaled.ceil();
}

// ---------------------------------------------------------------------------

SeriesBuilder::SeriesBuilder(const Ring &ring, ValCap prec)
    : ring_(ring), prec_(prec), bounded_(prec.is_finite()) {
    if (bounded_) cut_ = scaled_cut(prec_, ring_);
}

void SeriesBuilder::add(const Monomial &m, std::int64_t coeff) {
    std::uint32_t c = reduce_mod(coeff, ring_.p);
    if (c == 0) return;
    std::int64_t sv = m.scaled_val(ring_);
    if (bounded_ && sv >= cut_) return;
    raw_.push_back({m, sv, c});
}

PerfSeries SeriesBuilder::build() && {
    std::sort(raw_.begin(), raw_.end(), key_less);
    PerfSeries out(ring_, prec_);
    for (const auto &term : raw_) {
        if (!out.terms_.empty() && out.terms_.back().mono == term.mono) {
            auto &back = out.terms_.back();
            back.coeff = static_cast<std::uint32_t>((back.coeff + term.coeff) % ring_.p);
            if (back.coeff == 0) out.terms_.pop_back();
        } else {
            out.terms_.push_back(term);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

PerfSeries::PerfSeries(const Ring &ring, ValCap prec) : ring_(ring), prec_(prec) {}

PerfSeries PerfSeries::constant(const Ring &ring, std::int64_t c, ValCap prec) {
    return from_mono(ring, c, Monomial{}, prec);
}

PerfSeries PerfSeries::monomial(const Ring &ring, std::int64_t c, const Rational &eu, const Rational &et,
                                ValCap prec) {
    Monomial m{PExp::from_rational(eu, ring).scaled(ring), PExp::from_rational(et, ring).scaled(ring)};
    return from_mono(ring, c, m, prec);
}

PerfSeries PerfSeries::from_mono(const Ring &ring, std::int64_t c, Monomial m, ValCap prec) {
    SeriesBuilder b(ring, prec);
    b.add(m, c);
    return std::move(b).build();
}

std::uint32_t PerfSeries::coefficient(const Monomial &m) const {
    for (const auto &term : terms_) {
        if (term.mono == m) return term.coeff;
    }
    return 0;
}

Valuation PerfSeries::val() const {
    if (terms_.empty()) return {prec_, true};
    return {Rational(terms_.front().sval, ring_.val_scale()), false};
}

ValCap PerfSeries::val_bound() const { return val().value; }

PerfSeries PerfSeries::truncated(const ValCap &cap) const {
    if (cap >= prec_) return *this;
    PerfSeries out(ring_, cap);
    std::int64_t cut = scaled_cut(cap, ring_);
    for (const auto &term : terms_) {
        if (term.sval >= cut) break;
        out.terms_.push_back(term);
    }
    return out;
}

void PerfSeries::check_compatible(const PerfSeries &other) const {
    if (!ring_.compatible(other.ring_)) throw RingMismatch("series over different (p, D)");
}

PerfSeries PerfSeries::operator-() const { return scaled(-1); }

PerfSeries PerfSeries::scaled(std::int64_t c) const {
    std::uint32_t cc = reduce_mod(c, ring_.p);
    PerfSeries out(ring_, prec_);
    if (cc == 0) return out;
    out.terms_ = terms_;
    for (auto &term : out.terms_) term.coeff = static_cast<std::uint32_t>(term.coeff * cc % ring_.p);
    return out;
}

PerfSeries PerfSeries::shifted(const Monomial &m, std::int64_t c) const {
    std::uint32_t cc = reduce_mod(c, ring_.p);
    std::int64_t dv = m.scaled_val(ring_);
    ValCap prec = prec_ + ValCap(Rational(dv, ring_.val_scale()));
    PerfSeries out(ring_, prec);
    if (cc == 0) return out;
    out.terms_.reserve(terms_.size());
    for (const auto &term : terms_) {
        Term moved{{checked_add(term.mono.eu, m.eu), checked_add(term.mono.et, m.et)},
                   checked_add(term.sval, dv),
                   static_cast<std::uint32_t>(term.coeff * cc % ring_.p)};
        out.terms_.push_back(moved);
    }
    return out;
}

PerfSeries operator+(const PerfSeries &x, const PerfSeries &y) {
    x.check_compatible(y);
    ValCap prec = min(x.prec_, y.prec_);
    PerfSeries out(x.ring_, prec);
    const bool bounded = prec.is_finite();
    const std::int64_t cut = bounded ? scaled_cut(prec, x.ring_) : 0;
    const std::int64_t p = x.ring_.p;
    auto xi = x.terms_.begin();
    auto yi = y.terms_.begin();
    auto emit = [&](const Term &term) {
        if (bounded && term.sval >= cut) return false;
        out.terms_.push_back(term);
        return true;
    };
    while (xi != x.terms_.end() || yi != y.terms_.end()) {
        bool take_x = yi == y.terms_.end() || (xi != x.terms_.end() && key_less(*xi, *yi));
        bool take_y = xi == x.terms_.end() || (yi != y.terms_.end() && key_less(*yi, *xi));
        if (take_x) {
            if (!emit(*xi)) break;
            ++xi;
        } else if (take_y) {
            if (!emit(*yi)) break;
            ++yi;
        } else {
            Term sum = *xi;
            sum.coeff = static_cast<std::uint32_t>((xi->coeff + yi->coeff) % p);
            ++xi;
            ++yi;
            if (sum.coeff == 0) continue;
            if (!emit(sum)) break;
        }
    }
    return out;
}

PerfSeries operator-(const PerfSeries &x, const PerfSeries &y) { return x + (-y); }

PerfSeries operator*(const PerfSeries &x, const PerfSeries &y) {
    x.check_compatible(y);
    ValCap prec = min(x.val_bound() + y.prec_, y.val_bound() + x.prec_);
    const bool bounded = prec.is_finite();
    const std::int64_t cut = bounded ? scaled_cut(prec, x.ring_) : 0;
    const std::int64_t p = x.ring_.p;

    std::vector<Term> raw;
    raw.reserve(x.terms_.size() * std::min<std::size_t>(y.terms_.size(), 64));
    for (const auto &a : x.terms_) {
        for (const auto &b : y.terms_) {
            std::int64_t sv = a.sval + b.sval;
            if (bounded && sv >= cut) break;
            raw.push_back({{a.mono.eu + b.mono.eu, a.mono.et + b.mono.et},
                           sv,
                           static_cast<std::uint32_t>(static_cast<std::uint64_t>(a.coeff) * b.coeff % p)});
        }
    }
    std::sort(raw.begin(), raw.end(), key_less);
    PerfSeries out(x.ring_, prec);
    for (const auto &term : raw) {
        if (!out.terms_.empty() && out.terms_.back().mono == term.mono) {
            auto &back = out.terms_.back();
            back.coeff = static_cast<std::uint32_t>((back.coeff + term.coeff) % p);
            if (back.coeff == 0) out.terms_.pop_back();
        } else {
            out.terms_.push_back(term);
        }
    }
    return out;
}

bool operator==(const PerfSeries &x, const PerfSeries &y) {
    if (!x.ring_.compatible(y.ring_) || !(x.prec_ == y.prec_) || x.terms_.size() != y.terms_.size()) return false;
    for (std::size_t i = 0; i < x.terms_.size(); ++i) {
        if (!(x.terms_[i].mono == y.terms_[i].mono) || x.terms_[i].coeff != y.terms_[i].coeff) return false;
    }
    return true;
}

bool PerfSeries::equals_to_precision(const PerfSeries &y) const { return (*this - y).empty(); }

Valuation val(const PerfSeries &x) { return x.val(); }

// ---------------------------------------------------------------------------

PerfSeries frobenius(const PerfSeries &x, int n) {
    if (n < 0) return frobenius_inv(x, -n);
    std::int64_t factor = ipow(x.ring_.p, n);
    PerfSeries out(x.ring_, x.prec_ * Rational(factor));
    out.terms_ = x.terms_;
    for (auto &term : out.terms_) {
        term.mono.eu = checked_mul(term.mono.eu, factor);
        term.mono.et = checked_mul(term.mono.et, factor);
        term.sval = checked_mul(term.sval, factor);
    }
    return out;
}

PerfSeries frobenius_inv(const PerfSeries &x, int n) {
    if (n < 0) return frobenius(x, -n);
    std::int64_t factor = ipow(x.ring_.p, n);
    PerfSeries out(x.ring_, x.prec_ * Rational(1, factor));
    out.terms_ = x.terms_;
    for (auto &term : out.terms_) {
        if (term.mono.eu % factor != 0 || term.mono.et % factor != 0) {
            throw CapExceeded("frobenius inverse exceeds denominator cap p^" + std::to_string(x.ring_.denom_cap));
        }
        term.mono.eu /= factor;
        term.mono.et /= factor;
        term.sval /= factor;
    }
    return out;
}

PerfSeries invert(const PerfSeries &x, ValCap cap) {
    const Ring &ring = x.ring();
    if (x.empty()) throw ZeroDivisor("inverse of a series with no known terms");
    auto terms = x.terms();
    if (terms.size() > 1 && terms[1].sval == terms[0].sval) {
        throw NonDominantLeading("leading valuation attained by several monomials");
    }
    const Term lead = terms[0];
    const Rational v = lead.mono.val(ring);
    const std::uint32_t lead_inv = inverse_mod(lead.coeff, ring.p);
    const Monomial lead_mono_inv{-lead.mono.eu, -lead.mono.et};

    // x = lead * (1 + y) with val(y) > 0.
    PerfSeries z = x.shifted(lead_mono_inv, lead_inv);
    PerfSeries y = z - PerfSeries::one(ring);
    if (y.empty() && y.is_exact()) return PerfSeries::from_mono(ring, lead_inv, lead_mono_inv);

    ValCap abs_cap = cap.is_finite() ? cap : ValCap(ring.work_prec);
    // Relative precision of 1/z, in the same units as z.
    ValCap rel = min(z.prec(), abs_cap + ValCap(v));
    PerfSeries neg_y = (-y).truncated(rel);
    PerfSeries sum = PerfSeries::one(ring).truncated(rel);
    PerfSeries power = PerfSeries::one(ring);
    while (true) {
        power = (power * neg_y).truncated(rel);
        if (power.empty()) break;
        sum += power;
    }
    return sum.shifted(lead_mono_inv, lead_inv);
}

PerfSeries pow(const PerfSeries &x, std::int64_t n, ValCap cap) {
    if (n < 0) return invert(pow(x, -n, cap), cap);
    PerfSeries result = PerfSeries::one(x.ring());
    PerfSeries base = x;
    if (cap.is_finite()) base = base.truncated(cap);
    while (n > 0) {
        if (n & 1) {
            result *= base;
            if (cap.is_finite()) result = result.truncated(cap);
        }
        n >>= 1;
        if (n > 0) {
            base *= base;
            if (cap.is_finite()) base = base.truncated(cap);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Text form.

namespace {

class Parser {
  public:
    Parser(std::string_view text, const Ring &ring) : text_(text), ring_(ring) {}

    PerfSeries run() {
        std::vector<std::pair<Monomial, std::int64_t>> terms;
        ValCap prec = ValCap::infinity();
        bool have_prec = false;
        int sign = 1;
        skip_ws();
        if (peek() == '-') {
            sign = -1;
            ++pos_;
            skip_ws();
        }
        while (true) {
            if (have_prec) fail("precision term O(...) must come last");
            if (peek() == 'O') {
                if (sign < 0) fail("negated precision term");
                ++pos_;
                expect('(');
                skip_ws();
                Rational r = rational();
                skip_ws();
                expect(')');
                prec = r;
                have_prec = true;
            } else {
                auto [mono, coeff] = term();
                terms.emplace_back(mono, sign * coeff);
            }
            skip_ws();
            if (pos_ == text_.size()) break;
            char c = text_[pos_];
            if (c != '+' && c != '-') fail("expected '+' or end of input");
            sign = c == '+' ? 1 : -1;
            ++pos_;
            skip_ws();
        }
        SeriesBuilder b(ring_, prec);
        for (const auto &[mono, coeff] : terms) b.add(mono, coeff);
        return std::move(b).build();
    }

  private:
    [[noreturn]] void fail(const std::string &what) const { throw ParseError(what, pos_); }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::int64_t digits() {
        if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected digits");
        std::int64_t v = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
            v = checked_add(checked_mul(v, 10), text_[pos_] - '0');
            ++pos_;
        }
        return v;
    }

    Rational rational() {
        bool neg = false;
        if (peek() == '-') {
            neg = true;
            ++pos_;
        }
        std::int64_t num = digits();
        std::int64_t den = 1;
        if (peek() == '/') {
            ++pos_;
            den = digits();
            if (den == 0) fail("zero denominator");
        }
        return Rational(neg ? -num : num, den);
    }

    std::pair<Monomial, std::int64_t> term() {
        std::int64_t coeff = 1;
        Monomial mono{};
        bool need_atom = true;
        if (std::isdigit(static_cast<unsigned char>(peek()))) {
            coeff = digits() % ring_.p;
            skip_ws();
            if (peek() != '*') return {mono, coeff};
            ++pos_;
            skip_ws();
        }
        while (need_atom) {
            char var = peek();
            if (var != 'u' && var != 't') fail("expected 'u' or 't'");
            ++pos_;
            Rational e(1);
            skip_ws();
            if (peek() == '^') {
                ++pos_;
                skip_ws();
                if (peek() == '{') {
                    ++pos_;
                    skip_ws();
                    e = rational();
                    skip_ws();
                    expect('}');
                } else {
                    e = rational();
                    if (!e.is_integer()) fail("fractional exponent needs braces");
                }
            }
            std::int64_t scaled = PExp::from_rational(e, ring_).scaled(ring_);
            if (var == 'u') {
                mono.eu = checked_add(mono.eu, scaled);
            } else {
                mono.et = checked_add(mono.et, scaled);
            }
            skip_ws();
            need_atom = peek() == '*';
            if (need_atom) {
                ++pos_;
                skip_ws();
            }
        }
        return {mono, coeff};
    }

    std::string_view text_;
    const Ring &ring_;
    std::size_t pos_ = 0;
};

std::string format_atom(char var, const PExp &e, std::int64_t p) {
    std::string out(1, var);
    if (e.num == 1 && e.kden == 0) return out;
    return out + "^{" + format_pexp(e, p) + "}";
}

} // namespace

std::string format_pexp(const PExp &e, std::int64_t p) { return e.value(p).str(); }

PerfSeries parse_series(std::string_view text, const Ring &ring) { return Parser(text, ring).run(); }

std::string format_series(const PerfSeries &x) {
    const Ring &ring = x.ring();
    std::string out;
    for (const auto &term : x.terms()) {
        if (!out.empty()) out += " + ";
        std::vector<std::string> parts;
        PExp eu = term.mono.u_exp(ring);
        PExp et = term.mono.t_exp(ring);
        if (eu.num != 0) parts.push_back(format_atom('u', eu, ring.p));
        if (et.num != 0) parts.push_back(format_atom('t', et, ring.p));
        if (parts.empty() || term.coeff != 1) parts.insert(parts.begin(), std::to_string(term.coeff));
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i > 0) out += "*";
            out += parts[i];
        }
    }
    if (out.empty()) out = "0";
    if (x.prec().is_finite()) out += " + O(" + x.prec().value().str() + ")";
    return out;
}

} // namespace tilted
