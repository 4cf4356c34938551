#include "tilted/galois.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <stdexcept>

namespace tilted {

namespace {

std::int64_t mod_floor(std::int64_t x, std::int64_t m) {
    std::int64_t r = x % m;
    return r < 0 ? r + m : r;
}

std::int64_t mulmod(std::int64_t a, std::int64_t b, std::int64_t m) {
    __extension__ typedef __int128 i128;
    return static_cast<std::int64_t>(mod_floor(static_cast<std::int64_t>((static_cast<i128>(a) * b) % m), m));
}

/// Inverse of a modulo m via extended Euclid; gcd(a, m) must be 1.
std::int64_t inverse_mod(std::int64_t a, std::int64_t m) {
    std::int64_t r0 = m, r1 = mod_floor(a, m);
    std::int64_t s0 = 0, s1 = 1;
    while (r1 != 0) {
        std::int64_t q = r0 / r1;
        std::int64_t r2 = r0 - q * r1;
        std::int64_t s2 = s0 - q * s1;
        r0 = r1;
        r1 = r2;
        s0 = s1;
        s1 = s2;
    }
    if (r0 != 1) throw std::invalid_argument("element not invertible modulo p^N");
    return mod_floor(s0, m);
}

int log_p(std::int64_t modulus, std::int64_t p) {
    int n = 0;
    while (modulus > 1) {
        modulus /= p;
        ++n;
    }
    return n;
}

/// (1 + w)^n for n >= 0 through the base-p digits of n, truncated at cap.
PerfSeries binomial_power(const Monomial &w, std::int64_t n, const Ring &ring, const ValCap &cap) {
    PerfSeries result = PerfSeries::one(ring);
    if (cap.is_finite()) result = result.truncated(cap);
    const std::int64_t cut = cap.is_finite() ? scaled_cut(cap, ring) : 0;
    Monomial wi = w;
    while (n > 0) {
        std::int64_t digit = n % ring.p;
        n /= ring.p;
        if (cap.is_finite() && wi.scaled_val(ring) >= cut) break;
        if (digit != 0) {
            // (1 + wi)^digit with binomial coefficients C(digit, j), digit < p.
            SeriesBuilder factor(ring, cap);
            std::int64_t binom = 1;
            Monomial power{};
            for (std::int64_t j = 0; j <= digit; ++j) {
                factor.add(power, binom);
                binom = binom * (digit - j) / (j + 1);
                power = Monomial{checked_add(power.eu, wi.eu), checked_add(power.et, wi.et)};
            }
            result = result * std::move(factor).build();
            if (cap.is_finite()) result = result.truncated(cap);
        }
        if (n > 0) wi = Monomial{checked_mul(wi.eu, ring.p), checked_mul(wi.et, ring.p)};
    }
    return result;
}

/// Decomposes r = m * p^e with p not dividing m; r != 0.
std::pair<std::int64_t, int> split_p_part(const Rational &r, std::int64_t p) {
    std::int64_t m = r.num();
    int e = 0;
    while (m % p == 0) {
        m /= p;
        ++e;
    }
    std::int64_t den = r.den();
    while (den % p == 0) {
        den /= p;
        --e;
    }
    if (den != 1) throw CapExceeded("eps exponent " + r.str() + " is not in Z[1/p]");
    return {m, e};
}

/// u^{p^e} as a scaled monomial.
Monomial u_p_power(int e, const Ring &ring) {
    if (e < -ring.denom_cap) {
        throw CapExceeded("eps power needs denominator beyond cap p^" + std::to_string(ring.denom_cap));
    }
    return Monomial{ipow(ring.p, ring.denom_cap + e), 0};
}

/// Relative target to absolute cap: a finite target stays, an infinite one
/// stays infinite.
ValCap shifted_cap(const ValCap &target, const Rational &by) { return target - by; }

} // namespace

void check_group_elem(const GroupElem &g, std::int64_t p) {
    if (g.a % p == 0) throw std::invalid_argument("gamma_a needs p not dividing a");
    if (g.modulus != 0 && g.modulus % p != 0) throw std::invalid_argument("group modulus must be a power of p");
}

GroupElem compose(const GroupElem &g, const GroupElem &h) {
    std::int64_t modulus = 0;
    if (g.modulus == 0) {
        modulus = h.modulus;
    } else if (h.modulus == 0) {
        modulus = g.modulus;
    } else {
        modulus = std::min(g.modulus, h.modulus);
    }
    if (modulus == 0) {
        return {checked_add(g.c, checked_mul(g.a, h.c)), checked_mul(g.a, h.a), 0};
    }
    std::int64_t c = mod_floor(mod_floor(g.c, modulus) + mulmod(g.a, h.c, modulus), modulus);
    std::int64_t a = mulmod(g.a, h.a, modulus);
    return {c, a, modulus};
}

GroupElem inverse(const GroupElem &g, std::int64_t p, int accuracy) {
    check_group_elem(g, p);
    if (g.modulus == 0 && (g.a == 1 || g.a == -1)) {
        // a^{-1} = a; c' = -a^{-1} c.
        return {-g.a * g.c, g.a, 0};
    }
    std::int64_t modulus = g.modulus != 0 ? g.modulus : ipow(p, accuracy);
    if (g.modulus != 0 && accuracy < log_p(g.modulus, p)) modulus = ipow(p, accuracy);
    std::int64_t a_inv = inverse_mod(g.a, modulus);
    std::int64_t c = mod_floor(-mulmod(a_inv, g.c, modulus), modulus);
    return {c, a_inv, modulus};
}

int required_accuracy(const Ring &ring, const Rational &prec, const Rational &min_val) {
    // Known digits modulo p^N perturb every piece by a factor 1 + O(u^{p^{N-D}}).
    Rational need = prec - min_val + ring.val_u();
    int n = 0;
    while (pow_int(ring.p, n - ring.denom_cap) * ring.val_u() < need) ++n;
    return n;
}

bool in_tau_level(const GroupElem &g, std::int64_t p, int k) {
    std::int64_t pk = ipow(p, k);
    if (g.modulus != 0 && g.modulus < pk) return false;
    return g.c % pk == 0;
}

bool in_gamma_level(const GroupElem &g, std::int64_t p, int k) {
    std::int64_t pk = ipow(p, k);
    if (g.modulus != 0 && g.modulus < pk) return false;
    return g.c == 0 && mod_floor(g.a - 1, pk) == 0;
}

PerfSeries eps_pow(const Rational &r, const Ring &ring, ValCap cap) {
    if (r.sign() == 0) {
        PerfSeries one = PerfSeries::one(ring);
        return cap.is_finite() ? one.truncated(cap) : one;
    }
    auto [m, e] = split_p_part(r, ring.p);
    Monomial w = u_p_power(e, ring);
    if (m > 0) return binomial_power(w, m, ring, cap);
    return invert(binomial_power(w, -m, ring, cap), cap);
}

PerfSeries act(const GroupElem &g, const PerfSeries &x) {
    const Ring &ring = x.ring();
    check_group_elem(g, ring.p);
    if (g.c == 0 && g.a == 1) return x;

    ValCap target = x.prec();
    if (!g.is_exact()) target = min(target, ValCap(ring.work_prec));
    const int accuracy = g.is_exact() ? 0 : log_p(g.modulus, ring.p);
    const Rational val_u = ring.val_u();
    const std::int64_t scale = ring.exp_scale();

    // gamma_a(u^alpha) and eps^{c beta}, cached per exponent; each cache entry
    // is recomputed if a later monomial needs more precision.
    std::map<std::int64_t, PerfSeries> gamma_cache;
    std::map<std::int64_t, PerfSeries> tau_cache;

    auto gamma_of = [&](std::int64_t eu, const ValCap &abs_cap) -> PerfSeries {
        PExp alpha = PExp::normalized(eu, ring.denom_cap, ring.p);
        Monomial mono{eu, 0};
        if (alpha.num == 0) return PerfSeries::one(ring);
        if (g.a == 1) return PerfSeries::from_mono(ring, 1, mono);
        auto it = gamma_cache.find(eu);
        if (it != gamma_cache.end() && it->second.prec() >= abs_cap) return it->second;

        // w = u^{1/p^k}, gamma(w) = (1+w)^a - 1, gamma(u^alpha) = gamma(w)^m.
        Monomial w{ipow(ring.p, ring.denom_cap - alpha.kden), 0};
        Rational val_w = w.val(ring);
        Rational val_alpha = mono.val(ring);
        ValCap rel = abs_cap - val_alpha;
        ValCap w_cap = rel + ValCap(val_w);
        if (!g.is_exact()) {
            // Digits of a beyond p^N shift gamma(w) by O(w^{p^N}).
            Rational known = Rational(g.modulus) * val_w;
            if (w_cap.is_infinite() || known < w_cap.value()) {
                throw InsufficientGroupAccuracy("gamma_a known modulo p^" + std::to_string(accuracy) +
                                                " does not determine the action to the requested precision");
            }
        }
        PerfSeries gw(ring);
        std::int64_t a = g.a;
        if (a > 0) {
            gw = binomial_power(w, a, ring, w_cap) - PerfSeries::one(ring);
        } else {
            gw = invert(binomial_power(w, -a, ring, w_cap), w_cap) - PerfSeries::one(ring);
        }
        PerfSeries result = pow(gw, alpha.num, abs_cap);
        gamma_cache.insert_or_assign(eu, result);
        return result;
    };

    auto tau_of = [&](std::int64_t et, const ValCap &rel_cap) -> PerfSeries {
        if (g.c == 0 || et == 0) return PerfSeries::one(ring);
        auto it = tau_cache.find(et);
        if (it != tau_cache.end() && it->second.prec() >= rel_cap) return it->second;
        Rational beta(et, scale);
        if (!g.is_exact()) {
            // c known mod p^N: eps^{c beta} known up to a factor eps^{p^N beta}.
            int v = vp(beta.num(), ring.p) - vp(beta.den(), ring.p) + accuracy;
            if (rel_cap.is_infinite() || pow_int(ring.p, v) * val_u < rel_cap.value()) {
                throw InsufficientGroupAccuracy("tau^c known modulo p^" + std::to_string(accuracy) +
                                                " does not determine the action to the requested precision");
            }
        }
        PerfSeries result = eps_pow(Rational(g.c) * beta, ring, rel_cap);
        tau_cache.insert_or_assign(et, result);
        return result;
    };

    PerfSeries out = PerfSeries::zero(ring, target);
    for (const auto &term : x.terms()) {
        Rational beta(term.mono.et, scale);
        Rational val_alpha = Monomial{term.mono.eu, 0}.val(ring);
        // Absolute target for gamma(u^alpha) is target - beta; eps^{c beta} is a
        // unit and needs target - beta - val(u^alpha).
        PerfSeries gpart = gamma_of(term.mono.eu, shifted_cap(target, beta));
        PerfSeries tpart = tau_of(term.mono.et, shifted_cap(target, beta + val_alpha));
        PerfSeries piece = (gpart * tpart).shifted(Monomial{0, term.mono.et}, term.coeff);
        out += piece;
    }
    return out.truncated(target);
}

Rational lemma_eps_val(std::int64_t m, std::int64_t p) {
    if (m == 0) throw std::invalid_argument("lemma_eps_val needs m != 0");
    return pow_int(p, vp(m, p)) * Rational(p, p - 1);
}

GroupElem parse_group_elem(std::string_view text) {
    auto fail = [&](const std::string &what, std::size_t pos) -> GroupElem {
        throw ParseError("group element: " + what, pos);
    };
    GroupElem g;
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    };
    auto integer = [&]() -> std::int64_t {
        std::size_t start = pos;
        if (pos < text.size() && text[pos] == '-') ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        std::int64_t v = 0;
        auto res = std::from_chars(text.data() + start, text.data() + pos, v);
        if (res.ec != std::errc() || res.ptr != text.data() + pos) fail("expected integer", start);
        return v;
    };
    skip_ws();
    if (text.substr(pos) == "id" || text.substr(pos) == "1") return g;
    bool seen_tau = false;
    bool seen_gamma = false;
    while (true) {
        skip_ws();
        if (text.substr(pos, 3) == "tau") {
            if (seen_tau || seen_gamma) fail("tau must come first, once", pos);
            seen_tau = true;
            pos += 3;
            skip_ws();
            g.c = 1;
            if (pos < text.size() && text[pos] == '^') {
                ++pos;
                skip_ws();
                bool braced = pos < text.size() && text[pos] == '{';
                if (braced) ++pos;
                g.c = integer();
                if (braced) {
                    if (pos >= text.size() || text[pos] != '}') fail("expected '}'", pos);
                    ++pos;
                }
            }
        } else if (text.substr(pos, 5) == "gamma") {
            if (seen_gamma) fail("gamma given twice", pos);
            seen_gamma = true;
            pos += 5;
            if (pos >= text.size() || text[pos] != '_') fail("expected '_'", pos);
            ++pos;
            bool braced = pos < text.size() && text[pos] == '{';
            if (braced) ++pos;
            g.a = integer();
            if (braced) {
                if (pos >= text.size() || text[pos] != '}') fail("expected '}'", pos);
                ++pos;
            }
        } else {
            fail("expected 'tau' or 'gamma'", pos);
        }
        skip_ws();
        if (pos == text.size()) break;
        if (text[pos] != '*') fail("expected '*'", pos);
        ++pos;
    }
    return g;
}

std::string format_group_elem(const GroupElem &g) {
    std::string out = "tau^" + std::to_string(g.c) + " * gamma_" + std::to_string(g.a);
    if (g.modulus != 0) out += " (mod " + std::to_string(g.modulus) + ")";
    return out;
}

} // namespace tilted
