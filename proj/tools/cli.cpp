#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "acceptance.hpp"
#include "tilted/errors.hpp"
#include "tilted/galois.hpp"
#include "tilted/holder.hpp"
#include "tilted/newton.hpp"
#include "tilted/phitau.hpp"
#include "tilted/ring.hpp"

namespace tilted::cli {

namespace {

using Json = nlohmann::ordered_json;

struct Config {
    std::int64_t p = 3;
    std::string prec = "40";
    int denom_cap = 6;
    int samples = 0;
    std::uint64_t seed = 1;
    std::string format = "json";

    [[nodiscard]] Ring ring() const {
        auto r = Rational::parse(prec);
        if (!r || r->sign() <= 0) throw std::invalid_argument("--prec must be a positive rational");
        Ring ring;
        ring.p = p;
        ring.denom_cap = denom_cap;
        ring.work_prec = *r;
        ring.validate();
        return ring;
    }
};

Rational parse_rational(const std::string &text, const char *flag) {
    auto r = Rational::parse(text);
    if (!r) throw ParseError(std::string(flag) + ": not a rational: '" + text + "'", 0);
    return *r;
}

Json valuation(const Valuation &v) {
    Json j;
    j["value"] = v.value.str();
    j["exact"] = v.is_exact();
    return j;
}

Json series(const PerfSeries &x) {
    Json j;
    j["series"] = format_series(x);
    j["val"] = valuation(val(x));
    j["prec"] = x.prec().str();
    return j;
}

Json matrix(const MatSeries &m) {
    Json rows = Json::array();
    for (int i = 0; i < m.dim(); ++i) {
        Json row = Json::array();
        for (int j = 0; j < m.dim(); ++j) row.push_back(format_series(m.at(i, j)));
        rows.push_back(row);
    }
    return rows;
}

int exit_for(ShStatus s) {
    switch (s) {
    case ShStatus::Pass: return Ok;
    case ShStatus::Fail: return Failed;
    case ShStatus::Inconclusive: return Inconclusive;
    }
    return Failed;
}

// Worse of two exit codes in the order Ok < Inconclusive < Failed.
int worse(int a, int b) {
    auto rank = [](int c) { return c == Failed ? 2 : c == Inconclusive ? 1 : 0; };
    return rank(a) >= rank(b) ? a : b;
}

Json verdict_json(const ShVerdict &v, std::int64_t p) {
    Json j;
    j["status"] = to_string(v.status);
    Json margins = Json::array();
    for (const auto &m : v.margins) {
        Json row;
        row["i"] = m.i;
        row["v"] = valuation(m.v);
        row["prec"] = m.prec.str();
        row["bound"] = m.bound_str(p);
        row["status"] = to_string(m.status);
        margins.push_back(row);
    }
    j["margins"] = margins;
    if (v.witness) {
        j["witness"] = {{"level", v.witness->first}, {"g", format_group_elem(v.witness->second)}};
    } else {
        j["witness"] = nullptr;
    }
    return j;
}

Json witness_json(const WitnessReport &w) {
    Json j;
    j["status"] = to_string(w.status);
    j["step_signs"] = w.step_signs;
    j["first_violation"] = w.first_violation ? Json(*w.first_violation) : Json(nullptr);
    return j;
}

Json estimate_json(const ShEstimate &e) {
    Json j;
    j["plambda_hat"] = e.plambda_hat.str();
    j["mu_hat"] = e.mu_hat.str();
    j["consistent"] = e.consistent;
    Json per = Json::array();
    for (const auto &r : e.per_level) per.push_back(r.str());
    j["per_level"] = per;
    Json v = Json::array();
    for (const auto &r : e.v) v.push_back(r.str());
    j["v"] = v;
    return j;
}

Json matrix_sh_json(const MatrixShReport &r, std::int64_t p) {
    Json j = verdict_json(r.verdict, p);
    j["mu"] = r.mu.str();
    j["fit"] = r.fit ? estimate_json(*r.fit) : Json(nullptr);
    j["growth"] = witness_json(r.witness);
    return j;
}

SubgroupFamily family_of(const std::string &name, int k) {
    if (name == "tau") return {FamilyKind::Tau, k};
    if (name == "gamma") return {FamilyKind::Gamma, k};
    throw std::invalid_argument("--family must be tau or gamma");
}

std::vector<std::int64_t> m_samples(const Config &cfg) {
    auto all = default_samples(cfg.p);
    if (cfg.samples > 0 && static_cast<std::size_t>(cfg.samples) < all.size()) all.resize(cfg.samples);
    return all;
}

PhiTauModule load_module(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open module file '" + path + "'");
    return read_module(in);
}

void emit(std::ostream &out, const Config &cfg, const Json &body) {
    if (cfg.format == "json") {
        out << body.dump(2) << "\n";
        return;
    }
    for (const auto &[key, value] : body.items()) {
        if (key == "schema") continue;
        out << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
    }
}

Json header(const std::string &command) {
    Json j;
    j["schema"] = 1;
    j["command"] = command;
    return j;
}

} // namespace

int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    Config cfg;
    CLI::App app{"Exact arithmetic on perfected bivariate Laurent series and (phi, tau)-modules", "tilted"};
    app.fallthrough();
    app.require_subcommand(1);
    app.add_option("--p", cfg.p, "odd prime")->capture_default_str();
    app.add_option("--prec", cfg.prec, "working precision (rational)")->capture_default_str();
    app.add_option("--denom-cap", cfg.denom_cap, "exponent denominators divide p^D")->capture_default_str();
    app.add_option("--samples", cfg.samples, "sample count override");
    app.add_option("--seed", cfg.seed, "random seed (TILTED_SEED overrides)")->capture_default_str();
    app.add_option("--format", cfg.format, "json or text")
        ->check(CLI::IsMember({"json", "text"}))
        ->capture_default_str();

    std::function<int()> action;
    std::string x_text, y_text, op = "none", g_text, family = "tau", plambda_text, mu_text = "0";
    int k = 0, imax = 4, n = 0, d = 2, complexity = 2;

    auto *eval = app.add_subcommand("eval", "parse, normalize and optionally combine series");
    eval->add_option("--x", x_text, "series")->required();
    eval->add_option("--op", op, "none|add|sub|mul|invert|frob|frob-inv")
        ->check(CLI::IsMember({"none", "add", "sub", "mul", "invert", "frob", "frob-inv"}));
    eval->add_option("--y", y_text, "second operand");
    eval->add_option("--n", n, "Frobenius power");
    eval->callback([&] {
        action = [&] {
            Ring ring = cfg.ring();
            PerfSeries x = parse_series(x_text, ring);
            auto need_y = [&] {
                if (y_text.empty()) throw std::invalid_argument("--op " + op + " needs --y");
                return parse_series(y_text, ring);
            };
            PerfSeries r = x;
            if (op == "add") r = x + need_y();
            if (op == "sub") r = x - need_y();
            if (op == "mul") r = x * need_y();
            if (op == "invert") r = invert(x);
            if (op == "frob") r = frobenius(x, std::max(n, 1));
            if (op == "frob-inv") r = frobenius_inv(x, std::max(n, 1));
            Json j = header("eval");
            j["result"] = series(r);
            emit(out, cfg, j);
            return int(Ok);
        };
    });

    auto *valc = app.add_subcommand("val", "valuation of a series");
    valc->add_option("--x", x_text, "series")->required();
    valc->callback([&] {
        action = [&] {
            PerfSeries x = parse_series(x_text, cfg.ring());
            Json j = header("val");
            j["x"] = format_series(x);
            j["val"] = valuation(val(x));
            emit(out, cfg, j);
            return int(Ok);
        };
    });

    auto *actc = app.add_subcommand("act", "apply tau^c gamma_a to a series");
    actc->add_option("--g", g_text, "group element, e.g. 'tau^2 * gamma_4'")->required();
    actc->add_option("--x", x_text, "series")->required();
    actc->callback([&] {
        action = [&] {
            Ring ring = cfg.ring();
            GroupElem g = parse_group_elem(g_text);
            check_group_elem(g, ring.p);
            Json j = header("act");
            j["g"] = format_group_elem(g);
            j["result"] = series(act(g, parse_series(x_text, ring)));
            emit(out, cfg, j);
            return int(Ok);
        };
    });

    auto *sht = app.add_subcommand("sh-test", "super-Hoelder bound on the orbit of a series");
    sht->add_option("--x", x_text, "series")->required();
    sht->add_option("--family", family, "tau or gamma")->capture_default_str();
    sht->add_option("--k", k, "family level")->capture_default_str();
    sht->add_option("--plambda", plambda_text, "p^lambda as c or c*p^{a/b}")->required();
    sht->add_option("--mu", mu_text, "additive constant")->capture_default_str();
    sht->add_option("--imax", imax, "last level")->capture_default_str();
    sht->callback([&] {
        action = [&] {
            Ring ring = cfg.ring();
            PerfSeries x = parse_series(x_text, ring);
            PLambda pl = parse_plambda(plambda_text, ring.p);
            Rational mu = parse_rational(mu_text, "--mu");
            auto v = sh_test(x, family_of(family, k), pl, mu, imax, m_samples(cfg));
            Json j = header("sh-test");
            j["x"] = format_series(x);
            j["family"] = family;
            j["k"] = k;
            j["plambda"] = pl.str(ring.p);
            j["mu"] = mu.str();
            j.update(verdict_json(v, ring.p));
            emit(out, cfg, j);
            return exit_for(v.status);
        };
    });

    auto *she = app.add_subcommand("sh-estimate", "fit p^lambda and mu from measured margins");
    she->add_option("--x", x_text, "series")->required();
    she->add_option("--family", family, "tau or gamma")->capture_default_str();
    she->add_option("--k", k, "family level")->capture_default_str();
    she->add_option("--imax", imax, "last level")->capture_default_str();
    she->callback([&] {
        action = [&] {
            Ring ring = cfg.ring();
            PerfSeries x = parse_series(x_text, ring);
            auto e = sh_estimate(x, family_of(family, k), imax, m_samples(cfg));
            Json j = header("sh-estimate");
            j["x"] = format_series(x);
            j.update(estimate_json(e));
            emit(out, cfg, j);
            return int(Ok);
        };
    });

    auto *dep = app.add_subcommand("deperfect", "least n with phi^n(x) in F_p((t))");
    dep->add_option("--x", x_text, "series")->required();
    dep->callback([&] {
        action = [&] {
            PerfSeries x = parse_series(x_text, cfg.ring());
            auto level = deperfection_level(x);
            Json j = header("deperfect");
            j["x"] = format_series(x);
            j["level"] = level ? Json(*level) : Json(nullptr);
            emit(out, cfg, j);
            return level ? int(Ok) : int(Failed);
        };
    });

    std::int64_t e_k = 1;
    auto *newt = app.add_subcommand("newton", "Newton polygon of one Kummer tower step");
    newt->add_option("--eK", e_k, "absolute ramification index")->capture_default_str();
    newt->add_option("--n", n, "tower level")->capture_default_str();
    newt->callback([&] {
        action = [&] {
            if (e_k < 1 || n < 0) throw std::invalid_argument("--eK must be >= 1 and --n >= 0");
            Ring ring = cfg.ring();
            auto rep = verify_elementary(ring.p, e_k, n);
            Json j = header("newton");
            j["p"] = ring.p;
            j["eK"] = e_k;
            j["n"] = n;
            j["elementary"] = rep.ok;
            j["slope"] = rep.polygon.segments.size() == 1 ? Json(rep.polygon.segments[0].slope.str()) : Json(nullptr);
            j["expected_slope"] = rep.expected_slope.str();
            j["break"] = ramification_break(ring.p, e_k, n).str();
            Json verts = Json::array();
            for (const auto &v : rep.polygon.vertices) verts.push_back({{"k", v.k}, {"v", v.v.str()}});
            j["vertices"] = verts;
            Json segs = Json::array();
            for (const auto &s : rep.polygon.segments) segs.push_back({{"slope", s.slope.str()}, {"length", s.length}});
            j["segments"] = segs;
            emit(out, cfg, j);
            return rep.ok ? int(Ok) : int(Failed);
        };
    });

    std::string file, outfile, target_text = "10";
    std::vector<std::string> g_list;
    std::int64_t r_opt = 0;
    bool force = false;
    int max_level = 6;
    auto *mod = app.add_subcommand("module", "(phi, tau)-module operations");
    mod->require_subcommand(1);

    auto *gen = mod->add_subcommand("gen", "base change of the trivial module along a random B");
    gen->add_option("--d", d, "dimension")->capture_default_str();
    gen->add_option("--complexity", complexity, "1..4")->capture_default_str();
    gen->add_option("--out", outfile, "write the module here instead of stdout");
    gen->callback([&] {
        action = [&] {
            if (d < 1 || d > 8) throw std::invalid_argument("--d must be in 1..8");
            Ring ring = cfg.ring();
            MatSeries B = basechange_matrix(ring, d, cfg.seed, complexity);
            PhiTauModule m = basechange_from(B);
            if (outfile.empty()) {
                write_module(out, m);
                return int(Ok);
            }
            std::ofstream f(outfile);
            if (!f) throw std::invalid_argument("cannot write '" + outfile + "'");
            write_module(f, m);
            Json j = header("module gen");
            j["seed"] = std::to_string(cfg.seed);
            j["d"] = d;
            j["B"] = matrix(B);
            j["file"] = outfile;
            emit(out, cfg, j);
            return int(Ok);
        };
    });

    auto *chk = mod->add_subcommand("check", "verify the cocycle identity");
    chk->add_option("--file", file, "module file")->required();
    chk->add_option("--g", g_list, "group elements (default tau, tau^2, tau^3, tau^p)");
    chk->callback([&] {
        action = [&] {
            PhiTauModule m = load_module(file);
            std::vector<GroupElem> gs;
            for (const auto &t : g_list) gs.push_back(parse_group_elem(t));
            if (gs.empty()) gs = {GroupElem::tau(1), GroupElem::tau(2), GroupElem::tau(3), GroupElem::tau(m.ring.p)};
            bool all = true;
            Json rows = Json::array();
            for (const auto &g : gs) {
                check_group_elem(g, m.ring.p);
                auto rep = cocycle_check(m, g);
                all = all && rep.ok;
                rows.push_back({{"g", format_group_elem(g)},
                                {"ok", rep.ok},
                                {"residual", valuation(rep.residual)},
                                {"cap", rep.cap.str()}});
            }
            Json j = header("module check");
            j["d"] = m.d;
            j["checks"] = rows;
            j["ok"] = all;
            emit(out, cfg, j);
            return all ? int(Ok) : int(Failed);
        };
    });

    auto *desc = mod->add_subcommand("descend", "fixed-point series for t^{-r}(Mat(g) - Id)");
    desc->add_option("--file", file, "module file")->required();
    desc->add_option("--g", g_text, "group element (default: tau^{p^level} from the search)");
    desc->add_option("--r", r_opt, "radius (default: searched)");
    desc->add_option("--target", target_text, "t-adic target precision")->capture_default_str();
    desc->add_option("--max-level", max_level, "search limit for the level")->capture_default_str();
    desc->add_flag("--force", force, "skip the precondition checks");
    desc->callback([&] {
        action = [&] {
            PhiTauModule m = load_module(file);
            Rational target = parse_rational(target_text, "--target");
            Json j = header("module descend");
            std::int64_t s = 0;
            std::int64_t r = r_opt;
            GroupElem g = GroupElem::tau();
            if (r == 0 || g_text.empty()) {
                auto params = find_descent_params(m, 0, max_level);
                if (!params) {
                    j["error"] = "no (r, level) found within the scan";
                    emit(out, cfg, j);
                    return int(Inconclusive);
                }
                s = params->s;
                if (r == 0) r = params->r;
                g = GroupElem::tau(ipow(m.ring.p, params->level));
                j["level"] = params->level;
            }
            if (!g_text.empty()) g = parse_group_elem(g_text);
            check_group_elem(g, m.ring.p);
            PhiTauModule mm = s == 0 ? m : rescale_basis(m, s);
            auto rep = descend_fixed_point(mm, g, r, target, force);
            MatSeries direct = (mat_of(mm, g) - MatSeries::identity(mm.ring, mm.d))
                                   .shifted_t(Rational(-r))
                                   .truncated(ValCap(target));
            bool match = rep.H.equals_to_precision(direct);
            j["g"] = format_group_elem(g);
            j["s"] = s;
            j["r"] = r;
            j["target"] = target.str();
            j["iterations"] = rep.iterations;
            j["iteration_bound"] = rep.iteration_bound;
            j["val_q"] = rep.val_q.str();
            Json deltas = Json::array();
            for (const auto &v : rep.deltas) deltas.push_back(valuation(v));
            j["deltas"] = deltas;
            j["H"] = matrix(rep.H);
            j["matches_direct"] = match;
            emit(out, cfg, j);
            return match ? int(Ok) : int(Failed);
        };
    });

    auto *msh = mod->add_subcommand("sh", "super-Hoelder tests of the matrix and basis orbits");
    msh->add_option("--file", file, "module file")->required();
    msh->add_option("--k", k, "family level")->capture_default_str();
    msh->add_option("--n", n, "Frobenius-root level of the basis test")->capture_default_str();
    msh->add_option("--imax", imax, "last level")->capture_default_str();
    msh->add_option("--plambda", plambda_text, "p^lambda for the matrix test (default p^k p/(p-1))");
    msh->callback([&] {
        action = [&] {
            PhiTauModule m = load_module(file);
            const std::int64_t p = m.ring.p;
            PLambda pl = plambda_text.empty() ? PLambda::cp_level(p, k) : parse_plambda(plambda_text, p);
            auto mat = matrix_sh_test(m, k, pl, imax);
            int code = exit_for(mat.verdict.status);
            Json j = header("module sh");
            j["k"] = k;
            j["n"] = n;
            j["plambda"] = pl.str(p);
            j["matrix"] = matrix_sh_json(mat, p);
            Json basis = Json::array();
            for (const auto &b : module_sh_test(m, k, n, imax)) {
                Json row;
                row["j"] = b.j;
                row["scaled"] = b.scaled;
                row["v_tau"] = matrix_sh_json(b.under_tau, p);
                code = worse(code, exit_for(b.under_tau.verdict.status));
                if (m.lattice) {
                    row["v_tilde"] = matrix_sh_json(b.under_tilde, p);
                    code = worse(code, exit_for(b.under_tilde.verdict.status));
                }
                basis.push_back(row);
            }
            j["basis"] = basis;
            if (m.lattice) j["equiv_constant"] = equiv_constant(m, {}).analytic.str();
            j["status"] = to_string(code == Ok ? ShStatus::Pass : code == Failed ? ShStatus::Fail : ShStatus::Inconclusive);
            emit(out, cfg, j);
            return code;
        };
    });

    std::vector<std::string> selection;
    auto *self = app.add_subcommand("selftest", "run the acceptance suite");
    self->add_option("--case", selection, "case id or number (repeatable)");
    self->callback([&] {
        action = [&] {
            acceptance::Settings s;
            Ring ring = cfg.ring();
            s.p = ring.p;
            s.prec = ring.work_prec;
            s.denom_cap = ring.denom_cap;
            s.seed = cfg.seed;
            s.samples = cfg.samples;
            auto results = acceptance::run_cases(s, selection);
            Json j = header("selftest");
            j["settings"] = {{"p", s.p}, {"prec", s.prec.str()}, {"denom_cap", s.denom_cap},
                             {"seed", std::to_string(s.seed)}, {"samples", s.samples}};
            Json rows = Json::array();
            int passed = 0;
            for (const auto &r : results) {
                passed += r.pass ? 1 : 0;
                rows.push_back({{"id", r.info.id},
                                {"number", r.info.number},
                                {"title", r.info.title},
                                {"pass", r.pass},
                                {"checks", r.checks},
                                {"failed", r.failed},
                                {"notes", r.notes},
                                {"failures", r.failures}});
            }
            j["cases"] = rows;
            j["passed"] = passed;
            j["total"] = results.size();
            if (cfg.format == "text") {
                for (const auto &r : results) {
                    out << (r.pass ? "PASS " : "FAIL ") << r.info.id << "  " << r.info.title << "\n";
                    for (const auto &f : r.failures) out << "    " << f << "\n";
                }
                out << passed << "/" << results.size() << " passed\n";
            } else {
                emit(out, cfg, j);
            }
            return passed == static_cast<int>(results.size()) ? int(Ok) : int(Failed);
        };
    });

    std::vector<std::string> argv_store{"tilted"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char *> argv;
    for (const auto &a : argv_store) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &e) {
        app.exit(e, out, err);
        return Ok;
    } catch (const CLI::CallForAllHelp &e) {
        app.exit(e, out, err);
        return Ok;
    } catch (const CLI::ParseError &e) {
        app.exit(e, out, err);
        return Usage;
    }

    if (const char *env = std::getenv("TILTED_SEED")) {
        try {
            std::size_t used = 0;
            cfg.seed = std::stoull(env, &used);
            if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception &) {
            err << "error: TILTED_SEED is not an unsigned integer\n";
            return Usage;
        }
    }

    try {
        return action();
    } catch (const ParseError &e) {
        err << "error: " << e.what() << "\n";
        return Usage;
    } catch (const PreconditionViolated &e) {
        err << "error: " << e.what() << "\n";
        return Usage;
    } catch (const PrecisionExhausted &e) {
        err << "inconclusive: " << e.what() << "\n";
        return Inconclusive;
    } catch (const InsufficientGroupAccuracy &e) {
        err << "inconclusive: " << e.what() << "\n";
        return Inconclusive;
    } catch (const CapExceeded &e) {
        err << "inconclusive: " << e.what() << "\n";
        return Inconclusive;
    } catch (const DegenerateOrbit &e) {
        err << "inconclusive: " << e.what() << "\n";
        return Inconclusive;
    } catch (const std::invalid_argument &e) {
        err << "error: " << e.what() << "\n";
        return Usage;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return Failed;
    }
}

} // namespace tilted::cli
