#ifndef CONFORMQ_TOOLS_CLI_COMMANDS_HPP
#define CONFORMQ_TOOLS_CLI_COMMANDS_HPP

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <conformq/conformq.hpp>

namespace conformq::cli
{

enum exit_code : int { ok = 0, verification_failed = 1, usage_error = 2, critical = 3 };

struct GlobalOptions {
    std::string mode = "rational";
    int order = -1;
    std::uint64_t seed = 1;
    int cases = 20;
    std::string signature = "euclidean";
    bool project_tracefree = false;
    std::string mutate = "none";
    std::string report;
    bool json = false;
};

inline std::vector<Rational> parse_rational_list(const std::string &s)
{
    std::vector<Rational> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_rational(item));
    }
    if (out.empty()) {
        throw config_error("empty list '" + s + "'");
    }
    return out;
}

// ----------------------------------------------------------------------------
// coeffs
// ----------------------------------------------------------------------------

inline int cmd_coeffs(const QuantParams &p, const GlobalOptions &g, std::ostream &out)
{
    const CoefficientTable t(p, parse_mutation(g.mutate));
    const auto &crit = t.criticality();
    if (g.json) {
        nlohmann::json j;
        j["m"] = p.m;
        j["lambda"] = p.lambda.get_str();
        j["mu"] = p.mu.get_str();
        j["delta"] = p.delta().get_str();
        j["k"] = p.k;
        auto gam = nlohmann::json::array();
        for (const auto &x : t.gammas()) {
            gam.push_back(x.get_str());
        }
        j["gamma"] = gam;
        auto cs = nlohmann::json::array();
        for (int l = 0; l <= p.k; ++l) {
            const auto &e = t.c_entry(l);
            cs.push_back(e ? nlohmann::json(e->get_str()) : nlohmann::json(nullptr));
        }
        j["C"] = cs;
        j["alpha"] = t.alpha_k0().get_str();
        auto hits = nlohmann::json::array();
        for (const auto &h : crit.hits) {
            hits.push_back({{"l", h.l}, {"gamma_index", h.gamma_index}});
        }
        j["critical"] = crit.critical();
        j["critical_hits"] = hits;
        out << j.dump(2) << "\n";
        return ok;
    }
    out << "m = " << p.m << ", lambda = " << p.lambda << ", mu = " << p.mu << ", delta = " << p.delta()
        << ", k = " << p.k << "\n";
    for (std::size_t n = 0; n < t.gammas().size(); ++n) {
        out << "gamma_" << n << " = " << t.gammas()[n] << "\n";
    }
    for (int l = 0; l <= p.k; ++l) {
        const auto &e = t.c_entry(l);
        out << "C_{" << p.k << "," << l << "} = ";
        if (e) {
            out << *e << "\n";
        } else {
            out << "undefined\n";
        }
    }
    out << "alpha_{" << p.k << ",0} = " << t.alpha_k0() << "\n";
    if (crit.critical()) {
        out << "critical: yes";
        for (const auto &h : crit.hits) {
            out << " (gamma_" << h.gamma_index << " = 0 at l = " << h.l << ")";
        }
        out << "\n";
    } else {
        out << "critical: no\n";
    }
    return ok;
}

// ----------------------------------------------------------------------------
// expand
// ----------------------------------------------------------------------------

namespace detail
{

inline std::string pi_name(int t)
{
    return "π" + conformq::detail::subscript(t);
}

inline void side_block(std::ostream &out, const char *label, const ExpansionPlan &plan, const char *identity)
{
    const auto words = render_words(plan, RenderStyle::beta);
    const auto normal = render_normal_letters(plan, RenderStyle::beta);
    const std::string indent(std::string(label).size() + 4, ' ');
    out << "  " << label << ": " << pi_name(plan.target) << " = " << words;
    if (normal != words) {
        out << " = " << normal;
    }
    out << "\n";
    const auto sub = render_normal_letters(plan, RenderStyle::substituted);
    if (sub != normal) {
        out << indent << "= " << sub << "\n";
    }
    const auto ops = render_operators(plan);
    out << indent << "= " << (ops.empty() ? identity : ops) << "\n";
}

} // namespace detail

// The symbolic part of `expand`: independent of m, lambda and mu.
inline std::string expansion_text(int k)
{
    const CoefficientTable t(QuantParams{3, Rational(0), Rational(0), k});
    std::ostringstream out;
    out << "k = " << k << "\n";
    out << "Q = " << render_formula(k) << "\n";
    out << "LaTeX: " << render_formula_latex(k) << "\n";
    if (k >= 2) {
        out << "β = −λm on the density side, β = mγ" << conformq::detail::subscript(2 * k - 2) << " on the symbol side\n";
    }
    for (int l = 0; l <= k; ++l) {
        out << "l = " << l << "\n";
        detail::side_block(out, "symbol", expand_words(Side::symbol, l, t), "1");
        detail::side_block(out, "density", expand_words(Side::density, k - l, t), "1");
    }
    return out.str();
}

inline int cmd_expand(const QuantParams &p, const GlobalOptions &g, std::ostream &out)
{
    const CoefficientTable t(p, parse_mutation(g.mutate));
    t.require_noncritical();
    out << expansion_text(p.k);
    out << "numeric values at m = " << p.m << ", lambda = " << p.lambda << ", mu = " << p.mu << ":\n";
    for (int l = 0; l <= p.k; ++l) {
        out << "  C_{" << p.k << "," << l << "} = " << t.c(l) << "\n";
        for (const auto &[side, target] : {std::pair{Side::symbol, l}, std::pair{Side::density, p.k - l}}) {
            const auto plan = expand_words(side, target, t);
            out << "    " << (side == Side::symbol ? "symbol " : "density") << ":";
            for (const auto &w : plan.words) {
                out << " " << (w.letters.empty() ? "1" : w.letters) << "[" << w.coefficient << "]";
            }
            out << "\n";
        }
    }
    return ok;
}

// ----------------------------------------------------------------------------
// quantize
// ----------------------------------------------------------------------------

namespace detail
{

inline std::string monomial_label(const MonomialBasis &b, std::size_t idx)
{
    const auto e = b.exponent(idx);
    std::string s;
    for (std::size_t v = 0; v < e.size(); ++v) {
        if (e[v] == 0) {
            continue;
        }
        if (!s.empty()) {
            s += " ";
        }
        s += "y" + std::to_string(v);
        if (e[v] > 1) {
            s += "^" + std::to_string(e[v]);
        }
    }
    return s.empty() ? "1" : s;
}

template <typename S>
int quantize_in(const ChartConfig &c, const GlobalOptions &g, std::ostream &out)
{
    auto d = build_chart<S>(c, g.order);
    const Geometry<S> geo(d.g);
    if (g.project_tracefree) {
        d.s = tracefree_project(d.s, geo);
    }
    const auto q = quantize(geo, d.s, d.f, c.params(), parse_mutation(g.mutate));
    const auto &jet = q.value();
    const auto &basis = MonomialBasis::get(jet.dim(), jet.order());
    if (g.json) {
        nlohmann::json j;
        j["weight"] = q.weight().get_str();
        j["order"] = jet.order();
        j["mode"] = scalar_traits<S>::name;
        auto bp = nlohmann::json::array();
        for (const auto &x : c.base_point) {
            bp.push_back(x.get_str());
        }
        j["base_point"] = bp;
        auto cs = nlohmann::json::array();
        for (std::size_t i = 0; i < jet.size(); ++i) {
            const auto e = basis.exponent(i);
            cs.push_back({{"exponents", std::vector<int>(e.begin(), e.end())}, {"value", scalar_traits<S>::str(jet[i])}});
        }
        j["coefficients"] = cs;
        out << j.dump(2) << "\n";
        return ok;
    }
    out << "Q(S)f at (";
    for (std::size_t i = 0; i < c.base_point.size(); ++i) {
        out << (i ? ", " : "") << c.base_point[i];
    }
    out << "): density of weight " << q.weight() << ", jet order " << jet.order() << " (" << scalar_traits<S>::name
        << ")\n";
    for (std::size_t i = 0; i < jet.size(); ++i) {
        out << "  " << monomial_label(basis, i) << ": " << scalar_traits<S>::str(jet[i]) << "\n";
    }
    return ok;
}

inline Arithmetic effective_mode(const ChartConfig &c, const GlobalOptions &g, bool mode_given)
{
    return mode_given ? parse_arithmetic(g.mode) : c.mode;
}

} // namespace detail

inline int cmd_quantize(const std::string &path, const std::optional<std::string> &point, const GlobalOptions &g,
                        bool mode_given, std::ostream &out)
{
    auto c = load_config(path);
    if (point) {
        const auto p = parse_rational_list(*point);
        if (static_cast<int>(p.size()) != c.dimension) {
            throw config_error("--point: expected " + std::to_string(c.dimension) + " coordinates");
        }
        c.base_point = p;
    }
    CoefficientTable(c.params()).require_noncritical();
    return detail::effective_mode(c, g, mode_given) == Arithmetic::rational ? detail::quantize_in<Rational>(c, g, out)
                                                                           : detail::quantize_in<double>(c, g, out);
}

// ----------------------------------------------------------------------------
// verify
// ----------------------------------------------------------------------------

struct VerifyOptions {
    std::string dims = "3,4";
    std::string degrees = "0,1,2,3";
    std::string weights = "1/2:1/2,1/3:2/3,0:1/4";
    std::optional<std::string> config;
    int naturality_max_k = 2;
};

namespace detail
{

inline std::vector<int> parse_int_list(const std::string &s)
{
    std::vector<int> out;
    for (const auto &q : parse_rational_list(s)) {
        if (q.get_den() != 1) {
            throw config_error("expected integers in '" + s + "'");
        }
        out.push_back(static_cast<int>(q.get_num().get_si()));
    }
    return out;
}

inline std::vector<std::pair<Rational, Rational>> parse_weights(const std::string &s)
{
    std::vector<std::pair<Rational, Rational>> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw config_error("weights: expected lambda:mu pairs, got '" + item + "'");
        }
        out.emplace_back(parse_rational(item.substr(0, colon)), parse_rational(item.substr(colon + 1)));
    }
    return out;
}

inline nlohmann::json case_json(const CaseResult &r)
{
    return {{"suite", to_string(r.suite)},
            {"seed", r.seed},
            {"m", r.params.m},
            {"k", r.params.k},
            {"lambda", r.params.lambda.get_str()},
            {"mu", r.params.mu.get_str()},
            {"status", r.status},
            {"deviation", r.deviation},
            {"message", r.message}};
}

// Checks on the data of a single config file.
template <typename S>
SuiteReport verify_config(Suite suite, const ChartConfig &c, const GlobalOptions &g, double tol)
{
    SuiteReport rep;
    auto d = build_chart<S>(c, g.order);
    const Geometry<S> geo(d.g);
    if (g.project_tracefree) {
        d.s = tracefree_project(d.s, geo);
    }
    const auto p = c.params();
    const auto mu = parse_mutation(g.mutate);
    CaseResult r{suite, 0, p, "pass", 0, ""};
    std::optional<Comparison> cmp;
    switch (suite) {
    case Suite::conformal:
        if (!d.phi) {
            r.status = "skipped";
            r.message = "config has no phi";
            break;
        }
        cmp = check_conformal_invariance(d.g, *d.phi, d.s, d.f, p, mu, tol);
        break;
    case Suite::naturality:
        if (!d.psi) {
            r.status = "skipped";
            r.message = "config has no psi";
            break;
        }
        cmp = check_naturality(d.g, *d.psi, d.s, d.f, p, mu, tol);
        break;
    case Suite::oracle2:
    case Suite::oracle3: {
        const int want = suite == Suite::oracle2 ? 2 : 3;
        if (p.k != want) {
            r.status = "skipped";
            r.message = "degree is not " + std::to_string(want);
            break;
        }
        const auto q = quantize(geo, d.s, d.f, p, mu);
        cmp = compare_densities(q, want == 2 ? reference::quantize_k2(geo, d.s, d.f, p)
                                             : reference::quantize_k3(geo, d.s, d.f, p),
                                tol);
        break;
    }
    case Suite::flat: {
        bool constant = true;
        for (const auto &x : d.g.tensor().comps()) {
            for (std::size_t i = 1; i < x.size(); ++i) {
                constant = constant && scalar_traits<S>::is_zero(x[i]);
            }
        }
        if (!constant) {
            r.status = "skipped";
            r.message = "metric is not constant";
            break;
        }
        cmp = compare_densities(quantize(geo, d.s, d.f, p, mu), reference::quantize_flat(d.s, d.f, p), tol);
        break;
    }
    }
    if (cmp) {
        r.deviation = cmp->max_deviation;
        if (!cmp->equal) {
            r.status = "fail";
            r.message = "outputs differ";
        }
    }
    rep.results.push_back(r);
    return rep;
}

} // namespace detail

inline int cmd_verify(const std::string &suite_name, const VerifyOptions &v, const GlobalOptions &g, bool mode_given,
                      std::ostream &out)
{
    const auto suites = parse_suites(suite_name);
    SuiteConfig cfg;
    cfg.dims = detail::parse_int_list(v.dims);
    cfg.degrees = detail::parse_int_list(v.degrees);
    cfg.weights = detail::parse_weights(v.weights);
    cfg.cases = g.cases;
    cfg.seed = g.seed;
    cfg.order = g.order;
    cfg.profile = parse_signature_profile(g.signature);
    cfg.mutation = parse_mutation(g.mutate);
    cfg.arithmetic = parse_arithmetic(g.mode);
    cfg.naturality_max_k = v.naturality_max_k;

    std::optional<ChartConfig> chart;
    if (v.config) {
        chart = load_config(*v.config);
        CoefficientTable(chart->params()).require_noncritical();
        if (!mode_given) {
            cfg.arithmetic = chart->mode;
        }
    }

    bool all_passed = true;
    nlohmann::json report;
    report["mode"] = to_string(cfg.arithmetic);
    report["mutation"] = to_string(cfg.mutation);
    report["suites"] = nlohmann::json::array();
    for (const auto s : suites) {
        SuiteReport rep;
        if (chart) {
            rep = cfg.arithmetic == Arithmetic::rational ? detail::verify_config<Rational>(s, *chart, g, cfg.tolerance)
                                                         : detail::verify_config<double>(s, *chart, g, cfg.tolerance);
        } else {
            rep = run_suite(s, cfg);
        }
        const bool passed = rep.passed();
        all_passed = all_passed && passed;
        out << to_string(s) << ": " << (passed ? "PASS" : "FAIL") << "  pass=" << rep.count("pass")
            << " fail=" << rep.count("fail") << " error=" << rep.count("error") << " skipped=" << rep.count("skipped");
        if (cfg.arithmetic == Arithmetic::floating) {
            out << " max_deviation=" << rep.max_deviation();
        }
        out << " (" << rep.seconds << " s)\n";
        int shown = 0;
        for (const auto &r : rep.results) {
            if ((r.status == "fail" || r.status == "error") && shown++ < 5) {
                out << "  " << r.status << ": seed=" << r.seed << " m=" << r.params.m << " k=" << r.params.k
                    << " lambda=" << r.params.lambda << " mu=" << r.params.mu << "  " << r.message << "\n";
            }
        }
        nlohmann::json sj;
        sj["name"] = to_string(s);
        sj["passed"] = passed;
        sj["seconds"] = rep.seconds;
        sj["cases"] = nlohmann::json::array();
        for (const auto &r : rep.results) {
            sj["cases"].push_back(detail::case_json(r));
        }
        report["suites"].push_back(sj);
    }
    report["passed"] = all_passed;
    if (!g.report.empty()) {
        std::ofstream f(g.report);
        if (!f) {
            throw config_error("cannot write report to '" + g.report + "'");
        }
        f << report.dump(2) << "\n";
    }
    return all_passed ? ok : verification_failed;
}

// ----------------------------------------------------------------------------
// entry point
// ----------------------------------------------------------------------------

inline int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Conformally invariant quantization of trace-free symbols on jets", "conformq"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--mode", g.mode, "Arithmetic: rational or float")->check(CLI::IsMember({"rational", "float"}));
    app.add_option("--order", g.order, "Jet order of the inputs (default: k for configs, k+1 for suites)");
    app.add_option("--seed", g.seed, "Base seed of the random cases");
    app.add_option("--cases", g.cases, "Cases per (m, k, lambda, mu) cell")->check(CLI::PositiveNumber);
    app.add_option("--signature", g.signature, "Signature profile of random metrics")
        ->check(CLI::IsMember({"euclidean", "lorentzian"}));
    app.add_flag("--project-tracefree", g.project_tracefree, "Replace the symbol by its trace-free part");
    app.add_option("--mutate", g.mutate, "Corrupt one coefficient: none, C22, C31, t1_0, t2_k, gamma_shift");
    app.add_option("--report", g.report, "Write a JSON report to this path");
    app.add_flag("--json", g.json, "Machine-readable output");

    QuantParams p;
    std::string lambda = "0", mu = "0";
    auto add_params = [&](CLI::App *sub) {
        sub->add_option("--m", p.m, "Dimension")->required();
        sub->add_option("--lambda", lambda, "Density weight lambda (p/q)")->required();
        sub->add_option("--mu", mu, "Density weight mu (p/q)")->required();
        sub->add_option("--k", p.k, "Symbol degree")->required();
    };
    auto *coeffs = app.add_subcommand("coeffs", "Print gamma_n, C_{k,l} and alpha_{k,0}");
    add_params(coeffs);
    auto *expand = app.add_subcommand("expand", "Print the operator-word expansion");
    add_params(expand);

    auto *quant = app.add_subcommand("quantize", "Evaluate the quantization for a config file");
    std::string config_path;
    std::optional<std::string> point;
    quant->add_option("config", config_path, "Config file (JSON)")->required();
    quant->add_option("--point", point, "Base point override, comma-separated rationals");

    auto *verify = app.add_subcommand("verify", "Run verification suites");
    std::string suite = "all";
    VerifyOptions v;
    verify->add_option("suite", suite, "conformal, naturality, oracle2, oracle3, flat or all");
    verify->add_option("--config", v.config, "Check the data of one config file instead of random cases");
    verify->add_option("--dims", v.dims, "Dimensions, comma-separated");
    verify->add_option("--degrees", v.degrees, "Symbol degrees, comma-separated");
    verify->add_option("--weights", v.weights, "lambda:mu pairs, comma-separated");
    verify->add_option("--naturality-max-k", v.naturality_max_k, "Highest degree of the naturality suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage_error;
    }
    const bool mode_given = app.count("--mode") > 0;

    try {
        if (*coeffs || *expand) {
            p.lambda = parse_rational(lambda);
            p.mu = parse_rational(mu);
            if (p.m < 3) {
                throw dimension_error("--m: dimension must be at least 3");
            }
            if (p.k < 0) {
                throw domain_error("--k: degree must be non-negative");
            }
            return *coeffs ? cmd_coeffs(p, g, out) : cmd_expand(p, g, out);
        }
        if (*quant) {
            return cmd_quantize(config_path, point, g, mode_given, out);
        }
        return cmd_verify(suite, v, g, mode_given, out);
    } catch (const criticality_error &e) {
        err << "criticality error: " << e.what() << "\n";
        return critical;
    } catch (const error &e) {
        err << "error: " << e.what() << "\n";
        return usage_error;
    }
}

} // namespace conformq::cli

#endif
