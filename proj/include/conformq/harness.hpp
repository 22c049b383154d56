#ifndef CONFORMQ_HARNESS_HPP
#define CONFORMQ_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <conformq/calculus.hpp>
#include <conformq/coefficients.hpp>
#include <conformq/errors.hpp>
#include <conformq/jet.hpp>
#include <conformq/linalg.hpp>
#include <conformq/metric.hpp>
#include <conformq/quantize.hpp>
#include <conformq/tensor.hpp>

namespace conformq
{

// e^{2 phi} g.
template <typename S>
MetricJet<S> rescale_metric(const MetricJet<S> &g, const Jet<S> &phi)
{
    if (phi.dim() != g.dim()) {
        throw dimension_error("rescale_metric: dimension mismatch");
    }
    const Jet<S> factor = jet_exp(phi * S(2));
    return MetricJet<S>(factor * g.tensor());
}

// A point map y -> x = psi(y) between two charts, as jets at y0 with psi(y0) = base.
template <typename S>
class ChartDiffeo
{
public:
    ChartDiffeo(std::vector<Jet<S>> psi, std::vector<S> base)
        : m_psi(std::move(psi)), m_composer(m_psi, base),
          m_jac(m_psi.size(), m_psi.size(), Jet<S>(static_cast<int>(m_psi.size()), 0)),
          m_inv(m_jac)
    {
        const int m = static_cast<int>(m_psi.size());
        if (m_psi.front().dim() != m) {
            throw dimension_error("ChartDiffeo: source and target charts differ in dimension");
        }
        if (m_composer.order() < 1) {
            throw order_error("ChartDiffeo: point map jets need order at least 1");
        }
        for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
                m_jac(static_cast<std::size_t>(a), static_cast<std::size_t>(b))
                    = jet_partial(m_psi[static_cast<std::size_t>(a)], b).truncate(m_composer.order() - 1);
            }
        }
        m_inv = jet_matrix_inverse(m_jac);
        m_det = jet_determinant(m_jac);
        m_det_sign = scalar_traits<S>::sign(m_det.value());
    }

    // psi = base + x with its jet order: the identity map.
    static ChartDiffeo identity(int dim, int order)
    {
        std::vector<Jet<S>> psi;
        for (int v = 0; v < dim; ++v) {
            psi.push_back(Jet<S>::variable(dim, order, v));
        }
        return ChartDiffeo(std::move(psi), std::vector<S>(static_cast<std::size_t>(dim), S(0)));
    }

    int dim() const noexcept
    {
        return static_cast<int>(m_psi.size());
    }
    // Order of the Jacobian jets.
    int order() const noexcept
    {
        return m_composer.order() - 1;
    }
    const std::vector<Jet<S>> &map() const noexcept
    {
        return m_psi;
    }
    // J^a_b = d psi^a / d y^b.
    const JetMatrix<S> &jacobian() const noexcept
    {
        return m_jac;
    }
    const JetMatrix<S> &inverse_jacobian() const noexcept
    {
        return m_inv;
    }
    const Jet<S> &determinant() const noexcept
    {
        return m_det;
    }
    // |det J|^w.
    Jet<S> det_power(const Rational &w) const
    {
        const Jet<S> a = m_det_sign < 0 ? -m_det : m_det;
        if (sgn(w) == 0) {
            return Jet<S>::constant(a.dim(), a.order(), S(1));
        }
        return jet_pow(a, w);
    }
    // The function f o psi.
    Jet<S> compose(const Jet<S> &f) const
    {
        return m_composer(f);
    }

private:
    std::vector<Jet<S>> m_psi;
    Composer<S> m_composer;
    JetMatrix<S> m_jac;
    JetMatrix<S> m_inv;
    Jet<S> m_det;
    int m_det_sign = 1;
};

// psi^* of a symmetric tensor density: covariant slots take J, contravariant slots take
// J^{-1}, and the weight-w part takes |det J|^w.
template <typename S>
SymTensor<S> pullback(const SymTensor<S> &t, const ChartDiffeo<S> &psi)
{
    const int m = t.dim();
    if (psi.dim() != m) {
        throw dimension_error("pullback: dimension mismatch");
    }
    const int k = t.rank();
    const auto mm = static_cast<std::size_t>(m);
    std::size_t total = 1;
    for (int i = 0; i < k; ++i) {
        total *= mm;
    }
    const auto &idx = t.indices();
    std::vector<Jet<S>> composed;
    composed.reserve(idx.size());
    for (const auto &c : t.comps()) {
        composed.push_back(psi.compose(c));
    }
    // dense[t] over ordered tuples, slot 0 most significant
    std::vector<Jet<S>> dense(total);
    std::vector<int> tuple(static_cast<std::size_t>(k));
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for (int s = k - 1; s >= 0; --s) {
            tuple[static_cast<std::size_t>(s)] = static_cast<int>(rem % mm);
            rem /= mm;
        }
        dense[flat] = composed[idx.index_of(tuple)];
    }
    const bool cov = t.is_covariant();
    std::size_t stride = total;
    for (int s = 0; s < k; ++s) {
        stride /= mm;
        std::vector<Jet<S>> next(total);
        for (std::size_t flat = 0; flat < total; ++flat) {
            const std::size_t a = (flat / stride) % mm;
            const std::size_t stem = flat - a * stride;
            std::optional<Jet<S>> acc;
            for (std::size_t c = 0; c < mm; ++c) {
                // covariant: T'_a = J^c_a T_c; contravariant: T'^a = (J^{-1})^a_c T^c
                const Jet<S> &f = cov ? psi.jacobian()(c, a) : psi.inverse_jacobian()(a, c);
                if (f.is_zero()) {
                    continue;
                }
                Jet<S> term = f * dense[stem + c * stride];
                if (acc) {
                    *acc += term;
                } else {
                    acc = std::move(term);
                }
            }
            if (!acc) {
                acc = Jet<S>(m, std::min(psi.order(), dense[flat].order()));
            }
            next[flat] = std::move(*acc);
        }
        dense = std::move(next);
    }
    const Jet<S> scale = psi.det_power(t.weight());
    std::vector<Jet<S>> out;
    out.reserve(idx.size());
    for (std::size_t I = 0; I < idx.size(); ++I) {
        std::size_t flat = 0;
        for (int x : idx.tuple(I)) {
            flat = flat * mm + static_cast<std::size_t>(x);
        }
        out.push_back(scale * dense[flat]);
    }
    return SymTensor<S>(m, k, t.variance(), t.weight(), std::move(out));
}

template <typename S>
MetricJet<S> pullback(const MetricJet<S> &g, const ChartDiffeo<S> &psi)
{
    return MetricJet<S>(pullback(g.tensor(), psi));
}

// Outcome of comparing two density jets.
struct Comparison {
    bool equal = false;
    double max_deviation = 0;
    double scale = 0;
    int order = -1;
};

// Compares two scalar densities to their common order. Rational mode demands literal
// equality; float mode accepts a deviation up to rel_tol * max(1, |reference|).
template <typename S>
Comparison compare_densities(const SymTensor<S> &a, const SymTensor<S> &b, double rel_tol = 1e-8)
{
    if (a.rank() != 0 || b.rank() != 0) {
        throw dimension_error("compare_densities: expects scalar densities");
    }
    if (a.weight() != b.weight()) {
        throw dimension_error("compare_densities: weights differ");
    }
    Comparison c;
    c.order = std::min(a.order(), b.order());
    const Jet<S> x = a.value().truncate(c.order);
    const Jet<S> y = b.value().truncate(c.order);
    c.max_deviation = max_abs_diff(x, y);
    c.scale = std::max(max_abs(x), max_abs(y));
    if constexpr (scalar_traits<S>::exact) {
        c.equal = x == y;
    } else {
        c.equal = c.max_deviation <= rel_tol * std::max(1.0, c.scale);
    }
    return c;
}

template <typename S>
Comparison check_conformal_invariance(const MetricJet<S> &g, const Jet<S> &phi, const SymTensor<S> &s,
                                      const SymTensor<S> &f, const QuantParams &p, Mutation mutation = Mutation::none,
                                      double rel_tol = 1e-8)
{
    const CoefficientTable table(p, mutation);
    const auto q0 = quantize(Geometry<S>(g), s, f, table);
    const auto q1 = quantize(Geometry<S>(rescale_metric(g, phi)), s, f, table);
    return compare_densities(q0, q1, rel_tol);
}

template <typename S>
Comparison check_naturality(const MetricJet<S> &g, const ChartDiffeo<S> &psi, const SymTensor<S> &s,
                            const SymTensor<S> &f, const QuantParams &p, Mutation mutation = Mutation::none,
                            double rel_tol = 1e-8)
{
    if (psi.order() < p.k) {
        throw order_error("check_naturality: the point map needs jet order at least k + 1");
    }
    const CoefficientTable table(p, mutation);
    const auto pulled = quantize(Geometry<S>(pullback(g, psi)), pullback(s, psi), pullback(f, psi), table);
    const auto direct = pullback(quantize(Geometry<S>(g), s, f, table), psi);
    return compare_densities(pulled, direct, rel_tol);
}

// ----------------------------------------------------------------------------
// Random cases
// ----------------------------------------------------------------------------

enum class SignatureProfile { euclidean, lorentzian };

inline const char *to_string(SignatureProfile p)
{
    return p == SignatureProfile::euclidean ? "euclidean" : "lorentzian";
}

inline SignatureProfile parse_signature_profile(const std::string &s)
{
    if (s == "euclidean" || s == "riemannian") {
        return SignatureProfile::euclidean;
    }
    if (s == "lorentzian") {
        return SignatureProfile::lorentzian;
    }
    throw config_error("unknown signature profile '" + s + "' (expected euclidean or lorentzian)");
}

inline Signature signature_of(SignatureProfile p, int m)
{
    return p == SignatureProfile::euclidean ? Signature{m, 0} : Signature{m - 1, 1};
}

// Small deterministic generator of rationals. Reduction is by modulo so the stream is the
// same on every standard library.
class CaseRng
{
public:
    explicit CaseRng(std::seed_seq &seq) : m_eng(seq) {}

    int uniform(int lo, int hi)
    {
        return lo + static_cast<int>(m_eng() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    Rational rational(int num_range = 3, int den_max = 3)
    {
        return ratio(uniform(-num_range, num_range), uniform(1, den_max));
    }
    Rational nonzero_rational(int num_range = 3, int den_max = 3)
    {
        Rational q;
        while (sgn(q) == 0) {
            q = rational(num_range, den_max);
        }
        return q;
    }

private:
    std::mt19937_64 m_eng;
};

// Random jet: each monomial of degree lo..order gets a coefficient with probability 2/3.
inline Jet<Rational> random_jet(CaseRng &rng, int dim, int order, int lo_degree)
{
    const auto &b = MonomialBasis::get(dim, order);
    std::vector<Rational> c(b.size(order));
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (b.degree(i) >= lo_degree && rng.uniform(0, 2) > 0) {
            c[i] = rng.rational();
        }
    }
    return Jet<Rational>(dim, order, std::move(c));
}

// Integer matrix with determinant 1: a product of random elementary shears.
inline std::vector<std::vector<int>> random_unimodular(CaseRng &rng, int m)
{
    std::vector<std::vector<int>> a(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(m), 0));
    for (int i = 0; i < m; ++i) {
        a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1;
    }
    for (int step = 0; step < m; ++step) {
        const int i = rng.uniform(0, m - 1);
        int j = rng.uniform(0, m - 2);
        j += j >= i ? 1 : 0;
        const int t = rng.uniform(0, 1) ? 1 : -1;
        // row_i += t * row_j
        for (int c = 0; c < m; ++c) {
            a[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] += t * a[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
        }
    }
    return a;
}

template <typename S>
struct QuantCase {
    QuantParams params;
    std::uint64_t seed = 0;
    Signature signature;
    MetricJet<S> g;
    SymTensor<S> s;
    SymTensor<S> f;
    Jet<S> phi;
    std::vector<Jet<S>> psi;
};

struct CaseOptions {
    // Jet order of g, S, f and phi; psi gets one more. Negative means k + 1.
    int order = -1;
    SignatureProfile profile = SignatureProfile::euclidean;
    // Replace g by its constant value (flat metric).
    bool flat = false;
};

// Deterministic random inputs for one (m, k, lambda, mu): g = eta + perturbation vanishing
// at the base point, S trace-free of weight delta, f of weight lambda, phi with phi(0) = 0,
// and psi = unimodular linear part + terms of degree 2 and up. Everything lives at the
// origin of both charts.
inline QuantCase<Rational> generate_case(std::uint64_t seed, const QuantParams &p, const CaseOptions &opts = {})
{
    CoefficientTable(p).require_noncritical();
    const int m = p.m;
    const int n = opts.order < 0 ? p.k + 1 : opts.order;
    if (n < p.k) {
        throw order_error("generate_case: order below the symbol degree");
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(p.k),
                      static_cast<std::uint32_t>(p.lambda.get_num().get_si()),
                      static_cast<std::uint32_t>(p.lambda.get_den().get_si()),
                      static_cast<std::uint32_t>(p.mu.get_num().get_si()),
                      static_cast<std::uint32_t>(p.mu.get_den().get_si()),
                      static_cast<std::uint32_t>(opts.profile), static_cast<std::uint32_t>(opts.flat)};
    CaseRng rng(seq);
    const Signature sig = signature_of(opts.profile, m);

    SymTensor<Rational> gt(m, 2, Variance::covariant, 0, n);
    std::vector<Jet<Rational>> gc;
    const auto &gi = gt.indices();
    for (std::size_t I = 0; I < gi.size(); ++I) {
        const auto &t = gi.tuple(I);
        Jet<Rational> c = opts.flat ? Jet<Rational>(m, n) : random_jet(rng, m, n, 1);
        if (t[0] == t[1]) {
            c += Jet<Rational>::constant(m, n, t[0] < sig.positive ? Rational(1) : Rational(-1));
        }
        gc.push_back(std::move(c));
    }
    MetricJet<Rational> g(SymTensor<Rational>(m, 2, Variance::covariant, 0, std::move(gc)), sig);
    const Geometry<Rational> geo(g);

    std::vector<Jet<Rational>> sc;
    for (std::size_t I = 0; I < SymIndexSet::get(m, p.k).size(); ++I) {
        sc.push_back(random_jet(rng, m, n, 0));
    }
    auto s = tracefree_project(SymTensor<Rational>(m, p.k, Variance::contravariant, p.delta(), std::move(sc)), geo);
    auto f = SymTensor<Rational>::scalar(random_jet(rng, m, n, 0), p.lambda);
    auto phi = random_jet(rng, m, n, 1);

    const auto a = random_unimodular(rng, m);
    std::vector<Jet<Rational>> psi;
    for (int i = 0; i < m; ++i) {
        Jet<Rational> c = random_jet(rng, m, n + 1, 2);
        for (int j = 0; j < m; ++j) {
            const int e = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (e != 0) {
                c += Jet<Rational>::variable(m, n + 1, j) * Rational(e);
            }
        }
        psi.push_back(std::move(c));
    }
    return QuantCase<Rational>{p, seed, sig, std::move(g), std::move(s), std::move(f), std::move(phi), std::move(psi)};
}

template <typename S>
QuantCase<S> convert_case(const QuantCase<Rational> &c)
{
    std::vector<Jet<S>> psi;
    for (const auto &x : c.psi) {
        psi.push_back(change_scalar<S>(x));
    }
    return QuantCase<S>{c.params,
                        c.seed,
                        c.signature,
                        MetricJet<S>(change_scalar<S>(c.g.tensor())),
                        change_scalar<S>(c.s),
                        change_scalar<S>(c.f),
                        change_scalar<S>(c.phi),
                        std::move(psi)};
}

// ----------------------------------------------------------------------------
// Suites
// ----------------------------------------------------------------------------

enum class Suite { conformal, naturality, oracle2, oracle3, flat };

inline const char *to_string(Suite s)
{
    switch (s) {
    case Suite::conformal:
        return "conformal";
    case Suite::naturality:
        return "naturality";
    case Suite::oracle2:
        return "oracle2";
    case Suite::oracle3:
        return "oracle3";
    case Suite::flat:
        return "flat";
    }
    return "?";
}

inline std::vector<Suite> parse_suites(const std::string &s)
{
    if (s == "all") {
        return {Suite::conformal, Suite::naturality, Suite::oracle2, Suite::oracle3, Suite::flat};
    }
    for (auto x : {Suite::conformal, Suite::naturality, Suite::oracle2, Suite::oracle3, Suite::flat}) {
        if (s == to_string(x)) {
            return {x};
        }
    }
    throw config_error("unknown suite '" + s + "' (expected conformal, naturality, oracle2, oracle3, flat or all)");
}

enum class Arithmetic { rational, floating };

inline Arithmetic parse_arithmetic(const std::string &s)
{
    if (s == "rational" || s == "exact") {
        return Arithmetic::rational;
    }
    if (s == "float" || s == "double") {
        return Arithmetic::floating;
    }
    throw config_error("unknown arithmetic mode '" + s + "' (expected rational or float)");
}

inline const char *to_string(Arithmetic a)
{
    return a == Arithmetic::rational ? "rational" : "float";
}

struct SuiteConfig {
    std::vector<int> dims{3, 4};
    std::vector<int> degrees{0, 1, 2, 3};
    std::vector<std::pair<Rational, Rational>> weights{
        {ratio(1, 2), ratio(1, 2)}, {ratio(1, 3), ratio(2, 3)}, {Rational(0), ratio(1, 4)}};
    int cases = 20;
    std::uint64_t seed = 1;
    int order = -1;
    SignatureProfile profile = SignatureProfile::euclidean;
    Mutation mutation = Mutation::none;
    Arithmetic arithmetic = Arithmetic::rational;
    double tolerance = 1e-8;
    // Highest degree run by the naturality suite.
    int naturality_max_k = 2;
};

struct CaseResult {
    Suite suite = Suite::conformal;
    std::uint64_t seed = 0;
    QuantParams params;
    std::string status; // "pass", "fail", "skipped" or "error"
    double deviation = 0;
    std::string message;
};

struct SuiteReport {
    std::vector<CaseResult> results;
    double seconds = 0;

    std::size_t count(const std::string &status) const
    {
        return static_cast<std::size_t>(
            std::count_if(results.begin(), results.end(), [&](const CaseResult &r) { return r.status == status; }));
    }
    bool passed() const
    {
        return count("fail") == 0 && count("error") == 0;
    }
    double max_deviation() const
    {
        double d = 0;
        for (const auto &r : results) {
            d = std::max(d, r.deviation);
        }
        return d;
    }
};

namespace detail
{

inline bool suite_applies(Suite s, int k, const SuiteConfig &cfg)
{
    switch (s) {
    case Suite::naturality:
        return k <= cfg.naturality_max_k;
    case Suite::oracle2:
        return k == 2;
    case Suite::oracle3:
        return k == 3;
    default:
        return true;
    }
}

template <typename S>
Comparison run_case(Suite suite, const QuantCase<S> &c, const SuiteConfig &cfg)
{
    const auto &p = c.params;
    switch (suite) {
    case Suite::conformal:
        return check_conformal_invariance(c.g, c.phi, c.s, c.f, p, cfg.mutation, cfg.tolerance);
    case Suite::naturality:
        return check_naturality(c.g, ChartDiffeo<S>(c.psi, std::vector<S>(static_cast<std::size_t>(p.m), S(0))), c.s,
                                c.f, p, cfg.mutation, cfg.tolerance);
    case Suite::oracle2:
    case Suite::oracle3: {
        const Geometry<S> geo(c.g);
        const auto q = quantize(geo, c.s, c.f, p, cfg.mutation);
        const auto o = suite == Suite::oracle2 ? reference::quantize_k2(geo, c.s, c.f, p)
                                               : reference::quantize_k3(geo, c.s, c.f, p);
        return compare_densities(q, o, cfg.tolerance);
    }
    case Suite::flat: {
        const auto q = quantize(Geometry<S>(c.g), c.s, c.f, p, cfg.mutation);
        return compare_densities(q, reference::quantize_flat(c.s, c.f, p), cfg.tolerance);
    }
    }
    throw domain_error("run_case: unknown suite");
}

} // namespace detail

// Runs one suite over the (m, k, lambda, mu) matrix. Critical cells are reported as
// skipped. Case i of every cell uses seed cfg.seed + i.
inline SuiteReport run_suite(Suite suite, const SuiteConfig &cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    SuiteReport report;
    for (int m : cfg.dims) {
        for (int k : cfg.degrees) {
            if (!detail::suite_applies(suite, k, cfg)) {
                continue;
            }
            for (const auto &[lambda, mu] : cfg.weights) {
                const QuantParams p{m, lambda, mu, k};
                if (CoefficientTable(p).criticality().critical()) {
                    report.results.push_back({suite, cfg.seed, p, "skipped", 0, "critical delta"});
                    continue;
                }
                for (int i = 0; i < cfg.cases; ++i) {
                    CaseResult r{suite, cfg.seed + static_cast<std::uint64_t>(i), p, "pass", 0, ""};
                    try {
                        CaseOptions opts{cfg.order, cfg.profile, suite == Suite::flat};
                        const auto rc = generate_case(r.seed, p, opts);
                        const Comparison cmp = cfg.arithmetic == Arithmetic::rational
                                                   ? detail::run_case(suite, rc, cfg)
                                                   : detail::run_case(suite, convert_case<double>(rc), cfg);
                        r.deviation = cmp.max_deviation;
                        if (!cmp.equal) {
                            r.status = "fail";
                            r.message = "outputs differ (max deviation " + std::to_string(cmp.max_deviation) + ")";
                        }
                    } catch (const error &e) {
                        r.status = "error";
                        r.message = e.what();
                    }
                    report.results.push_back(std::move(r));
                }
            }
        }
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace conformq

#endif
