#include <cmath>

#include <gtest/gtest.h>

#include <conformq/harness.hpp>

#include "test_support.hpp"

using namespace conformq;
using namespace conformq::testing;
using J = Jet<Rational>;
using T = SymTensor<Rational>;

namespace
{

ChartDiffeo<Rational> linear_map(int m, int order, const Rational &factor)
{
    std::vector<J> psi;
    for (int v = 0; v < m; ++v) {
        psi.push_back(J::variable(m, order, v) * factor);
    }
    return ChartDiffeo<Rational>(std::move(psi), std::vector<Rational>(static_cast<std::size_t>(m), Rational(0)));
}

ChartDiffeo<Rational> case_diffeo(const QuantCase<Rational> &c)
{
    return ChartDiffeo<Rational>(c.psi, std::vector<Rational>(static_cast<std::size_t>(c.params.m), Rational(0)));
}

SuiteConfig small_config()
{
    SuiteConfig cfg;
    cfg.cases = 2;
    return cfg;
}

} // namespace

TEST(Rescale, ZeroFactorIsIdentity)
{
    auto rng = rng_for(1);
    const auto g = random_metric(rng, 3, 3);
    EXPECT_EQ(rescale_metric(g, J(3, 3)).tensor(), g.tensor());
}

TEST(Rescale, ConstantFactorOnFlatMetric)
{
    const auto flat = MetricJet<double>::flat(3, 2);
    const auto g = rescale_metric(flat, Jet<double>::constant(3, 2, 0.3));
    const Geometry<double> geo(g);
    for (const auto &c : geo.christoffel().gamma) {
        EXPECT_LE(max_abs(c), 1e-14);
    }
    EXPECT_NEAR(g(0, 0).value(), std::exp(0.6), 1e-14);
    EXPECT_NEAR(g(0, 1).value(), 0.0, 1e-14);
}

TEST(Rescale, Composes)
{
    auto rng = rng_for(2);
    const auto g = random_metric(rng, 4, 3);
    const auto a = random_jet(rng, 4, 3, 1);
    const auto b = random_jet(rng, 4, 3, 1);
    EXPECT_EQ(rescale_metric(rescale_metric(g, a), b).tensor(), rescale_metric(g, a + b).tensor());
}

TEST(Pullback, IdentityMap)
{
    auto rng = rng_for(3);
    const auto g = random_metric(rng, 3, 3);
    const auto id = ChartDiffeo<Rational>::identity(3, 4);
    const auto s = random_tensor(rng, 3, 2, Variance::contravariant, q(1, 3), 3);
    const auto f = random_tensor(rng, 3, 0, Variance::covariant, q(1, 2), 3);
    EXPECT_EQ(pullback(g, id).tensor(), g.tensor());
    EXPECT_EQ(pullback(s, id), s);
    EXPECT_EQ(pullback(f, id), f);
}

TEST(Pullback, DoublingMap)
{
    const auto psi = linear_map(3, 2, 2);
    const auto g = pullback(MetricJet<Rational>::flat(3, 2), psi);
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            EXPECT_EQ(g(a, b), constant(3, 1, a == b ? 4 : 0));
        }
    }
    // det = 8, so a weight-lambda density scales by 8^lambda
    const auto one = T::scalar(constant(3, 2, 1), q(1, 3));
    EXPECT_EQ(pullback(one, psi).value(), constant(3, 1, 2));
    EXPECT_EQ(pullback(one.with_weight(q(2, 3)), psi).value(), constant(3, 1, 4));
    // a contravariant slot takes 1/2, so a degree-2 symbol of weight 1/3 scales by 2/4
    const auto s = tensor_from(3, 2, Variance::contravariant, q(1, 3), 2, [](const std::vector<int> &t) {
        return constant(3, 2, q(t[0] + t[1] + 1));
    });
    const auto ps = pullback(s, psi);
    for (std::size_t I = 0; I < s.comps().size(); ++I) {
        EXPECT_EQ(ps.comp(I), s.comp(I).truncate(1) * q(1, 2));
    }
}

TEST(Pullback, PairingIsNatural)
{
    for (unsigned seed = 0; seed < 4; ++seed) {
        const QuantParams p{3 + static_cast<int>(seed % 2), q(1, 3), q(2, 3), 2};
        const auto c = generate_case(seed, p);
        const auto psi = case_diffeo(c);
        auto rng = rng_for(seed);
        const auto h = random_tensor(rng, p.m, 2, Variance::covariant, 0, 3);
        EXPECT_EQ(pullback(pair(c.s, h), psi), pair(pullback(c.s, psi), pullback(h, psi)));
    }
}

TEST(Pullback, DeterminantOfGeneratedMapsIsOne)
{
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto c = generate_case(seed, QuantParams{4, q(1, 2), q(1, 2), 2});
        const auto psi = case_diffeo(c);
        EXPECT_EQ(psi.determinant().value(), 1);
        for (const auto &x : c.psi) {
            EXPECT_EQ(x.value(), 0);
        }
    }
}

TEST(ConformalCheck, TrivialAndFlatCases)
{
    for (int k = 0; k <= 3; ++k) {
        const QuantParams p{3, q(1, 3), q(2, 3), k};
        const auto c = generate_case(5, p);
        EXPECT_TRUE(check_conformal_invariance(c.g, J(3, c.phi.order()), c.s, c.f, p).equal);
        const auto flat = generate_case(5, p, CaseOptions{-1, SignatureProfile::euclidean, true});
        EXPECT_TRUE(check_conformal_invariance(flat.g, flat.phi, flat.s, flat.f, p).equal) << "k=" << k;
    }
}

TEST(ConformalCheck, CurvedCases)
{
    for (int k = 0; k <= 3; ++k) {
        for (std::uint64_t seed = 0; seed < 2; ++seed) {
            const QuantParams p{4, q(0), q(1, 4), k};
            const auto c = generate_case(seed, p);
            EXPECT_TRUE(check_conformal_invariance(c.g, c.phi, c.s, c.f, p).equal) << "k=" << k;
        }
    }
}

TEST(ConformalCheck, DetectsCorruptedCoefficient)
{
    const QuantParams p{3, q(1, 3), q(2, 3), 2};
    bool detected = false;
    for (std::uint64_t seed = 0; seed < 3 && !detected; ++seed) {
        const auto c = generate_case(seed, p);
        detected = !check_conformal_invariance(c.g, c.phi, c.s, c.f, p, Mutation::c22).equal;
    }
    EXPECT_TRUE(detected);
}

TEST(NaturalityCheck, Examples)
{
    const QuantParams p{3, q(1, 2), q(1, 2), 2};
    const auto c = generate_case(8, p);
    EXPECT_TRUE(check_naturality(c.g, ChartDiffeo<Rational>::identity(3, 4), c.s, c.f, p).equal);
    // affine map on a flat metric
    const auto flat = generate_case(8, p, CaseOptions{-1, SignatureProfile::euclidean, true});
    std::vector<J> affine;
    for (int a = 0; a < 3; ++a) {
        affine.push_back(case_diffeo(flat).jacobian()(static_cast<std::size_t>(a), 0).value() * J::variable(3, 4, 0)
                         + case_diffeo(flat).jacobian()(static_cast<std::size_t>(a), 1).value() * J::variable(3, 4, 1)
                         + case_diffeo(flat).jacobian()(static_cast<std::size_t>(a), 2).value() * J::variable(3, 4, 2));
    }
    const ChartDiffeo<Rational> lin(affine, {0, 0, 0});
    EXPECT_TRUE(check_naturality(flat.g, lin, flat.s, flat.f, p).equal);
    // quadratic perturbation on a curved metric
    EXPECT_TRUE(check_naturality(c.g, case_diffeo(c), c.s, c.f, p).equal);
    EXPECT_THROW(check_naturality(c.g, linear_map(3, 2, 1), c.s, c.f, p), order_error);
}

TEST(GenerateCase, IsDeterministic)
{
    const QuantParams p{4, q(1, 3), q(2, 3), 2};
    const auto a = generate_case(42, p);
    const auto b = generate_case(42, p);
    EXPECT_EQ(a.g.tensor(), b.g.tensor());
    EXPECT_EQ(a.s, b.s);
    EXPECT_EQ(a.f, b.f);
    EXPECT_EQ(a.phi, b.phi);
    EXPECT_EQ(a.psi, b.psi);
    const auto c = generate_case(43, p);
    EXPECT_NE(a.f, c.f);
}

TEST(GenerateCase, Properties)
{
    for (int m = 3; m <= 4; ++m) {
        for (int k = 0; k <= 3; ++k) {
            const QuantParams p{m, q(1, 3), q(2, 3), k};
            const auto c = generate_case(7, p);
            const Geometry<Rational> geo(c.g);
            EXPECT_TRUE(is_trace_free(c.s, geo));
            EXPECT_EQ(c.s.weight(), p.delta());
            EXPECT_EQ(c.f.weight(), p.lambda);
            EXPECT_EQ(c.phi.value(), 0);
            EXPECT_EQ(c.g.order(), k + 1);
            EXPECT_EQ(c.psi.front().order(), k + 2);
            EXPECT_EQ(c.g.signature(), (Signature{m, 0}));
            for (int a = 0; a < m; ++a) {
                for (int b = 0; b < m; ++b) {
                    EXPECT_EQ(c.g(a, b).value(), a == b ? 1 : 0);
                }
            }
        }
    }
    EXPECT_EQ(generate_case(1, QuantParams{3, 0, 0, 2}, CaseOptions{5}).g.order(), 5);
    EXPECT_THROW(generate_case(1, QuantParams{3, 0, 0, 2}, CaseOptions{1}), order_error);
}

TEST(GenerateCase, SignatureProfiles)
{
    for (int m = 3; m <= 4; ++m) {
        const auto c = generate_case(3, QuantParams{m, q(1, 2), q(1, 2), 2}, CaseOptions{-1, SignatureProfile::lorentzian});
        EXPECT_EQ(c.g.signature(), (Signature{m - 1, 1}));
        EXPECT_TRUE(is_trace_free(c.s, Geometry<Rational>(c.g)));
    }
    EXPECT_EQ(parse_signature_profile("lorentzian"), SignatureProfile::lorentzian);
    EXPECT_EQ(parse_signature_profile("euclidean"), SignatureProfile::euclidean);
    EXPECT_THROW(parse_signature_profile("kleinian"), config_error);
    EXPECT_EQ(signature_of(SignatureProfile::lorentzian, 4), (Signature{3, 1}));
}

TEST(GenerateCase, RejectsCriticalParameters)
{
    try {
        generate_case(1, QuantParams{3, q(0), q(1), 1});
        FAIL() << "expected criticality_error";
    } catch (const criticality_error &e) {
        EXPECT_EQ(e.gamma_index(), 0);
    }
}

TEST(Suites, Parsing)
{
    EXPECT_EQ(parse_suites("all").size(), 5u);
    EXPECT_EQ(parse_suites("oracle3"), std::vector<Suite>{Suite::oracle3});
    EXPECT_THROW(parse_suites("everything"), config_error);
    EXPECT_EQ(parse_arithmetic("float"), Arithmetic::floating);
    EXPECT_EQ(parse_arithmetic("rational"), Arithmetic::rational);
    EXPECT_THROW(parse_arithmetic("decimal"), config_error);
}

TEST(Suites, SmallRunsPass)
{
    SuiteConfig cfg = small_config();
    cfg.degrees = {0, 1, 2};
    for (auto s : parse_suites("all")) {
        const auto r = run_suite(s, cfg);
        EXPECT_TRUE(r.passed()) << to_string(s);
        EXPECT_EQ(r.count("skipped"), 0u);
    }
    EXPECT_EQ(run_suite(Suite::oracle2, cfg).results.size(), 2u * 3u * 2u);
    EXPECT_TRUE(run_suite(Suite::oracle3, cfg).results.empty());
}

TEST(Suites, FloatModeAndLorentzianProfile)
{
    SuiteConfig cfg = small_config();
    cfg.dims = {4};
    cfg.degrees = {2};
    cfg.arithmetic = Arithmetic::floating;
    const auto fr = run_suite(Suite::conformal, cfg);
    EXPECT_TRUE(fr.passed());
    EXPECT_LT(fr.max_deviation(), 1e-8);
    cfg.arithmetic = Arithmetic::rational;
    cfg.profile = SignatureProfile::lorentzian;
    EXPECT_TRUE(run_suite(Suite::conformal, cfg).passed());
    EXPECT_TRUE(run_suite(Suite::naturality, cfg).passed());
}

TEST(Suites, CriticalCellsAreSkipped)
{
    SuiteConfig cfg = small_config();
    cfg.dims = {3};
    cfg.degrees = {1};
    cfg.weights = {{q(0), q(1)}};
    const auto r = run_suite(Suite::conformal, cfg);
    ASSERT_EQ(r.results.size(), 1u);
    EXPECT_EQ(r.results[0].status, "skipped");
    EXPECT_TRUE(r.passed());
}

TEST(Suites, MutationIsReported)
{
    SuiteConfig cfg = small_config();
    cfg.degrees = {2};
    cfg.mutation = Mutation::c22;
    const auto r = run_suite(Suite::conformal, cfg);
    EXPECT_FALSE(r.passed());
    EXPECT_GT(r.count("fail"), 0u);
}

TEST(Suites, ReportsAreReproducible)
{
    SuiteConfig cfg = small_config();
    cfg.degrees = {2};
    cfg.arithmetic = Arithmetic::floating;
    cfg.mutation = Mutation::t1_j0;
    const auto a = run_suite(Suite::conformal, cfg);
    const auto b = run_suite(Suite::conformal, cfg);
    ASSERT_EQ(a.results.size(), b.results.size());
    for (std::size_t i = 0; i < a.results.size(); ++i) {
        EXPECT_EQ(a.results[i].seed, b.results[i].seed);
        EXPECT_EQ(a.results[i].status, b.results[i].status);
        EXPECT_EQ(a.results[i].deviation, b.results[i].deviation);
    }
}
