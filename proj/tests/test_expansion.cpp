#include <algorithm>

#include <gtest/gtest.h>

#include <cli_commands.hpp>
#include <conformq/expansion.hpp>
#include <conformq/quantize.hpp>

#include "golden_support.hpp"
#include "test_support.hpp"

using namespace conformq;
using namespace conformq::testing;

namespace
{

std::map<std::string, Rational> word_map(const ExpansionPlan &plan)
{
    std::map<std::string, Rational> out;
    for (const auto &w : plan.words) {
        out[w.letters] = w.coefficient;
    }
    return out;
}

std::string strip_spaces(std::string s)
{
    s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
    return s;
}

long fibonacci(int n)
{
    long a = 0, b = 1;
    for (int i = 0; i < n; ++i) {
        a = std::exchange(b, a + b);
    }
    return a;
}

// Coefficient of a word recomputed letter by letter from the scalar coefficient functions.
Rational walk_coefficient(Side side, const std::string &letters, int k, int m, const Rational &lambda, const Rational &delta)
{
    Rational c = 1;
    int v = side == Side::density ? 0 : k;
    for (auto it = letters.rbegin(); it != letters.rend(); ++it) {
        if (*it == 'D') {
            v += side == Side::density ? 1 : -1;
        } else if (side == Side::density) {
            c *= t1_coeff(v, m, lambda);
            v += 2;
        } else {
            c *= t2_coeff(v, k, m, delta);
            v -= 2;
        }
    }
    return c;
}

} // namespace

TEST(ExpandWords, DensitySideExamples)
{
    const Rational lambda = q(1, 3);
    const int m = 4;
    const Rational beta = -lambda * m;
    EXPECT_EQ(word_map(expand_words(Side::density, 0, 3, m, lambda, q(1, 3))), (std::map<std::string, Rational>{{"", 1}}));
    EXPECT_EQ(word_map(expand_words(Side::density, 1, 3, m, lambda, q(1, 3))), (std::map<std::string, Rational>{{"D", 1}}));
    EXPECT_EQ(word_map(expand_words(Side::density, 2, 3, m, lambda, q(1, 3))),
              (std::map<std::string, Rational>{{"DD", 1}, {"T", beta}}));
    EXPECT_EQ(word_map(expand_words(Side::density, 3, 3, m, lambda, q(1, 3))),
              (std::map<std::string, Rational>{{"DDD", 1}, {"DT", beta}, {"TD", 2 * (beta - 1)}}));
}

TEST(ExpandWords, SymbolSideExamples)
{
    const int m = 3;
    const Rational delta = q(1, 3);
    const Rational beta = m * gamma(4, m, delta);
    EXPECT_EQ(word_map(expand_words(Side::symbol, 3, 3, m, q(1, 3), delta)),
              (std::map<std::string, Rational>{{"DDD", 1}, {"DT", beta}, {"TD", 2 * (beta - 1)}}));
    const Rational beta2 = m * gamma(2, m, delta);
    EXPECT_EQ(word_map(expand_words(Side::symbol, 2, 2, m, q(1, 3), delta)),
              (std::map<std::string, Rational>{{"DD", 1}, {"T", beta2}}));
    EXPECT_THROW(expand_words(Side::symbol, 3, 2, m, q(1, 3), delta), domain_error);
}

TEST(ExpandWords, CoefficientsFollowTheValenceWalk)
{
    for (int k = 0; k <= 5; ++k) {
        for (int target = 0; target <= 6; ++target) {
            for (const auto side : {Side::density, Side::symbol}) {
                if (side == Side::symbol && target > k) {
                    continue;
                }
                const auto plan = expand_words(side, target, k, 4, q(2, 5), q(1, 7));
                EXPECT_EQ(static_cast<long>(plan.words.size()), fibonacci(target + 1));
                for (const auto &w : plan.words) {
                    EXPECT_EQ(w.degree(), target);
                    EXPECT_EQ(w.coefficient, walk_coefficient(side, w.letters, k, 4, q(2, 5), q(1, 7))) << w.letters;
                }
            }
        }
    }
}

TEST(ExpandWords, BetaPolynomialEvaluatesToTheCoefficient)
{
    const int m = 4, k = 4;
    const Rational lambda = q(-1, 3), delta = q(2, 9);
    for (const auto side : {Side::density, Side::symbol}) {
        const Rational beta = side == Side::density ? Rational(-lambda * m) : Rational(m * gamma(2 * k - 2, m, delta));
        for (int target = 0; target <= k; ++target) {
            for (const auto &w : expand_words(side, target, k, m, lambda, delta).words) {
                Rational v = 0, p = 1;
                for (const auto &c : w.beta_coefficient) {
                    v += c * p;
                    p *= beta;
                }
                EXPECT_EQ(v, w.coefficient);
            }
        }
    }
}

// Exactly one T-free word per plan: D^target with coefficient 1. Paired with C_{k,l}
// this leaves C_{k,0} = 1 in front of <S, D^k f>.
TEST(ExpandWords, PrincipalSymbol)
{
    for (int m = 3; m <= 4; ++m) {
        for (int k = 0; k <= 4; ++k) {
            const QuantParams p{m, q(1, 3), q(2, 3), k};
            const CoefficientTable t(p);
            for (int l = 0; l <= k; ++l) {
                for (const auto &[side, target] : {std::pair{Side::symbol, l}, std::pair{Side::density, k - l}}) {
                    const auto plan = expand_words(side, target, t);
                    std::vector<const OperatorWord *> free;
                    for (const auto &w : plan.words) {
                        if (!w.has_t()) {
                            free.push_back(&w);
                        }
                    }
                    ASSERT_EQ(free.size(), 1u);
                    EXPECT_EQ(free[0]->letters, std::string(static_cast<std::size_t>(target), 'D'));
                    EXPECT_EQ(free[0]->coefficient, 1);
                }
            }
            EXPECT_EQ(t.c(0), 1);
        }
    }
}

TEST(LeibnizNormalize, ThirdOrder)
{
    const auto n = leibniz_normalize(expand_words(Side::density, 3, 3, 4, q(1, 2), q(0)));
    ASSERT_EQ(n.size(), 3u);
    EXPECT_EQ(n.at(NormalTerm{{}, 3}), (BetaPolynomial{1}));
    EXPECT_EQ(n.at(NormalTerm{{0}, 1}), (BetaPolynomial{-2, 3}));
    EXPECT_EQ(n.at(NormalTerm{{1}, 0}), (BetaPolynomial{0, 1}));
}

TEST(LeibnizNormalize, AgreesWithWordEvaluation)
{
    // Evaluate the normal form with concrete operators and compare with the raw words.
    for (unsigned seed = 0; seed < 4; ++seed) {
        auto rng = rng_for(500 + seed);
        const int m = 3 + static_cast<int>(seed % 2);
        const int k = 4;
        const auto g = random_metric(rng, m, 6);
        const Geometry<Rational> geo(g);
        const QuantParams p{m, q(1, 3), q(1, 2), k};
        const CoefficientTable table(p);
        const auto f = random_tensor(rng, m, 0, Variance::covariant, p.lambda, 6);
        const auto s = tracefree_project(random_tensor(rng, m, k, Variance::contravariant, p.delta(), 6), geo);
        for (int target = 0; target <= k; ++target) {
            const auto dplan = expand_words(Side::density, target, table);
            const auto splan = expand_words(Side::symbol, target, table);
            const Rational bd = -p.lambda * m;
            const Rational bs = m * table.gamma_at(2 * k - 2);
            auto eval = [](const BetaPolynomial &c, const Rational &b) {
                Rational v = 0, pw = 1;
                for (const auto &x : c) {
                    v += x * pw;
                    pw *= b;
                }
                return v;
            };
            std::optional<SymTensor<Rational>> dsum, ssum;
            for (const auto &[term, coeff] : leibniz_normalize(dplan)) {
                auto x = sym_derivative_power(f, term.trailing_d, geo);
                for (int i : term.t_derivatives) {
                    x = sym_product(sym_derivative_power(geo.r(), i, geo), x);
                }
                x = x * eval(coeff, bd);
                dsum = dsum ? *dsum + x : x;
            }
            for (const auto &[term, coeff] : leibniz_normalize(splan)) {
                auto x = divergence_power(s, term.trailing_d, geo);
                for (int i : term.t_derivatives) {
                    x = insert(sym_derivative_power(geo.r(), i, geo), x);
                }
                x = x * eval(coeff, bs);
                ssum = ssum ? *ssum + x : x;
            }
            EXPECT_EQ(*dsum, apply_plan_density(dplan, f, geo)) << "target " << target;
            EXPECT_EQ(*ssum, apply_plan_symbol(splan, s, geo)) << "target " << target;
        }
    }
}

TEST(ApplyPlan, SimpleCases)
{
    auto rng = rng_for(600);
    const auto g = random_metric(rng, 3, 4);
    const Geometry<Rational> geo(g);
    const auto f = random_tensor(rng, 3, 0, Variance::covariant, 0, 4);
    const auto s = tracefree_project(random_tensor(rng, 3, 2, Variance::contravariant, 0, 4), geo);
    // target 0 is the identity on both sides
    EXPECT_EQ(apply_plan_density(expand_words(Side::density, 0, 2, 3, 0, 0), f, geo), f);
    EXPECT_EQ(apply_plan_symbol(expand_words(Side::symbol, 0, 2, 3, 0, 0), s, geo), s);
    // lambda = 0 removes the curvature term at degree 2
    EXPECT_EQ(apply_plan_density(expand_words(Side::density, 2, 2, 3, 0, 0), f, geo), sym_derivative_power(f, 2, geo));
    // Div^2 S + m gamma_2 i(r) S
    const auto two = apply_plan_symbol(expand_words(Side::symbol, 2, 2, 3, 0, q(1, 3)), s, geo);
    EXPECT_EQ(two, divergence_power(s, 2, geo) + insert(geo.r(), s).truncate(2) * (3 * gamma(2, 3, q(1, 3))));
    // flat metric: only the pure derivative word survives
    const Geometry<Rational> flat(MetricJet<Rational>::flat(3, 4));
    EXPECT_EQ(apply_plan_density(expand_words(Side::density, 3, 3, 3, q(1, 2), 0), f, flat), sym_derivative_power(f, 3, flat));
    EXPECT_THROW(apply_plan_density(expand_words(Side::symbol, 1, 2, 3, 0, 0), f, geo), domain_error);
}

TEST(ApplyPlan, SymbolRowsStayTraceFree)
{
    for (unsigned seed = 0; seed < 4; ++seed) {
        auto rng = rng_for(700 + seed);
        const int m = 3 + static_cast<int>(seed % 2);
        const int k = 4;
        const auto g = random_metric(rng, m, 5);
        const Geometry<Rational> geo(g);
        const auto s = tracefree_project(random_tensor(rng, m, k, Variance::contravariant, q(1, 4), 5), geo);
        const CoefficientTable t(QuantParams{m, q(1, 4), q(1, 2), k});
        for (int l = 0; l <= k; ++l) {
            EXPECT_TRUE(is_trace_free(apply_plan_symbol(expand_words(Side::symbol, l, t), s, geo), geo)) << "l=" << l;
        }
    }
}

TEST(Render, BetaStyleProjectionLines)
{
    const auto d2 = expand_words(Side::density, 2, 2, 4, q(1, 2), 0);
    const auto d3 = expand_words(Side::density, 3, 3, 4, q(1, 2), 0);
    EXPECT_EQ(strip_spaces(render_words(expand_words(Side::density, 1, 2, 4, q(1, 2), 0), RenderStyle::beta)), "D");
    EXPECT_EQ(strip_spaces(render_words(d2, RenderStyle::beta)), "D²+βT");
    EXPECT_EQ(strip_spaces(render_words(d3, RenderStyle::beta)), "D³+βDT+2(β−1)TD");
    EXPECT_EQ(strip_spaces(render_normal_letters(d3, RenderStyle::beta)), "D³+(3β−2)TD+β(∂T)");
    // the symbol side has the same shape in its own beta
    const auto s3 = expand_words(Side::symbol, 3, 3, 4, q(1, 2), 0);
    EXPECT_EQ(render_words(s3, RenderStyle::beta), render_words(d3, RenderStyle::beta));
}

TEST(Render, SubstitutedForms)
{
    const auto d2 = expand_words(Side::density, 2, 2, 4, q(1, 2), 0);
    EXPECT_EQ(render_normal_letters(d2), "D² + (−λm)·T");
    const auto s3 = expand_words(Side::symbol, 3, 3, 4, q(1, 2), 0);
    EXPECT_EQ(render_operators(s3), "Div³ + (3mγ₄−2)·i(r)Div + mγ₄·i(∇_s r)");
    EXPECT_EQ(render_operators(expand_words(Side::symbol, 2, 2, 4, q(1, 2), 0)), "Div² + mγ₂·i(r)");
    EXPECT_EQ(render_operators(expand_words(Side::density, 0, 2, 4, q(1, 2), 0)), "");
    EXPECT_EQ(render_formula(0), "⟨S, f⟩");
    EXPECT_EQ(render_formula(2),
              "⟨S, (∇_s² + (−λm)·r)f⟩ + C_{2,1}⟨Div S, ∇_s f⟩ + C_{2,2}⟨(Div² + mγ₂·i(r))S, f⟩");
}

TEST(Golden, ExpansionTextMatchesFiles)
{
    for (int k : {2, 3}) {
        const auto expected = read_file(golden_path("expand_k" + std::to_string(k) + ".txt"));
        EXPECT_EQ(cli::expansion_text(k), expected) << "k = " << k;
    }
}

TEST(Golden, LatexFormulaMatchesDisplays)
{
    for (int k : {2, 3}) {
        const auto text = read_file(golden_path("expand_k" + std::to_string(k) + ".txt"));
        const auto display = read_file(golden_path("display_k" + std::to_string(k) + ".tex"));
        EXPECT_EQ(normalize_display(line_after(text, "LaTeX: ")), normalize_display(display)) << "k = " << k;
        EXPECT_EQ(normalize_display(render_formula_latex(k)), normalize_display(display)) << "k = " << k;
    }
    // the normalization does not hide real differences
    const auto display = read_file(golden_path("display_k3.tex"));
    auto tampered = render_formula_latex(3);
    tampered.replace(tampered.find("3m\\gamma"), 1, "2");
    EXPECT_NE(normalize_display(tampered), normalize_display(display));
}
