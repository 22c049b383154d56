#include <gtest/gtest.h>

#include <conformq/coefficients.hpp>

using namespace conformq;

namespace
{

Rational q(long n, long d = 1)
{
    return ratio(n, d);
}

// C_{k,l} rebuilt from eigenvalue differences: each denominator gamma is
// (alpha_{k-i,0} - alpha_{k,0}) / (2 m i), and each numerator factor is read off the
// gamma(h) eigenvalue -j (lambda m + j - 1) at j = k - i + 1.
Rational c_from_eigenvalues(int k, int l, int m, const Rational &lambda, const Rational &delta)
{
    Rational c(1);
    for (int i = 1; i <= l; ++i) {
        const int j = k - i + 1;
        const Rational eig = -j * (lambda * m + j - 1);
        const Rational num = -eig / (m * j);
        const Rational den = (alpha(k - i, m, delta) - alpha(k, m, delta)) / (2 * m * i);
        c *= num / den;
    }
    mpz_class b;
    mpz_bin_uiui(b.get_mpz_t(), static_cast<unsigned long>(k), static_cast<unsigned long>(l));
    return c * Rational(b);
}

const std::vector<Rational> &sample_weights()
{
    static const std::vector<Rational> w{q(0), q(1, 2), q(1, 3), q(-2, 5), q(3, 4), q(2), q(-1), q(7, 6)};
    return w;
}

} // namespace

TEST(Gamma, Examples)
{
    for (int m = 3; m <= 6; ++m) {
        for (const auto &d : sample_weights()) {
            EXPECT_EQ(gamma(0, m, d), 1 - d);
        }
    }
    EXPECT_EQ(gamma(4, 4, q(1, 2)), q(3, 2));
    for (int m = 3; m <= 5; ++m) {
        for (int n = 0; n < 8; ++n) {
            EXPECT_EQ(gamma(n, m, 0), q(m + n, m));
            EXPECT_GT(gamma(n, m, 0), 0);
        }
    }
}

TEST(Gamma, IsAffineInIndexAndWeight)
{
    for (int m = 3; m <= 5; ++m) {
        for (const auto &d : sample_weights()) {
            for (int n = 0; n < 6; ++n) {
                EXPECT_EQ(gamma(n + 1, m, d) - gamma(n, m, d), q(1, m));
                EXPECT_EQ(gamma(n, m, d + 1), gamma(n, m, d) - 1);
            }
        }
    }
}

TEST(Criticality, ZeroShiftIsNeverCritical)
{
    for (int m = 3; m <= 6; ++m) {
        EXPECT_FALSE(is_critical(m, 0, 6).critical());
    }
}

TEST(Criticality, HandDerivedSets)
{
    using Set = std::set<Rational>;
    // per degree: k = 2 in m = 4 hits gamma_2 and gamma_1
    Set deg2;
    for (const auto &h : critical_hits(4, q(5, 4), 2)) {
        deg2.insert(q(4 + h.gamma_index, 4));
    }
    for (const auto &h : critical_hits(4, q(3, 2), 2)) {
        deg2.insert(q(4 + h.gamma_index, 4));
    }
    EXPECT_EQ(deg2, (Set{q(5, 4), q(3, 2)}));
    EXPECT_TRUE(critical_hits(4, q(1), 2).empty());

    EXPECT_EQ(critical_deltas(3, 1), (Set{q(1)}));
    EXPECT_EQ(critical_deltas(4, 2), (Set{q(1), q(5, 4), q(3, 2)}));
    EXPECT_EQ(critical_deltas(3, 3), (Set{q(1), q(4, 3), q(5, 3), q(2), q(7, 3)}));
    EXPECT_EQ(critical_deltas(4, 3), (Set{q(1), q(5, 4), q(3, 2), q(7, 4), q(2)}));
    EXPECT_TRUE(critical_deltas(3, 0).empty());
}

TEST(Criticality, ReportNamesTheVanishingGamma)
{
    const auto r = is_critical(4, q(3, 2), 2);
    ASSERT_TRUE(r.critical());
    ASSERT_EQ(r.hits.size(), 1u);
    EXPECT_EQ(r.hits[0], (CriticalHit{2, 2, 2}));
    const auto r1 = is_critical(3, q(1), 1);
    ASSERT_EQ(r1.hits.size(), 1u);
    EXPECT_EQ(r1.hits[0], (CriticalHit{1, 2, 0}));
}

TEST(Criticality, ReportAgreesWithTheSetOnAGrid)
{
    for (int m = 3; m <= 4; ++m) {
        const auto set = critical_deltas(m, 3);
        for (int num = -12; num <= 40; ++num) {
            const Rational d = q(num, 12);
            EXPECT_EQ(is_critical(m, d, 3).critical(), set.count(d) == 1) << "m=" << m << " delta=" << d;
        }
    }
}

TEST(CoefficientC, Examples)
{
    for (int k = 0; k <= 4; ++k) {
        EXPECT_EQ(C(k, 0, 3, q(1, 2), q(5, 3)), 1);
    }
    for (int m = 3; m <= 5; ++m) {
        for (const auto &lambda : sample_weights()) {
            for (const auto &d : sample_weights()) {
                if (d == 1) {
                    continue;
                }
                EXPECT_EQ(C(1, 1, m, lambda, d), lambda / (1 - d));
            }
        }
    }
    EXPECT_EQ(C(2, 1, 4, 0, 0), q(1, 3));
    EXPECT_THROW(C(2, 3, 4, 0, 0), domain_error);
}

TEST(CoefficientC, MatchesEigenvalueConstruction)
{
    for (int m = 3; m <= 5; ++m) {
        for (int k = 0; k <= 4; ++k) {
            for (const auto &lambda : sample_weights()) {
                for (const auto &d : sample_weights()) {
                    if (is_critical(m, d, k).critical()) {
                        continue;
                    }
                    for (int l = 0; l <= k; ++l) {
                        EXPECT_EQ(C(k, l, m, lambda, d), c_from_eigenvalues(k, l, m, lambda, d));
                    }
                }
            }
        }
    }
}

TEST(CoefficientC, Recurrence)
{
    // C_{k,l+1} gamma_{2k-l-2} (l+1) = C_{k,l} (lambda + (k-l-1)/m) (k-l)
    for (int m = 3; m <= 4; ++m) {
        for (int k = 1; k <= 4; ++k) {
            for (const auto &lambda : sample_weights()) {
                const Rational d = q(1, 7);
                for (int l = 0; l < k; ++l) {
                    EXPECT_EQ(C(k, l + 1, m, lambda, d) * gamma(2 * k - l - 2, m, d) * (l + 1),
                              C(k, l, m, lambda, d) * (lambda + q(k - l - 1, m)) * (k - l));
                }
            }
        }
    }
}

TEST(CoefficientC, RaisesExactlyOnCriticalShifts)
{
    for (int m = 3; m <= 4; ++m) {
        for (int k = 1; k <= 3; ++k) {
            std::set<Rational> per_degree;
            for (int l = 2; l <= k + 1; ++l) {
                per_degree.insert(q(m + 2 * k - l, m));
            }
            for (int num = -8; num <= 40; ++num) {
                const Rational d = q(num, 12);
                bool raised = false;
                int index = -1;
                for (int l = 0; l <= k; ++l) {
                    try {
                        C(k, l, m, q(1, 3), d);
                    } catch (const criticality_error &e) {
                        raised = true;
                        index = e.gamma_index();
                    }
                }
                EXPECT_EQ(raised, per_degree.count(d) == 1) << "m=" << m << " k=" << k << " delta=" << d;
                if (raised) {
                    EXPECT_EQ(gamma(index, m, d), 0);
                }
            }
        }
    }
}

TEST(Alpha, Examples)
{
    for (int m = 3; m <= 5; ++m) {
        for (const auto &d : sample_weights()) {
            EXPECT_EQ(alpha(0, m, d), -m * m * d * (d - 1));
        }
        EXPECT_EQ(alpha(0, m, 0), 0);
    }
    EXPECT_EQ(alpha(1, 3, 1), 0);
}

TEST(Alpha, DifferencesAreGammas)
{
    for (int m = 3; m <= 5; ++m) {
        for (const auto &d : sample_weights()) {
            for (int k = 1; k <= 5; ++k) {
                for (int i = 1; i <= k; ++i) {
                    EXPECT_EQ(alpha(k - i, m, d) - alpha(k, m, d), 2 * m * i * gamma(2 * k - i - 1, m, d));
                }
            }
        }
    }
}

TEST(OperatorCoefficients, Examples)
{
    for (int m = 3; m <= 4; ++m) {
        for (const auto &lambda : sample_weights()) {
            EXPECT_EQ(t1_coeff(0, m, lambda), -lambda * m);
            EXPECT_EQ(t1_coeff(1, m, lambda), (-lambda * m - 1) * 2);
        }
        for (const auto &d : sample_weights()) {
            for (int k = 1; k <= 3; ++k) {
                EXPECT_EQ(t2_coeff(k, k, m, d), m * gamma(2 * k - 2, m, d));
            }
            EXPECT_EQ(t2_coeff(2, 3, m, d), (m * gamma(4, m, d) - 1) * 2);
        }
    }
    EXPECT_THROW(t2_coeff(4, 3, 4, 0), domain_error);
}

TEST(OperatorCoefficients, GammaOfHEigenvalue)
{
    EXPECT_EQ(gamma_h_eigenvalue(0, 4, q(1, 2)), 0);
    EXPECT_EQ(gamma_h_eigenvalue(2, 4, q(1, 2)), -2 * (2 + 1));
    EXPECT_EQ(gamma_h_eigenvalue(3, 3, q(1, 3)), -3 * (1 + 2));
}

TEST(CoefficientTable, CollectsEverything)
{
    const QuantParams p{4, q(1, 3), q(2, 3), 3};
    const CoefficientTable t(p);
    ASSERT_EQ(t.gammas().size(), 6u);
    for (int n = 0; n < 6; ++n) {
        EXPECT_EQ(t.gammas()[static_cast<std::size_t>(n)], gamma(n, 4, q(1, 3)));
    }
    for (int l = 0; l <= 3; ++l) {
        EXPECT_EQ(t.c(l), C(3, l, 4, q(1, 3), q(1, 3)));
    }
    EXPECT_EQ(t.alpha_k0(), alpha(3, 4, q(1, 3)));
    EXPECT_FALSE(t.criticality().critical());
    EXPECT_EQ(t.t1(0), t1_coeff(0, 4, q(1, 3)));
    EXPECT_EQ(t.t2(3), t2_coeff(3, 3, 4, q(1, 3)));
    EXPECT_NO_THROW(t.require_noncritical());
}

TEST(CoefficientTable, CriticalTableKeepsDefinedEntries)
{
    // gamma_1 = 0 only enters C_{2,2}
    const CoefficientTable t(QuantParams{4, 0, q(5, 4), 2});
    EXPECT_TRUE(t.criticality().critical());
    EXPECT_TRUE(t.c_entry(0).has_value());
    EXPECT_TRUE(t.c_entry(1).has_value());
    EXPECT_FALSE(t.c_entry(2).has_value());
    try {
        t.require_noncritical();
        FAIL() << "expected criticality_error";
    } catch (const criticality_error &e) {
        EXPECT_EQ(e.gamma_index(), 1);
        EXPECT_NE(std::string(e.what()).find("gamma_1"), std::string::npos);
    }
    EXPECT_THROW(t.c(2), criticality_error);
}

TEST(CoefficientTable, MutationsChangeOneValue)
{
    const QuantParams p2{3, q(1, 2), q(1, 2), 2};
    const QuantParams p3{3, q(1, 2), q(1, 2), 3};
    const CoefficientTable base2(p2), base3(p3);
    EXPECT_EQ(CoefficientTable(p2, Mutation::c22).c(2), base2.c(2) + 1);
    EXPECT_EQ(CoefficientTable(p2, Mutation::c22).c(1), base2.c(1));
    EXPECT_EQ(CoefficientTable(p3, Mutation::c31).c(1), base3.c(1) + 1);
    EXPECT_EQ(CoefficientTable(p3, Mutation::t1_j0).t1(0), base3.t1(0) + 1);
    EXPECT_EQ(CoefficientTable(p3, Mutation::t1_j0).t1(1), base3.t1(1));
    EXPECT_EQ(CoefficientTable(p3, Mutation::t2_jk).t2(3), base3.t2(3) + 1);
    EXPECT_EQ(CoefficientTable(p3, Mutation::t2_jk).t2(2), base3.t2(2));
    EXPECT_EQ(CoefficientTable(p3, Mutation::gamma_shift).gamma_at(2), gamma(3, 3, 0));
}

TEST(CoefficientTable, MutationIds)
{
    for (auto mu : {Mutation::none, Mutation::c22, Mutation::c31, Mutation::t1_j0, Mutation::t2_jk, Mutation::gamma_shift}) {
        EXPECT_EQ(parse_mutation(to_string(mu)), mu);
    }
    EXPECT_THROW(parse_mutation("C99"), config_error);
}
