#ifndef CONFORMQ_COEFFICIENTS_HPP
#define CONFORMQ_COEFFICIENTS_HPP

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <conformq/errors.hpp>
#include <conformq/scalar.hpp>

namespace conformq
{

// Dimension, density weights and symbol degree of one quantization problem.
// The symbol weight is the shift delta = mu - lambda.
struct QuantParams {
    int m = 3;
    Rational lambda = 0;
    Rational mu = 0;
    int k = 0;

    Rational delta() const
    {
        return mu - lambda;
    }
};

// gamma_n = (m + n - m delta) / m.
inline Rational gamma(int n, int m, const Rational &delta)
{
    return Rational(m + n - m * delta) / m;
}

// One vanishing gamma_{2k-l} with 2 <= l <= k+1.
struct CriticalHit {
    int k;
    int l;
    int gamma_index;

    friend bool operator==(const CriticalHit &, const CriticalHit &) = default;
};

struct CriticalityReport {
    std::vector<CriticalHit> hits;

    bool critical() const noexcept
    {
        return !hits.empty();
    }
};

// Hits for symbols of degree exactly k.
inline std::vector<CriticalHit> critical_hits(int m, const Rational &delta, int k)
{
    std::vector<CriticalHit> out;
    for (int l = 2; l <= k + 1; ++l) {
        if (sgn(gamma(2 * k - l, m, delta)) == 0) {
            out.push_back({k, l, 2 * k - l});
        }
    }
    return out;
}

// All hits with k <= k_max.
inline CriticalityReport is_critical(int m, const Rational &delta, int k_max)
{
    CriticalityReport r;
    for (int k = 0; k <= k_max; ++k) {
        auto h = critical_hits(m, delta, k);
        r.hits.insert(r.hits.end(), h.begin(), h.end());
    }
    return r;
}

// The finite set of critical shift values for degrees up to k_max: delta = (m + n)/m for
// every gamma index n = 2k - l that can occur.
inline std::set<Rational> critical_deltas(int m, int k_max)
{
    std::set<Rational> out;
    for (int k = 0; k <= k_max; ++k) {
        for (int l = 2; l <= k + 1; ++l) {
            out.insert(ratio(m + 2 * k - l, m));
        }
    }
    return out;
}

namespace detail
{

inline Rational binom(int n, int k)
{
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return Rational(r);
}

// C_{k,l} with an injectable gamma (used by mutation testing).
template <typename GammaFn>
Rational c_coefficient(int k, int l, int m, const Rational &lambda, GammaFn &&gam)
{
    if (l < 0 || l > k) {
        throw domain_error("C(k, l): requires 0 <= l <= k");
    }
    if (l == 0) {
        return Rational(1);
    }
    Rational num(1), den(1);
    for (int i = 1; i <= l; ++i) {
        num *= lambda + ratio(k - i, m);
    }
    for (int n = 2 * k - l - 1; n <= 2 * k - 2; ++n) {
        const Rational g = gam(n);
        if (sgn(g) == 0) {
            throw criticality_error("C(" + std::to_string(k) + "," + std::to_string(l) + "): gamma_" + std::to_string(n)
                                        + " = 0 (critical delta)",
                                    n);
        }
        den *= g;
    }
    return num / den * binom(k, l);
}

} // namespace detail

// C_{k,l} = (lambda + (k-1)/m) ... (lambda + (k-l)/m) / (gamma_{2k-2} ... gamma_{2k-l-1}) * binom(k, l),
// C_{k,0} = 1. Throws criticality_error naming the vanishing gamma.
inline Rational C(int k, int l, int m, const Rational &lambda, const Rational &delta)
{
    return detail::c_coefficient(k, l, m, lambda, [&](int n) { return gamma(n, m, delta); });
}

// alpha_{k,0} = 2k(1 - k + m(delta - 1)) - m^2 delta (delta - 1).
inline Rational alpha(int k, int m, const Rational &delta)
{
    return 2 * k * (1 - k + m * (delta - 1)) - m * m * delta * (delta - 1);
}

// Scalar factor of T1 acting on a covariant j-tensor: (-lambda m - j)(j + 1).
inline Rational t1_coeff(int j, int m, const Rational &lambda)
{
    return (-lambda * m - j) * (j + 1);
}

// Scalar factor of T2 acting on a trace-free symbol of degree j (top degree k):
// (m gamma_{2k-2} - k + j)(k - j + 1).
inline Rational t2_coeff(int j, int k, int m, const Rational &delta)
{
    if (j < 0 || j > k) {
        throw domain_error("t2_coeff: requires 0 <= j <= k");
    }
    return (m * gamma(2 * k - 2, m, delta) - k + j) * (k - j + 1);
}

// Eigenvalue of gamma(h) on trace-free degree-k symbols, in units of i(h):
// gamma(h) S = -k (lambda m + k - 1) i(h) S. Recorded for reference only.
inline Rational gamma_h_eigenvalue(int k, int m, const Rational &lambda)
{
    return -k * (lambda * m + k - 1);
}

// Deliberate single-coefficient corruptions, used to show the invariance checks are not
// vacuous.
enum class Mutation { none, c22, c31, t1_j0, t2_jk, gamma_shift };

inline const char *to_string(Mutation mu)
{
    switch (mu) {
    case Mutation::none:
        return "none";
    case Mutation::c22:
        return "C22";
    case Mutation::c31:
        return "C31";
    case Mutation::t1_j0:
        return "t1_0";
    case Mutation::t2_jk:
        return "t2_k";
    case Mutation::gamma_shift:
        return "gamma_shift";
    }
    return "?";
}

inline Mutation parse_mutation(const std::string &s)
{
    for (auto mu : {Mutation::none, Mutation::c22, Mutation::c31, Mutation::t1_j0, Mutation::t2_jk,
                    Mutation::gamma_shift}) {
        if (s == to_string(mu)) {
            return mu;
        }
    }
    throw config_error("unknown mutation id '" + s + "' (expected none, C22, C31, t1_0, t2_k or gamma_shift)");
}

// All scalars needed to quantize one (m, lambda, delta, k). Entries that would divide by a
// vanishing gamma are left empty and listed in `criticality`.
class CoefficientTable
{
public:
    explicit CoefficientTable(const QuantParams &p, Mutation mutation = Mutation::none)
        : m_params(p), m_mutation(mutation)
    {
        if (p.m < 3) {
            throw dimension_error("CoefficientTable: dimension must be at least 3");
        }
        if (p.k < 0) {
            throw domain_error("CoefficientTable: negative symbol degree");
        }
        for (int n = 0; n <= 2 * p.k - 1; ++n) {
            m_gamma.push_back(gamma_at(n));
        }
        for (int l = 0; l <= p.k; ++l) {
            try {
                Rational c = detail::c_coefficient(p.k, l, p.m, p.lambda, [this](int n) { return gamma_at(n); });
                if ((mutation == Mutation::c22 && p.k == 2 && l == 2) || (mutation == Mutation::c31 && p.k == 3 && l == 1)) {
                    c += 1;
                }
                m_c.emplace_back(std::move(c));
            } catch (const criticality_error &) {
                m_c.emplace_back(std::nullopt);
            }
        }
        m_alpha = alpha(p.k, p.m, p.delta());
        for (int l = 2; l <= p.k + 1; ++l) {
            if (sgn(gamma_at(2 * p.k - l)) == 0) {
                m_report.hits.push_back({p.k, l, 2 * p.k - l});
            }
        }
    }

    const QuantParams &params() const noexcept
    {
        return m_params;
    }
    Mutation mutation() const noexcept
    {
        return m_mutation;
    }
    // gamma_n as used by this table (shifted under the gamma_shift mutation).
    Rational gamma_at(int n) const
    {
        return gamma(m_mutation == Mutation::gamma_shift ? n + 1 : n, m_params.m, m_params.delta());
    }
    const std::vector<Rational> &gammas() const noexcept
    {
        return m_gamma;
    }
    const std::optional<Rational> &c_entry(int l) const
    {
        return m_c.at(static_cast<std::size_t>(l));
    }
    // C_{k,l}; throws criticality_error when it does not exist.
    const Rational &c(int l) const
    {
        const auto &e = c_entry(l);
        if (!e) {
            require_noncritical();
        }
        return *e;
    }
    const Rational &alpha_k0() const noexcept
    {
        return m_alpha;
    }
    const CriticalityReport &criticality() const noexcept
    {
        return m_report;
    }
    void require_noncritical() const
    {
        if (m_report.critical()) {
            const auto &h = m_report.hits.front();
            throw criticality_error("delta = " + m_params.delta().get_str() + " is critical for k = "
                                        + std::to_string(m_params.k) + ": gamma_" + std::to_string(h.gamma_index)
                                        + " = 0",
                                    h.gamma_index);
        }
    }
    Rational t1(int j) const
    {
        Rational v = t1_coeff(j, m_params.m, m_params.lambda);
        if (m_mutation == Mutation::t1_j0 && j == 0) {
            v += 1;
        }
        return v;
    }
    Rational t2(int j) const
    {
        const int k = m_params.k;
        Rational v = (m_params.m * gamma_at(2 * k - 2) - k + j) * (k - j + 1);
        if (m_mutation == Mutation::t2_jk && j == k) {
            v += 1;
        }
        return v;
    }

private:
    QuantParams m_params;
    Mutation m_mutation;
    std::vector<Rational> m_gamma;
    std::vector<std::optional<Rational>> m_c;
    Rational m_alpha;
    CriticalityReport m_report;
};

} // namespace conformq

#endif
