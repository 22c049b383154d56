#ifndef CONFORMQ_METRIC_HPP
#define CONFORMQ_METRIC_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <conformq/errors.hpp>
#include <conformq/jet.hpp>
#include <conformq/linalg.hpp>
#include <conformq/scalar.hpp>
#include <conformq/tensor.hpp>

namespace conformq
{

struct Signature {
    int positive = 0;
    int negative = 0;

    friend bool operator==(const Signature &, const Signature &) = default;
};

// Pseudo-Riemannian metric g_ab as a symmetric covariant 2-tensor of jets, with a
// nondegenerate value at the base point. Dimension is at least 3.
template <typename S>
class MetricJet
{
public:
    explicit MetricJet(SymTensor<S> g) : m_g(std::move(g))
    {
        if (m_g.rank() != 2 || m_g.variance() != Variance::covariant) {
            throw dimension_error("MetricJet: expected a covariant symmetric 2-tensor");
        }
        if (m_g.weight() != 0) {
            throw dimension_error("MetricJet: metric components must have weight 0");
        }
        if (m_g.dim() < 3) {
            throw dimension_error("MetricJet: dimension must be at least 3");
        }
        if (m_g.order() < 0) {
            throw order_error("MetricJet: empty jet");
        }
        const int m = m_g.dim();
        std::vector<std::vector<S>> v(static_cast<std::size_t>(m), std::vector<S>(static_cast<std::size_t>(m)));
        for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
                v[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = m_g.at({a, b}).value();
            }
        }
        const auto [p, q] = inertia(v);
        if (p + q != m) {
            throw domain_error("MetricJet: degenerate value at the base point");
        }
        m_sig = {p, q};
    }

    MetricJet(SymTensor<S> g, Signature expected) : MetricJet(std::move(g))
    {
        if (!(m_sig == expected)) {
            throw domain_error("MetricJet: signature (" + std::to_string(m_sig.positive) + ","
                               + std::to_string(m_sig.negative) + ") does not match the declared ("
                               + std::to_string(expected.positive) + "," + std::to_string(expected.negative) + ")");
        }
    }

    // Diagonal constant metric diag(+1, ..., +1, -1, ..., -1).
    static MetricJet flat(int dim, int order, Signature sig = {})
    {
        if (sig.positive + sig.negative == 0) {
            sig.positive = dim;
        }
        SymTensor<S> g(dim, 2, Variance::covariant, 0, order);
        std::vector<Jet<S>> c = g.comps();
        for (int a = 0; a < dim; ++a) {
            const S s = a < sig.positive ? S(1) : S(-1);
            c[g.indices().index_of({a, a})] = Jet<S>::constant(dim, order, s);
        }
        return MetricJet(SymTensor<S>(dim, 2, Variance::covariant, 0, std::move(c)));
    }

    int dim() const noexcept
    {
        return m_g.dim();
    }
    int order() const
    {
        return m_g.order();
    }
    Signature signature() const noexcept
    {
        return m_sig;
    }
    const SymTensor<S> &tensor() const noexcept
    {
        return m_g;
    }
    const Jet<S> &operator()(int a, int b) const
    {
        return m_g.at({a, b});
    }

private:
    SymTensor<S> m_g;
    Signature m_sig;
};

// Levi-Civita connection coefficients Gamma^a_bc of a metric jet.
template <typename S>
struct Christoffels {
    int dim = 0;
    std::vector<Jet<S>> gamma; // [a][b][c]
    std::vector<Jet<S>> trace; // Gamma^c_ci = d_i log sqrt|det g|

    const Jet<S> &operator()(int a, int b, int c) const
    {
        return gamma[(static_cast<std::size_t>(a) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(b))
                         * static_cast<std::size_t>(dim)
                     + static_cast<std::size_t>(c)];
    }
};

template <typename S>
SymTensor<S> inverse_metric(const MetricJet<S> &g)
{
    const int m = g.dim();
    const int n = g.order();
    JetMatrix<S> a(static_cast<std::size_t>(m), static_cast<std::size_t>(m), Jet<S>(m, n));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = g(i, j);
        }
    }
    const auto inv = jet_matrix_inverse(a);
    SymTensor<S> r(m, 2, Variance::contravariant, 0, n);
    std::vector<Jet<S>> c;
    const auto &idx = r.indices();
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto &t = idx.tuple(k);
        c.push_back(inv(static_cast<std::size_t>(t[0]), static_cast<std::size_t>(t[1])));
    }
    return SymTensor<S>(m, 2, Variance::contravariant, 0, std::move(c));
}

// Gamma^a_bc = 1/2 g^ad (d_b g_dc + d_c g_db - d_d g_bc); order drops by one.
template <typename S>
Christoffels<S> christoffels(const MetricJet<S> &g, const SymTensor<S> &ginv)
{
    if (g.order() < 1) {
        throw order_error("christoffels: metric jet order must be at least 1");
    }
    const int m = g.dim();
    const auto mm = static_cast<std::size_t>(m);
    // dg[d][b][c] = d_d g_bc
    std::vector<Jet<S>> dg(mm * mm * mm);
    for (int d = 0; d < m; ++d) {
        for (int b = 0; b < m; ++b) {
            for (int c = b; c < m; ++c) {
                auto j = jet_partial(g(b, c), d);
                dg[(static_cast<std::size_t>(d) * mm + static_cast<std::size_t>(c)) * mm + static_cast<std::size_t>(b)] = j;
                dg[(static_cast<std::size_t>(d) * mm + static_cast<std::size_t>(b)) * mm + static_cast<std::size_t>(c)]
                    = std::move(j);
            }
        }
    }
    auto at = [&](int d, int b, int c) -> const Jet<S> & {
        return dg[(static_cast<std::size_t>(d) * mm + static_cast<std::size_t>(b)) * mm + static_cast<std::size_t>(c)];
    };
    const S half = scalar_traits<S>::from_rational(ratio(1, 2));
    Christoffels<S> out;
    out.dim = m;
    out.gamma.assign(mm * mm * mm, Jet<S>(m, g.order() - 1));
    for (int b = 0; b < m; ++b) {
        for (int c = b; c < m; ++c) {
            std::vector<Jet<S>> first;
            for (int d = 0; d < m; ++d) {
                first.push_back((at(b, d, c) + at(c, d, b) - at(d, b, c)) * half);
            }
            for (int a = 0; a < m; ++a) {
                Jet<S> s(m, g.order() - 1);
                for (int d = 0; d < m; ++d) {
                    s += ginv.at({a, d}) * first[static_cast<std::size_t>(d)];
                }
                out.gamma[(static_cast<std::size_t>(a) * mm + static_cast<std::size_t>(c)) * mm + static_cast<std::size_t>(b)] = s;
                out.gamma[(static_cast<std::size_t>(a) * mm + static_cast<std::size_t>(b)) * mm + static_cast<std::size_t>(c)]
                    = std::move(s);
            }
        }
    }
    for (int i = 0; i < m; ++i) {
        Jet<S> t(m, g.order() - 1);
        for (int c = 0; c < m; ++c) {
            t += out(c, c, i);
        }
        out.trace.push_back(std::move(t));
    }
    return out;
}

template <typename S>
Christoffels<S> christoffels(const MetricJet<S> &g)
{
    return christoffels(g, inverse_metric(g));
}

// Curvature quantities of the Levi-Civita connection.
//
// Sign convention: with R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db
// - Gamma^a_de Gamma^e_cb, the Ricci tensor is the contraction Ric_bc = R^a_bca on the
// last slot. The round sphere has negative Ricci curvature in this convention; it is the
// one for which r = Ric/(2-m) agrees with the Schouten tensor up to multiples of g.
template <typename S>
struct CurvatureData {
    Christoffels<S> christoffel;
    SymTensor<S> ricci;
    Jet<S> scalar;
    SymTensor<S> r;           // Ric / (2 - m)
    SymTensor<S> deformation; // -1/(m-2) (Ric - g R / (2(m-1)))
};

template <typename S>
CurvatureData<S> curvature(const MetricJet<S> &g, const SymTensor<S> &ginv, Christoffels<S> chr)
{
    if (g.order() < 2) {
        throw order_error("curvature: metric jet order must be at least 2");
    }
    const int m = g.dim();
    const int n = g.order() - 2;
    SymTensor<S> ric(m, 2, Variance::covariant, 0, n);
    std::vector<Jet<S>> comps;
    const auto &idx = ric.indices();
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const int b = idx.tuple(k)[0];
        const int c = idx.tuple(k)[1];
        // standard contraction R^a_bac, negated below
        Jet<S> s = -jet_partial(chr.trace[static_cast<std::size_t>(b)], c);
        for (int a = 0; a < m; ++a) {
            s += jet_partial(chr(a, c, b), a);
        }
        for (int e = 0; e < m; ++e) {
            s += chr.trace[static_cast<std::size_t>(e)] * chr(e, c, b);
            for (int a = 0; a < m; ++a) {
                s -= chr(a, c, e) * chr(e, a, b);
            }
        }
        comps.push_back(-s);
    }
    ric = SymTensor<S>(m, 2, Variance::covariant, 0, std::move(comps));

    Jet<S> scal(m, n);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        scal += ginv.comp(k) * ric.comp(k) * S(static_cast<long>(idx.multiplicity(k)));
    }

    const S to_r = scalar_traits<S>::from_rational(ratio(1, 2 - m));
    const S trace_coeff = scalar_traits<S>::from_rational(ratio(1, 2 * (m - 1)));
    const S def_coeff = scalar_traits<S>::from_rational(ratio(-1, m - 2));
    SymTensor<S> r = ric * to_r;
    SymTensor<S> def = (ric - (scal * trace_coeff) * g.tensor()).truncate(n) * def_coeff;
    return {std::move(chr), std::move(ric), std::move(scal), std::move(r), std::move(def)};
}

template <typename S>
CurvatureData<S> curvature(const MetricJet<S> &g)
{
    auto ginv = inverse_metric(g);
    return curvature(g, ginv, christoffels(g, ginv));
}

// Everything the calculus layer needs about one metric, computed once.
template <typename S>
class Geometry
{
public:
    explicit Geometry(MetricJet<S> g) : m_g(std::move(g)), m_ginv(inverse_metric(m_g))
    {
        if (m_g.order() >= 1) {
            m_chr = christoffels(m_g, m_ginv);
        }
        if (m_g.order() >= 2) {
            m_curv = curvature(m_g, m_ginv, *m_chr);
        }
    }

    int dim() const noexcept
    {
        return m_g.dim();
    }
    int order() const
    {
        return m_g.order();
    }
    const MetricJet<S> &metric() const noexcept
    {
        return m_g;
    }
    const SymTensor<S> &inverse() const noexcept
    {
        return m_ginv;
    }
    const Christoffels<S> &christoffel() const
    {
        if (!m_chr) {
            throw order_error("Geometry: metric jet order too low for Christoffel symbols");
        }
        return *m_chr;
    }
    bool has_curvature() const noexcept
    {
        return m_curv.has_value();
    }
    const CurvatureData<S> &curvature_data() const
    {
        if (!m_curv) {
            throw order_error("Geometry: metric jet order too low for curvature");
        }
        return *m_curv;
    }
    const SymTensor<S> &r() const
    {
        return curvature_data().r;
    }

private:
    MetricJet<S> m_g;
    SymTensor<S> m_ginv;
    std::optional<Christoffels<S>> m_chr;
    std::optional<CurvatureData<S>> m_curv;
};

} // namespace conformq

#endif
