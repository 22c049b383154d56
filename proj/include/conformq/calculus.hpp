#ifndef CONFORMQ_CALCULUS_HPP
#define CONFORMQ_CALCULUS_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include <conformq/errors.hpp>
#include <conformq/jet.hpp>
#include <conformq/linalg.hpp>
#include <conformq/metric.hpp>
#include <conformq/scalar.hpp>
#include <conformq/tensor.hpp>

// Chart-level calculus on symmetric weighted tensors.
//
// Conventions:
//  * A density of weight w has covariant derivative d_i f - w Gamma^c_ci f, so the metric
//    volume sqrt|det g| (weight 1) is parallel.
//  * Symmetrization (in sym_derivative and sym_product) is the averaging projector.
//  * insert(h, S) and pair(A, B) contract indices without combinatorial factors, and
//    divergence contracts the derivative with one slot.
// With these choices the Leibniz rules hold with unit coefficients:
//   D(A v B) = DA v B + A v DB,     Div(i(h) S) = i(D h) S + i(h) Div S.

namespace conformq
{

namespace detail
{

template <typename S>
void require_dims(const SymTensor<S> &t, const Geometry<S> &geo, const char *what)
{
    if (t.dim() != geo.dim()) {
        throw dimension_error(std::string(what) + ": tensor and metric dimensions differ");
    }
}

inline Rational binomial(long n, long k)
{
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return Rational(r);
}

// nabla_i T_J for symmetric T (J an ordered index tuple of length rank).
template <typename S>
Jet<S> covariant_component(const SymTensor<S> &t, const Christoffels<S> &chr, int i, std::vector<int> j)
{
    const int m = t.dim();
    Jet<S> out = jet_partial(t.at(j), i);
    const bool up = t.rank() > 0 && t.variance() == Variance::contravariant;
    for (std::size_t s = 0; s < j.size(); ++s) {
        const int orig = j[s];
        Jet<S> acc(m, out.order());
        for (int c = 0; c < m; ++c) {
            j[s] = c;
            const Jet<S> &g = up ? chr(orig, i, c) : chr(c, i, orig);
            if (!g.is_zero()) {
                acc += g * t.at(j);
            }
        }
        j[s] = orig;
        if (up) {
            out += acc;
        } else {
            out -= acc;
        }
    }
    if (sgn(t.weight()) != 0) {
        out -= chr.trace[static_cast<std::size_t>(i)] * t.at(j) * scalar_traits<S>::from_rational(t.weight());
    }
    return out;
}

} // namespace detail

// Full covariant derivative. The new covariant slot comes first: result(i, J) = nabla_i T_J.
// Order: min(order(T), order(g)) - 1.
template <typename S>
Tensor<S> covariant_derivative(const SymTensor<S> &t, const Geometry<S> &geo)
{
    detail::require_dims(t, geo, "covariant_derivative");
    if (t.order() < 1) {
        throw order_error("covariant_derivative: tensor jet order must be at least 1");
    }
    const auto &chr = geo.christoffel();
    const int m = t.dim();
    std::vector<Variance> slots{Variance::covariant};
    for (int s = 0; s < t.rank(); ++s) {
        slots.push_back(t.variance());
    }
    Tensor<S> out(m, slots, t.weight(), std::min(t.order(), geo.order()) - 1);
    for (std::size_t c = 0; c < out.comps().size(); ++c) {
        auto tup = out.tuple(c);
        std::vector<int> j(tup.begin() + 1, tup.end());
        out.at(tup) = detail::covariant_component(t, chr, tup[0], std::move(j));
    }
    return out;
}

// Symmetrized covariant derivative of a covariant symmetric tensor:
// (D T)_{i0..ik} = average over slots of nabla_{i_s} T_{rest}.
template <typename S>
SymTensor<S> sym_derivative(const SymTensor<S> &t, const Geometry<S> &geo)
{
    detail::require_dims(t, geo, "sym_derivative");
    if (!t.is_covariant()) {
        throw dimension_error("sym_derivative: tensor must be covariant");
    }
    if (t.order() < 1) {
        throw order_error("sym_derivative: tensor jet order must be at least 1");
    }
    const auto &chr = geo.christoffel();
    const int m = t.dim();
    const int k = t.rank();
    const auto &src = t.indices();
    // cache[i * |src| + J] = nabla_i T_J
    std::vector<Jet<S>> cache(static_cast<std::size_t>(m) * src.size());
    for (int i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < src.size(); ++j) {
            cache[static_cast<std::size_t>(i) * src.size() + j] = detail::covariant_component(t, chr, i, src.tuple(j));
        }
    }
    const auto &dst = SymIndexSet::get(m, k + 1);
    const int n = std::min(t.order(), geo.order()) - 1;
    const S inv = scalar_traits<S>::from_rational(ratio(1, k + 1));
    std::vector<Jet<S>> comps;
    comps.reserve(dst.size());
    for (std::size_t K = 0; K < dst.size(); ++K) {
        const auto &tup = dst.tuple(K);
        const auto &cnt = dst.counts(K);
        Jet<S> acc(m, n);
        for (int c = 0; c < m; ++c) {
            if (cnt[static_cast<std::size_t>(c)] == 0) {
                continue;
            }
            std::vector<int> rest;
            bool removed = false;
            for (int x : tup) {
                if (x == c && !removed) {
                    removed = true;
                    continue;
                }
                rest.push_back(x);
            }
            const auto &term = cache[static_cast<std::size_t>(c) * src.size() + src.index_of(rest)];
            acc += term * S(cnt[static_cast<std::size_t>(c)]);
        }
        comps.push_back(acc * inv);
    }
    return SymTensor<S>(m, k + 1, Variance::covariant, t.weight(), std::move(comps));
}

template <typename S>
SymTensor<S> sym_derivative_power(SymTensor<S> t, int q, const Geometry<S> &geo)
{
    for (int i = 0; i < q; ++i) {
        t = sym_derivative(t, geo);
    }
    return t;
}

// (Div S)^{a2..ak} = nabla_b S^{b a2..ak}.
template <typename S>
SymTensor<S> divergence(const SymTensor<S> &s, const Geometry<S> &geo)
{
    detail::require_dims(s, geo, "divergence");
    if (s.rank() < 1 || s.variance() != Variance::contravariant) {
        throw dimension_error("divergence: needs a contravariant tensor of rank >= 1");
    }
    if (s.order() < 1) {
        throw order_error("divergence: tensor jet order must be at least 1");
    }
    const auto &chr = geo.christoffel();
    const int m = s.dim();
    const auto &dst = SymIndexSet::get(m, s.rank() - 1);
    const int n = std::min(s.order(), geo.order()) - 1;
    std::vector<Jet<S>> comps;
    for (std::size_t J = 0; J < dst.size(); ++J) {
        Jet<S> acc(m, n);
        std::vector<int> full;
        full.push_back(0);
        const auto &rest = dst.tuple(J);
        full.insert(full.end(), rest.begin(), rest.end());
        for (int b = 0; b < m; ++b) {
            full[0] = b;
            acc += detail::covariant_component(s, chr, b, full);
        }
        comps.push_back(std::move(acc));
    }
    return SymTensor<S>(m, s.rank() - 1, Variance::contravariant, s.weight(), std::move(comps));
}

template <typename S>
SymTensor<S> divergence_power(SymTensor<S> s, int q, const Geometry<S> &geo)
{
    for (int i = 0; i < q; ++i) {
        s = divergence(s, geo);
    }
    return s;
}

// i(h)S: contracts every slot of the covariant h with slots of the contravariant S.
// (i(h)S)^{J} = h_I S^{I J}, summed over ordered I.
template <typename S>
SymTensor<S> insert(const SymTensor<S> &h, const SymTensor<S> &s)
{
    if (h.dim() != s.dim()) {
        throw dimension_error("insert: dimension mismatch");
    }
    if (!h.is_covariant() || !s.is_contravariant()) {
        throw dimension_error("insert: expects a covariant h and a contravariant symbol");
    }
    if (s.rank() < h.rank()) {
        throw dimension_error("insert: symbol degree is smaller than the inserted tensor rank");
    }
    const int m = s.dim();
    const auto &hi = h.indices();
    const auto &dst = SymIndexSet::get(m, s.rank() - h.rank());
    const int n = std::min(h.order(), s.order());
    std::vector<Jet<S>> comps;
    for (std::size_t J = 0; J < dst.size(); ++J) {
        Jet<S> acc(m, n);
        for (std::size_t I = 0; I < hi.size(); ++I) {
            if (h.comp(I).is_zero()) {
                continue;
            }
            std::vector<int> full = hi.tuple(I);
            const auto &rest = dst.tuple(J);
            full.insert(full.end(), rest.begin(), rest.end());
            acc += h.comp(I) * s.at(full) * S(static_cast<long>(hi.multiplicity(I)));
        }
        comps.push_back(std::move(acc));
    }
    const Variance var = dst.rank() == 0 ? Variance::covariant : Variance::contravariant;
    return SymTensor<S>(m, dst.rank(), var, h.weight() + s.weight(), std::move(comps));
}

// Symmetric product A v B = Sym(A (x) B). Both operands share a variance, or one is a
// scalar. Weights add.
template <typename S>
SymTensor<S> sym_product(const SymTensor<S> &a, const SymTensor<S> &b)
{
    if (a.dim() != b.dim()) {
        throw dimension_error("sym_product: dimension mismatch");
    }
    if (a.rank() > 0 && b.rank() > 0 && a.variance() != b.variance()) {
        throw dimension_error("sym_product: mixed variances");
    }
    const int m = a.dim();
    const int p = a.rank();
    const int q = b.rank();
    const Variance var = p > 0 ? a.variance() : b.variance();
    const auto &ai = a.indices();
    const auto &dst = SymIndexSet::get(m, p + q);
    const int n = std::min(a.order(), b.order());
    const Rational norm = 1 / detail::binomial(p + q, p);
    std::vector<Jet<S>> comps;
    for (std::size_t K = 0; K < dst.size(); ++K) {
        const auto &kc = dst.counts(K);
        Jet<S> acc(m, n);
        for (std::size_t I = 0; I < ai.size(); ++I) {
            const auto &ic = ai.counts(I);
            bool fits = true;
            Rational w(1);
            for (int c = 0; c < m && fits; ++c) {
                if (ic[static_cast<std::size_t>(c)] > kc[static_cast<std::size_t>(c)]) {
                    fits = false;
                } else {
                    w *= detail::binomial(kc[static_cast<std::size_t>(c)], ic[static_cast<std::size_t>(c)]);
                }
            }
            if (!fits || a.comp(I).is_zero()) {
                continue;
            }
            std::vector<int> rest;
            for (int c = 0; c < m; ++c) {
                for (int r = 0; r < kc[static_cast<std::size_t>(c)] - ic[static_cast<std::size_t>(c)]; ++r) {
                    rest.push_back(c);
                }
            }
            acc += a.comp(I) * b.at(rest) * scalar_traits<S>::from_rational(w * norm);
        }
        comps.push_back(std::move(acc));
    }
    return SymTensor<S>(m, p + q, var, a.weight() + b.weight(), std::move(comps));
}

// <A, B> = A^{a1..al} B_{a1..al}, a density of weight w_A + w_B.
template <typename S>
SymTensor<S> pair(const SymTensor<S> &a, const SymTensor<S> &b)
{
    if (a.dim() != b.dim()) {
        throw dimension_error("pair: dimension mismatch");
    }
    if (a.rank() != b.rank()) {
        throw dimension_error("pair: valence mismatch");
    }
    if (!a.is_contravariant() || !b.is_covariant()) {
        throw dimension_error("pair: expects a contravariant and a covariant tensor");
    }
    const auto &idx = a.indices();
    Jet<S> acc(a.dim(), std::min(a.order(), b.order()));
    for (std::size_t I = 0; I < idx.size(); ++I) {
        if (a.comp(I).is_zero() || b.comp(I).is_zero()) {
            continue;
        }
        acc += a.comp(I) * b.comp(I) * S(static_cast<long>(idx.multiplicity(I)));
    }
    return SymTensor<S>::scalar(std::move(acc), a.weight() + b.weight());
}

// i(g)S.
template <typename S>
SymTensor<S> metric_trace(const SymTensor<S> &s, const Geometry<S> &geo)
{
    return insert(geo.metric().tensor(), s);
}

template <typename S>
bool is_trace_free(const SymTensor<S> &s, const Geometry<S> &geo, double tol = 1e-10)
{
    if (s.rank() < 2) {
        return true;
    }
    const auto tr = metric_trace(s, geo);
    if constexpr (scalar_traits<S>::exact) {
        return tr.is_zero();
    } else {
        double scale = 1;
        for (const auto &c : s.comps()) {
            scale = std::max(scale, max_abs(c));
        }
        for (const auto &c : tr.comps()) {
            if (max_abs(c) > tol * scale) {
                return false;
            }
        }
        return true;
    }
}

// Trace-free part of a contravariant symmetric tensor: S - g^# v X, with X solving
// i(g)(g^# v X) = i(g)S as jets. The linear system over the jet algebra is solved directly,
// which works uniformly in k and in the signature.
template <typename S>
SymTensor<S> tracefree_project(const SymTensor<S> &s, const Geometry<S> &geo)
{
    detail::require_dims(s, geo, "tracefree_project");
    if (s.rank() < 2) {
        return s;
    }
    if (s.variance() != Variance::contravariant) {
        throw dimension_error("tracefree_project: expects a contravariant tensor");
    }
    const int m = s.dim();
    const int n = std::min(s.order(), geo.order());
    const auto &xi = SymIndexSet::get(m, s.rank() - 2);
    const auto &ginv = geo.inverse();
    const std::size_t dim_x = xi.size();
    JetMatrix<S> a(dim_x, dim_x, Jet<S>(m, n));
    for (std::size_t J = 0; J < dim_x; ++J) {
        std::vector<Jet<S>> unit(dim_x, Jet<S>(m, n));
        unit[J] = Jet<S>::constant(m, n, S(1));
        const SymTensor<S> e(m, s.rank() - 2, Variance::contravariant, 0, std::move(unit));
        const auto col = metric_trace(sym_product(ginv, e), geo);
        for (std::size_t I = 0; I < dim_x; ++I) {
            a(I, J) = col.comp(I).truncate(n);
        }
    }
    const auto rhs_t = metric_trace(s, geo);
    JetMatrix<S> rhs(dim_x, 1, Jet<S>(m, n));
    for (std::size_t I = 0; I < dim_x; ++I) {
        rhs(I, 0) = rhs_t.comp(I).truncate(n);
    }
    const auto sol = jet_solve(std::move(a), std::move(rhs));
    std::vector<Jet<S>> xc;
    for (std::size_t I = 0; I < dim_x; ++I) {
        xc.push_back(sol(I, 0));
    }
    const SymTensor<S> x(m, s.rank() - 2, Variance::contravariant, s.weight(), std::move(xc));
    return s.truncate(n) - sym_product(ginv, x);
}

} // namespace conformq

#endif
