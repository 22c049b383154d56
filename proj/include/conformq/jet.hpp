#ifndef CONFORMQ_JET_HPP
#define CONFORMQ_JET_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <conformq/errors.hpp>
#include <conformq/scalar.hpp>

namespace conformq
{

// Graded enumeration of the monomials x^alpha, |alpha| <= max_order, in m variables.
// Within a degree the order is lexicographic with x_0 most significant, so
// x0^2, x0 x1, x0 x2, x1^2, ... The enumeration for a lower order is a prefix of the
// one for a higher order, which lets jets of different orders share tables.
class MonomialBasis
{
public:
    struct Product {
        std::uint32_t lhs, rhs, out;
    };

    MonomialBasis(int dim, int max_order) : m_dim(dim), m_max(max_order)
    {
        if (dim < 1 || max_order < 0) {
            throw dimension_error("MonomialBasis: invalid dimension or order");
        }
        m_offsets.assign(static_cast<std::size_t>(max_order) + 2, 0);
        std::vector<std::uint8_t> cur(static_cast<std::size_t>(dim));
        for (int d = 0; d <= max_order; ++d) {
            m_offsets[static_cast<std::size_t>(d)] = m_degree.size();
            enumerate(cur, 0, d, d);
        }
        m_offsets[static_cast<std::size_t>(max_order) + 1] = m_degree.size();

        const auto n = m_degree.size();
        for (std::size_t i = 0; i < n; ++i) {
            m_lookup.emplace(code(exponent(i)), i);
        }
        m_raise.assign(n * static_cast<std::size_t>(dim), -1);
        m_lower.assign(n * static_cast<std::size_t>(dim), -1);
        std::vector<int> e(static_cast<std::size_t>(dim));
        for (std::size_t i = 0; i < n; ++i) {
            for (int v = 0; v < dim; ++v) {
                auto ex = exponent(i);
                std::copy(ex.begin(), ex.end(), e.begin());
                ++e[static_cast<std::size_t>(v)];
                m_raise[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(v)] = find(e);
                e[static_cast<std::size_t>(v)] -= 2;
                if (e[static_cast<std::size_t>(v)] >= 0) {
                    m_lower[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(v)] = find(e);
                }
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (m_degree[i] + m_degree[j] > max_order) {
                    continue;
                }
                auto a = exponent(i);
                auto b = exponent(j);
                for (int v = 0; v < dim; ++v) {
                    e[static_cast<std::size_t>(v)] = a[static_cast<std::size_t>(v)] + b[static_cast<std::size_t>(v)];
                }
                m_products.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                      static_cast<std::uint32_t>(find(e))});
            }
        }
        std::stable_sort(m_products.begin(), m_products.end(),
                         [](const Product &x, const Product &y) { return x.out < y.out; });
        m_product_end.assign(static_cast<std::size_t>(max_order) + 1, 0);
        for (int d = 0; d <= max_order; ++d) {
            const auto lim = size(d);
            m_product_end[static_cast<std::size_t>(d)] = static_cast<std::size_t>(
                std::partition_point(m_products.begin(), m_products.end(),
                                     [lim](const Product &p) { return p.out < lim; })
                - m_products.begin());
        }
    }

    // Shared, immutable basis for (dim, order). Thread-safe.
    static const MonomialBasis &get(int dim, int order)
    {
        static std::mutex mtx;
        static std::map<std::pair<int, int>, std::unique_ptr<MonomialBasis>> cache;
        const std::lock_guard lock(mtx);
        auto &slot = cache[{dim, std::max(order, 0)}];
        if (!slot) {
            slot = std::make_unique<MonomialBasis>(dim, std::max(order, 0));
        }
        return *slot;
    }

    int dim() const noexcept
    {
        return m_dim;
    }
    int max_order() const noexcept
    {
        return m_max;
    }
    // Number of monomials of degree <= order.
    std::size_t size(int order) const
    {
        if (order < 0) {
            return 0;
        }
        return m_offsets[static_cast<std::size_t>(std::min(order, m_max)) + 1];
    }
    int degree(std::size_t idx) const
    {
        return m_degree[idx];
    }
    std::span<const std::uint8_t> exponent(std::size_t idx) const
    {
        return {m_exps.data() + idx * static_cast<std::size_t>(m_dim), static_cast<std::size_t>(m_dim)};
    }
    // Index of alpha + e_var, or -1 past max_order.
    std::ptrdiff_t raise(std::size_t idx, int var) const
    {
        return m_raise[idx * static_cast<std::size_t>(m_dim) + static_cast<std::size_t>(var)];
    }
    // Index of alpha - e_var, or -1 if alpha_var == 0.
    std::ptrdiff_t lower(std::size_t idx, int var) const
    {
        return m_lower[idx * static_cast<std::size_t>(m_dim) + static_cast<std::size_t>(var)];
    }
    template <typename Int>
    std::ptrdiff_t find(std::span<const Int> e) const
    {
        int deg = 0;
        for (auto x : e) {
            if (x < 0) {
                return -1;
            }
            deg += static_cast<int>(x);
        }
        if (deg > m_max) {
            return -1;
        }
        auto it = m_lookup.find(code(e));
        return it == m_lookup.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
    }
    std::ptrdiff_t find(const std::vector<int> &e) const
    {
        return find(std::span<const int>(e));
    }
    // Product triples whose output has degree <= order, sorted by output index.
    std::span<const Product> products(int order) const
    {
        if (order < 0) {
            return {};
        }
        return {m_products.data(), m_product_end[static_cast<std::size_t>(std::min(order, m_max))]};
    }

private:
    void enumerate(std::vector<std::uint8_t> &cur, int var, int remaining, int total)
    {
        if (var == m_dim - 1) {
            cur[static_cast<std::size_t>(var)] = static_cast<std::uint8_t>(remaining);
            m_exps.insert(m_exps.end(), cur.begin(), cur.end());
            m_degree.push_back(total);
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            cur[static_cast<std::size_t>(var)] = static_cast<std::uint8_t>(e);
            enumerate(cur, var + 1, remaining - e, total);
        }
    }
    template <typename Int>
    std::uint64_t code(std::span<const Int> e) const
    {
        std::uint64_t c = 0;
        for (auto x : e) {
            c = c * static_cast<std::uint64_t>(m_max + 1) + static_cast<std::uint64_t>(x);
        }
        return c;
    }

    int m_dim;
    int m_max;
    std::vector<std::size_t> m_offsets;
    std::vector<std::uint8_t> m_exps;
    std::vector<int> m_degree;
    std::unordered_map<std::uint64_t, std::size_t> m_lookup;
    std::vector<std::ptrdiff_t> m_raise;
    std::vector<std::ptrdiff_t> m_lower;
    std::vector<Product> m_products;
    std::vector<std::size_t> m_product_end;
};

// Truncated Taylor expansion of a scalar in m chart variables (offsets from the base
// point), kept to total degree `order`. coeffs()[i] is the coefficient of the i-th
// monomial of MonomialBasis, i.e. d^alpha f / alpha!.
//
// Order -1 is the empty jet: it carries no information (the derivative of an order-0
// jet) and is flagged by empty().
template <typename S>
class Jet
{
    using traits = scalar_traits<S>;

public:
    using scalar_type = S;

    Jet() = default;

    Jet(int dim, int order) : m_dim(dim), m_order(std::max(order, -1))
    {
        if (dim < 1) {
            throw dimension_error("Jet: dimension must be positive");
        }
        m_coeffs.assign(MonomialBasis::get(dim, m_order).size(m_order), S(0));
    }

    Jet(int dim, int order, std::vector<S> coeffs) : Jet(dim, order)
    {
        if (coeffs.size() != m_coeffs.size()) {
            throw dimension_error("Jet: coefficient count does not match (dim, order)");
        }
        m_coeffs = std::move(coeffs);
    }

    static Jet constant(int dim, int order, const S &c)
    {
        Jet j(dim, order);
        if (!j.m_coeffs.empty()) {
            j.m_coeffs[0] = c;
        }
        return j;
    }

    // The coordinate function base + x_var.
    static Jet variable(int dim, int order, int var, const S &base = S(0))
    {
        Jet j = constant(dim, order, base);
        if (order >= 1) {
            j.m_coeffs[basis(dim, order).raise(0, var)] = S(1);
        }
        return j;
    }

    // Sum of coefficient * x^exponent terms, truncated at `order`.
    static Jet from_terms(int dim, int order, const std::vector<std::pair<std::vector<int>, S>> &terms)
    {
        Jet j(dim, order);
        const auto &b = basis(dim, order);
        for (const auto &[e, c] : terms) {
            if (static_cast<int>(e.size()) != dim) {
                throw dimension_error("Jet::from_terms: exponent length does not match dimension");
            }
            const auto idx = b.find(e);
            if (idx < 0) {
                bool negative = std::any_of(e.begin(), e.end(), [](int x) { return x < 0; });
                if (negative) {
                    throw domain_error("Jet::from_terms: negative exponent");
                }
                continue;
            }
            j.m_coeffs[static_cast<std::size_t>(idx)] += c;
        }
        return j;
    }

    int dim() const noexcept
    {
        return m_dim;
    }
    int order() const noexcept
    {
        return m_order;
    }
    bool empty() const noexcept
    {
        return m_order < 0;
    }
    std::size_t size() const noexcept
    {
        return m_coeffs.size();
    }
    const std::vector<S> &coeffs() const noexcept
    {
        return m_coeffs;
    }
    const S &operator[](std::size_t idx) const
    {
        return m_coeffs[idx];
    }
    // Value at the base point.
    S value() const
    {
        return m_coeffs.empty() ? S(0) : m_coeffs[0];
    }
    S coeff(const std::vector<int> &exponent) const
    {
        if (static_cast<int>(exponent.size()) != m_dim) {
            throw dimension_error("Jet::coeff: exponent length does not match dimension");
        }
        const auto idx = basis(m_dim, m_order).find(exponent);
        if (idx < 0 || static_cast<std::size_t>(idx) >= m_coeffs.size()) {
            return S(0);
        }
        return m_coeffs[static_cast<std::size_t>(idx)];
    }
    bool is_zero() const
    {
        return std::all_of(m_coeffs.begin(), m_coeffs.end(), [](const S &c) { return traits::is_zero(c); });
    }

    Jet truncate(int order) const
    {
        if (order >= m_order) {
            return *this;
        }
        Jet r(m_dim, order);
        std::copy_n(m_coeffs.begin(), r.m_coeffs.size(), r.m_coeffs.begin());
        return r;
    }

    Jet &operator+=(const Jet &o)
    {
        check_dim(o);
        if (o.m_order < m_order) {
            *this = truncate(o.m_order);
        }
        for (std::size_t i = 0; i < m_coeffs.size(); ++i) {
            m_coeffs[i] += o.m_coeffs[i];
        }
        return *this;
    }
    Jet &operator-=(const Jet &o)
    {
        check_dim(o);
        if (o.m_order < m_order) {
            *this = truncate(o.m_order);
        }
        for (std::size_t i = 0; i < m_coeffs.size(); ++i) {
            m_coeffs[i] -= o.m_coeffs[i];
        }
        return *this;
    }
    Jet &operator*=(const S &s)
    {
        if (traits::is_zero(s)) {
            for (auto &c : m_coeffs) {
                c = S(0);
            }
            return *this;
        }
        for (auto &c : m_coeffs) {
            if (!traits::is_zero(c)) {
                c *= s;
            }
        }
        return *this;
    }
    Jet &operator*=(const Jet &o)
    {
        *this = *this * o;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet &b)
    {
        a += b;
        return a;
    }
    friend Jet operator-(Jet a, const Jet &b)
    {
        a -= b;
        return a;
    }
    friend Jet operator-(Jet a)
    {
        for (auto &c : a.m_coeffs) {
            c = -c;
        }
        return a;
    }
    friend Jet operator*(Jet a, const S &s)
    {
        a *= s;
        return a;
    }
    friend Jet operator*(const S &s, Jet a)
    {
        a *= s;
        return a;
    }
    // Truncated Cauchy product; the result keeps the smaller of the two orders.
    friend Jet operator*(const Jet &a, const Jet &b)
    {
        a.check_dim(b);
        const int n = std::min(a.m_order, b.m_order);
        Jet r(a.m_dim, n);
        if (n < 0) {
            return r;
        }
        S tmp(0);
        for (const auto &p : basis(a.m_dim, n).products(n)) {
            const S &x = a.m_coeffs[p.lhs];
            if (traits::is_zero(x)) {
                continue;
            }
            const S &y = b.m_coeffs[p.rhs];
            if (traits::is_zero(y)) {
                continue;
            }
            traits::add_product(r.m_coeffs[p.out], x, y, tmp);
        }
        return r;
    }

    // Literal equality: same order and identical coefficients.
    friend bool operator==(const Jet &a, const Jet &b)
    {
        return a.m_dim == b.m_dim && a.m_order == b.m_order && a.m_coeffs == b.m_coeffs;
    }

    friend std::ostream &operator<<(std::ostream &os, const Jet &j)
    {
        const auto &b = basis(j.m_dim, j.m_order);
        bool first = true;
        for (std::size_t i = 0; i < j.m_coeffs.size(); ++i) {
            if (traits::is_zero(j.m_coeffs[i])) {
                continue;
            }
            if (!first) {
                os << " + ";
            }
            first = false;
            os << traits::str(j.m_coeffs[i]);
            auto e = b.exponent(i);
            for (int v = 0; v < j.m_dim; ++v) {
                if (e[static_cast<std::size_t>(v)] > 0) {
                    os << "*x" << v;
                    if (e[static_cast<std::size_t>(v)] > 1) {
                        os << '^' << int(e[static_cast<std::size_t>(v)]);
                    }
                }
            }
        }
        if (first) {
            os << '0';
        }
        return os << " + O(" << j.m_order + 1 << ')';
    }

private:
    static const MonomialBasis &basis(int dim, int order)
    {
        return MonomialBasis::get(dim, order);
    }
    void check_dim(const Jet &o) const
    {
        if (m_dim != o.m_dim) {
            throw dimension_error("Jet: dimension mismatch");
        }
    }

    template <typename T>
    friend Jet<T> jet_partial(const Jet<T> &, int);

    int m_dim = 1;
    int m_order = -1;
    std::vector<S> m_coeffs;
};

// Largest absolute coefficient difference over the common order.
template <typename S>
double max_abs_diff(const Jet<S> &a, const Jet<S> &b)
{
    const int n = std::min(a.order(), b.order());
    const auto cnt = MonomialBasis::get(a.dim(), n).size(n);
    double d = 0;
    for (std::size_t i = 0; i < cnt; ++i) {
        d = std::max(d, std::fabs(scalar_traits<S>::to_double(a[i]) - scalar_traits<S>::to_double(b[i])));
    }
    return d;
}

template <typename S>
double max_abs(const Jet<S> &a)
{
    double d = 0;
    for (const auto &c : a.coeffs()) {
        d = std::max(d, std::fabs(scalar_traits<S>::to_double(c)));
    }
    return d;
}

// Formal partial derivative d/dx_var. The result has order N - 1.
template <typename S>
Jet<S> jet_partial(const Jet<S> &a, int var)
{
    if (var < 0 || var >= a.dim()) {
        throw dimension_error("jet_partial: direction out of range");
    }
    Jet<S> r(a.dim(), a.order() - 1);
    if (r.empty()) {
        return r;
    }
    const auto &b = MonomialBasis::get(a.dim(), a.order());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const auto up = b.raise(i, var);
        const S &c = a[static_cast<std::size_t>(up)];
        if (scalar_traits<S>::is_zero(c)) {
            continue;
        }
        r.m_coeffs[i] = c * S(b.exponent(i)[static_cast<std::size_t>(var)] + 1);
    }
    return r;
}

namespace detail
{

// sum_{n=0}^{N} c_n u^n for u with zero constant term, by Horner.
template <typename S>
Jet<S> nilpotent_series(const Jet<S> &u, const std::vector<S> &c)
{
    Jet<S> acc = Jet<S>::constant(u.dim(), u.order(), c.back());
    for (std::size_t n = c.size() - 1; n-- > 0;) {
        acc = acc * u + Jet<S>::constant(u.dim(), u.order(), c[n]);
    }
    return acc;
}

template <typename S>
Jet<S> without_constant(Jet<S> a)
{
    return a - Jet<S>::constant(a.dim(), a.order(), a.value());
}

} // namespace detail

// Multiplicative inverse; requires a nonzero constant term.
template <typename S>
Jet<S> jet_inverse(const Jet<S> &a)
{
    if (a.empty()) {
        return a;
    }
    if (scalar_traits<S>::is_zero(a.value())) {
        throw domain_error("jet_inverse: zero constant term");
    }
    const S inv0 = S(1) / a.value();
    // 1/a = inv0 * 1/(1+u), u = a*inv0 - 1
    const Jet<S> u = detail::without_constant(a * inv0);
    std::vector<S> c(static_cast<std::size_t>(a.order()) + 1);
    for (std::size_t n = 0; n < c.size(); ++n) {
        c[n] = (n % 2 == 0) ? S(1) : S(-1);
    }
    return detail::nilpotent_series(u, c) * inv0;
}

template <typename S>
Jet<S> jet_exp(const Jet<S> &a)
{
    if (a.empty()) {
        return a;
    }
    const S e0 = scalar_traits<S>::exp_const(a.value());
    const Jet<S> u = detail::without_constant(a);
    std::vector<S> c(static_cast<std::size_t>(a.order()) + 1);
    S fact(1);
    for (std::size_t n = 0; n < c.size(); ++n) {
        if (n > 0) {
            fact *= S(static_cast<long>(n));
        }
        c[n] = S(1) / fact;
    }
    return detail::nilpotent_series(u, c) * e0;
}

// a^e for a rational exponent e; requires a positive constant term. In rational mode the
// constant term's power has to be rational itself.
template <typename S>
Jet<S> jet_pow(const Jet<S> &a, const Rational &e)
{
    if (a.empty()) {
        return a;
    }
    if (scalar_traits<S>::sign(a.value()) <= 0) {
        throw domain_error("jet_pow: constant term must be positive");
    }
    const S p0 = scalar_traits<S>::pow_const(a.value(), e);
    const Jet<S> u = detail::without_constant(a * (S(1) / a.value()));
    std::vector<S> c(static_cast<std::size_t>(a.order()) + 1);
    Rational binom(1);
    for (std::size_t n = 0; n < c.size(); ++n) {
        if (n > 0) {
            binom *= (e - Rational(static_cast<long>(n) - 1)) / Rational(static_cast<long>(n));
        }
        c[n] = scalar_traits<S>::from_rational(binom);
    }
    return detail::nilpotent_series(u, c) * p0;
}

// Precomputed powers of a point map, for composing many outer jets with the same inner
// map. The inner map x = base + v(y) has v(0) = 0.
template <typename S>
class Composer
{
public:
    Composer(std::vector<Jet<S>> inner, std::vector<S> base) : m_base(std::move(base))
    {
        if (inner.empty()) {
            throw dimension_error("Composer: empty point map");
        }
        if (inner.size() != m_base.size()) {
            throw dimension_error("Composer: base point length does not match the point map");
        }
        m_inner_dim = inner[0].dim();
        m_order = inner[0].order();
        for (std::size_t i = 0; i < inner.size(); ++i) {
            if (inner[i].dim() != m_inner_dim) {
                throw dimension_error("Composer: inner jets have different dimensions");
            }
            m_order = std::min(m_order, inner[i].order());
            const S diff = inner[i].value() - m_base[i];
            if (!scalar_traits<S>::is_zero(diff)) {
                if (scalar_traits<S>::exact || scalar_traits<S>::to_double(scalar_traits<S>::abs(diff)) > 1e-12) {
                    throw domain_error("jet_compose: inner map does not send the base point to the outer base point");
                }
            }
        }
        const int outer_dim = static_cast<int>(inner.size());
        std::vector<Jet<S>> v;
        v.reserve(inner.size());
        for (std::size_t i = 0; i < inner.size(); ++i) {
            v.push_back(detail::without_constant(inner[i].truncate(m_order)));
        }
        const auto &ob = MonomialBasis::get(outer_dim, m_order);
        const auto n = ob.size(m_order);
        m_powers.reserve(n);
        m_powers.push_back(Jet<S>::constant(m_inner_dim, m_order, S(1)));
        for (std::size_t idx = 1; idx < n; ++idx) {
            int var = 0;
            while (ob.lower(idx, var) < 0) {
                ++var;
            }
            m_powers.push_back(m_powers[static_cast<std::size_t>(ob.lower(idx, var))] * v[static_cast<std::size_t>(var)]);
        }
        m_outer_dim = outer_dim;
    }

    int order() const noexcept
    {
        return m_order;
    }

    Jet<S> operator()(const Jet<S> &outer) const
    {
        if (outer.dim() != m_outer_dim) {
            throw dimension_error("jet_compose: outer jet dimension does not match the point map");
        }
        const int n = std::min(outer.order(), m_order);
        Jet<S> r(m_inner_dim, n);
        const auto cnt = MonomialBasis::get(m_outer_dim, n).size(n);
        for (std::size_t idx = 0; idx < cnt; ++idx) {
            if (scalar_traits<S>::is_zero(outer[idx])) {
                continue;
            }
            r += m_powers[idx].truncate(n) * outer[idx];
        }
        return r;
    }

private:
    std::vector<S> m_base;
    int m_inner_dim = 0;
    int m_outer_dim = 0;
    int m_order = 0;
    std::vector<Jet<S>> m_powers;
};

// outer(inner(y)) where outer is expanded at `base` and inner(y0) = base.
template <typename S>
Jet<S> jet_compose(const Jet<S> &outer, const std::vector<Jet<S>> &inner, const std::vector<S> &base)
{
    return Composer<S>(inner, base)(outer);
}

template <typename S>
Jet<S> jet_compose(const Jet<S> &outer, const std::vector<Jet<S>> &inner)
{
    std::vector<S> base(inner.size(), S(0));
    return jet_compose(outer, inner, base);
}

// Re-expands the polynomial sum c * x^e (absolute chart coordinates) around `point`.
template <typename S>
Jet<S> polynomial_jet(int dim, int order, const std::vector<std::pair<std::vector<int>, S>> &terms,
                      const std::vector<S> &point)
{
    if (static_cast<int>(point.size()) != dim) {
        throw dimension_error("polynomial_jet: point length does not match dimension");
    }
    Jet<S> r(dim, order);
    std::vector<Jet<S>> coord;
    for (int v = 0; v < dim; ++v) {
        coord.push_back(Jet<S>::variable(dim, order, v, point[static_cast<std::size_t>(v)]));
    }
    for (const auto &[e, c] : terms) {
        if (static_cast<int>(e.size()) != dim) {
            throw dimension_error("polynomial_jet: exponent length does not match dimension");
        }
        Jet<S> t = Jet<S>::constant(dim, order, c);
        for (int v = 0; v < dim; ++v) {
            if (e[static_cast<std::size_t>(v)] < 0) {
                throw domain_error("polynomial_jet: negative exponent");
            }
            for (int p = 0; p < e[static_cast<std::size_t>(v)]; ++p) {
                t = t * coord[static_cast<std::size_t>(v)];
            }
        }
        r += t;
    }
    return r;
}

template <typename S>
Jet<S> change_scalar(const Jet<Rational> &a)
{
    std::vector<S> c;
    c.reserve(a.size());
    for (const auto &x : a.coeffs()) {
        c.push_back(scalar_traits<S>::from_rational(x));
    }
    return Jet<S>(a.dim(), a.order(), std::move(c));
}

} // namespace conformq

#endif
