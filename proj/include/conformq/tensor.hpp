#ifndef CONFORMQ_TENSOR_HPP
#define CONFORMQ_TENSOR_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <conformq/errors.hpp>
#include <conformq/jet.hpp>
#include <conformq/scalar.hpp>

namespace conformq
{

// Non-decreasing index tuples (i_1 <= ... <= i_k), i.e. the independent components of a
// symmetric rank-k tensor in m dimensions.
class SymIndexSet
{
public:
    SymIndexSet(int dim, int rank) : m_dim(dim), m_rank(rank)
    {
        if (dim < 1 || rank < 0) {
            throw dimension_error("SymIndexSet: invalid dimension or rank");
        }
        std::vector<int> cur(static_cast<std::size_t>(rank));
        enumerate(cur, 0, 0);
        std::size_t total = 1;
        for (int i = 0; i < rank; ++i) {
            total *= static_cast<std::size_t>(dim);
        }
        m_lookup.assign(total, 0);
        // every ordered tuple maps to its sorted representative
        std::vector<int> t(static_cast<std::size_t>(rank), 0);
        for (std::size_t c = 0; c < total; ++c) {
            std::size_t x = c;
            for (int i = rank - 1; i >= 0; --i) {
                t[static_cast<std::size_t>(i)] = static_cast<int>(x % static_cast<std::size_t>(dim));
                x /= static_cast<std::size_t>(dim);
            }
            auto s = t;
            std::sort(s.begin(), s.end());
            m_lookup[c] = m_sorted_lookup.at(code(s));
        }
        for (const auto &tup : m_tuples) {
            std::vector<int> counts(static_cast<std::size_t>(dim), 0);
            for (int i : tup) {
                ++counts[static_cast<std::size_t>(i)];
            }
            mpz_class num;
            mpz_fac_ui(num.get_mpz_t(), static_cast<unsigned long>(rank));
            for (int c : counts) {
                mpz_class f;
                mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(c));
                num /= f;
            }
            m_mult.push_back(num.get_ui());
            m_counts.push_back(std::move(counts));
        }
    }

    static const SymIndexSet &get(int dim, int rank)
    {
        static std::mutex mtx;
        static std::map<std::pair<int, int>, std::unique_ptr<SymIndexSet>> cache;
        const std::lock_guard lock(mtx);
        auto &slot = cache[{dim, rank}];
        if (!slot) {
            slot = std::make_unique<SymIndexSet>(dim, rank);
        }
        return *slot;
    }

    int dim() const noexcept
    {
        return m_dim;
    }
    int rank() const noexcept
    {
        return m_rank;
    }
    std::size_t size() const noexcept
    {
        return m_tuples.size();
    }
    const std::vector<int> &tuple(std::size_t idx) const
    {
        return m_tuples[idx];
    }
    // How often each chart index occurs in the tuple.
    const std::vector<int> &counts(std::size_t idx) const
    {
        return m_counts[idx];
    }
    // Number of distinct orderings of the tuple: k! / prod(counts!).
    unsigned long multiplicity(std::size_t idx) const
    {
        return m_mult[idx];
    }
    // Index of the sorted representative of an arbitrary ordered tuple.
    std::size_t index_of(std::span<const int> t) const
    {
        if (static_cast<int>(t.size()) != m_rank) {
            throw dimension_error("SymIndexSet::index_of: wrong tuple length");
        }
        std::size_t c = 0;
        for (int i : t) {
            if (i < 0 || i >= m_dim) {
                throw dimension_error("SymIndexSet::index_of: index out of range");
            }
            c = c * static_cast<std::size_t>(m_dim) + static_cast<std::size_t>(i);
        }
        return m_lookup[c];
    }
    std::size_t index_of(const std::vector<int> &t) const
    {
        return index_of(std::span<const int>(t));
    }

private:
    void enumerate(std::vector<int> &cur, int pos, int start)
    {
        if (pos == m_rank) {
            m_sorted_lookup.emplace(code(cur), m_tuples.size());
            m_tuples.push_back(cur);
            return;
        }
        for (int i = start; i < m_dim; ++i) {
            cur[static_cast<std::size_t>(pos)] = i;
            enumerate(cur, pos + 1, i);
        }
    }
    std::size_t code(const std::vector<int> &t) const
    {
        std::size_t c = 0;
        for (int i : t) {
            c = c * static_cast<std::size_t>(m_dim) + static_cast<std::size_t>(i);
        }
        return c;
    }

    int m_dim;
    int m_rank;
    std::vector<std::vector<int>> m_tuples;
    std::vector<std::vector<int>> m_counts;
    std::vector<unsigned long> m_mult;
    std::map<std::size_t, std::size_t> m_sorted_lookup;
    std::vector<std::size_t> m_lookup;
};

enum class Variance { contravariant, covariant };

inline const char *to_string(Variance v)
{
    return v == Variance::contravariant ? "contravariant" : "covariant";
}

// Fully symmetric tensor field of pure type (all indices up or all down) with values in
// densities of weight `weight`, as jets at the base point. Rank 0 is a weighted scalar
// density; its variance is irrelevant.
template <typename S>
class SymTensor
{
public:
    SymTensor() = default;

    SymTensor(int dim, int rank, Variance var, Rational weight, int order)
        : m_dim(dim), m_rank(rank), m_var(var), m_weight(std::move(weight))
    {
        m_comps.assign(SymIndexSet::get(dim, rank).size(), Jet<S>(dim, order));
    }

    SymTensor(int dim, int rank, Variance var, Rational weight, std::vector<Jet<S>> comps)
        : m_dim(dim), m_rank(rank), m_var(var), m_weight(std::move(weight)), m_comps(std::move(comps))
    {
        if (m_comps.size() != SymIndexSet::get(dim, rank).size()) {
            throw dimension_error("SymTensor: component count does not match (dim, rank)");
        }
        for (const auto &c : m_comps) {
            if (c.dim() != dim) {
                throw dimension_error("SymTensor: component jet has the wrong dimension");
            }
        }
    }

    static SymTensor scalar(Jet<S> value, Rational weight)
    {
        const int d = value.dim();
        return SymTensor(d, 0, Variance::covariant, std::move(weight), std::vector<Jet<S>>{std::move(value)});
    }

    int dim() const noexcept
    {
        return m_dim;
    }
    int rank() const noexcept
    {
        return m_rank;
    }
    Variance variance() const noexcept
    {
        return m_var;
    }
    bool is_covariant() const noexcept
    {
        return m_rank == 0 || m_var == Variance::covariant;
    }
    bool is_contravariant() const noexcept
    {
        return m_rank == 0 || m_var == Variance::contravariant;
    }
    const Rational &weight() const noexcept
    {
        return m_weight;
    }
    const SymIndexSet &indices() const
    {
        return SymIndexSet::get(m_dim, m_rank);
    }
    const std::vector<Jet<S>> &comps() const noexcept
    {
        return m_comps;
    }
    const Jet<S> &comp(std::size_t idx) const
    {
        return m_comps[idx];
    }
    // Component for an arbitrary (not necessarily sorted) index tuple.
    const Jet<S> &at(std::span<const int> t) const
    {
        return m_comps[indices().index_of(t)];
    }
    const Jet<S> &at(std::initializer_list<int> t) const
    {
        return at(std::span<const int>(t.begin(), t.size()));
    }
    // The scalar of a rank-0 tensor.
    const Jet<S> &value() const
    {
        if (m_rank != 0) {
            throw dimension_error("SymTensor::value: tensor is not a scalar");
        }
        return m_comps[0];
    }
    int order() const
    {
        int o = std::numeric_limits<int>::max();
        for (const auto &c : m_comps) {
            o = std::min(o, c.order());
        }
        return m_comps.empty() ? -1 : o;
    }
    SymTensor truncate(int order) const
    {
        SymTensor r = *this;
        for (auto &c : r.m_comps) {
            c = c.truncate(order);
        }
        return r;
    }
    bool is_zero() const
    {
        return std::all_of(m_comps.begin(), m_comps.end(), [](const Jet<S> &c) { return c.is_zero(); });
    }
    SymTensor with_weight(Rational w) const
    {
        SymTensor r = *this;
        r.m_weight = std::move(w);
        return r;
    }

    SymTensor &operator+=(const SymTensor &o)
    {
        check_same_shape(o);
        for (std::size_t i = 0; i < m_comps.size(); ++i) {
            m_comps[i] += o.m_comps[i];
        }
        return *this;
    }
    SymTensor &operator-=(const SymTensor &o)
    {
        check_same_shape(o);
        for (std::size_t i = 0; i < m_comps.size(); ++i) {
            m_comps[i] -= o.m_comps[i];
        }
        return *this;
    }
    SymTensor &operator*=(const S &s)
    {
        for (auto &c : m_comps) {
            c *= s;
        }
        return *this;
    }
    friend SymTensor operator+(SymTensor a, const SymTensor &b)
    {
        a += b;
        return a;
    }
    friend SymTensor operator-(SymTensor a, const SymTensor &b)
    {
        a -= b;
        return a;
    }
    friend SymTensor operator*(SymTensor a, const S &s)
    {
        a *= s;
        return a;
    }
    friend SymTensor operator*(const S &s, SymTensor a)
    {
        a *= s;
        return a;
    }
    // Multiplication by a weight-0 scalar function.
    friend SymTensor operator*(const Jet<S> &f, SymTensor a)
    {
        for (auto &c : a.m_comps) {
            c = f * c;
        }
        return a;
    }
    friend bool operator==(const SymTensor &a, const SymTensor &b)
    {
        return a.m_dim == b.m_dim && a.m_rank == b.m_rank && (a.m_rank == 0 || a.m_var == b.m_var)
               && a.m_weight == b.m_weight && a.m_comps == b.m_comps;
    }

private:
    void check_same_shape(const SymTensor &o) const
    {
        if (m_dim != o.m_dim || m_rank != o.m_rank || (m_rank > 0 && m_var != o.m_var)) {
            throw dimension_error("SymTensor: shape mismatch");
        }
        if (m_weight != o.m_weight) {
            throw dimension_error("SymTensor: adding densities of different weight");
        }
    }

    int m_dim = 0;
    int m_rank = 0;
    Variance m_var = Variance::covariant;
    Rational m_weight = 0;
    std::vector<Jet<S>> m_comps;
};

// General (not necessarily symmetric) tensor with per-slot variance, stored densely in
// row-major order over m^rank index tuples. Used for intermediate results such as the
// full covariant derivative.
template <typename S>
class Tensor
{
public:
    Tensor(int dim, std::vector<Variance> slots, Rational weight, int order)
        : m_dim(dim), m_slots(std::move(slots)), m_weight(std::move(weight))
    {
        std::size_t n = 1;
        for (std::size_t i = 0; i < m_slots.size(); ++i) {
            n *= static_cast<std::size_t>(dim);
        }
        m_comps.assign(n, Jet<S>(dim, order));
    }

    int dim() const noexcept
    {
        return m_dim;
    }
    int rank() const noexcept
    {
        return static_cast<int>(m_slots.size());
    }
    const std::vector<Variance> &slots() const noexcept
    {
        return m_slots;
    }
    const Rational &weight() const noexcept
    {
        return m_weight;
    }
    std::size_t flat(std::span<const int> t) const
    {
        if (t.size() != m_slots.size()) {
            throw dimension_error("Tensor: wrong index count");
        }
        std::size_t c = 0;
        for (int i : t) {
            c = c * static_cast<std::size_t>(m_dim) + static_cast<std::size_t>(i);
        }
        return c;
    }
    const Jet<S> &at(std::span<const int> t) const
    {
        return m_comps[flat(t)];
    }
    const Jet<S> &at(std::initializer_list<int> t) const
    {
        return at(std::span<const int>(t.begin(), t.size()));
    }
    Jet<S> &at(std::span<const int> t)
    {
        return m_comps[flat(t)];
    }
    const std::vector<Jet<S>> &comps() const noexcept
    {
        return m_comps;
    }
    bool is_zero() const
    {
        return std::all_of(m_comps.begin(), m_comps.end(), [](const Jet<S> &c) { return c.is_zero(); });
    }
    // Unpacks row-major flat index into a tuple.
    std::vector<int> tuple(std::size_t c) const
    {
        std::vector<int> t(m_slots.size());
        for (std::size_t i = m_slots.size(); i-- > 0;) {
            t[i] = static_cast<int>(c % static_cast<std::size_t>(m_dim));
            c /= static_cast<std::size_t>(m_dim);
        }
        return t;
    }

private:
    int m_dim;
    std::vector<Variance> m_slots;
    Rational m_weight;
    std::vector<Jet<S>> m_comps;
};

template <typename S>
SymTensor<S> change_scalar(const SymTensor<Rational> &t)
{
    std::vector<Jet<S>> c;
    for (const auto &j : t.comps()) {
        c.push_back(change_scalar<S>(j));
    }
    return SymTensor<S>(t.dim(), t.rank(), t.variance(), t.weight(), std::move(c));
}

} // namespace conformq

#endif
