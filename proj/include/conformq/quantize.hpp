#ifndef CONFORMQ_QUANTIZE_HPP
#define CONFORMQ_QUANTIZE_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <conformq/calculus.hpp>
#include <conformq/coefficients.hpp>
#include <conformq/errors.hpp>
#include <conformq/expansion.hpp>
#include <conformq/metric.hpp>
#include <conformq/tensor.hpp>

namespace conformq
{

namespace detail
{

// Evaluates every word of a plan, sharing common right factors.
template <typename S, typename Letter>
SymTensor<S> apply_plan(const ExpansionPlan &plan, const SymTensor<S> &x, Letter &&letter)
{
    std::map<std::string, SymTensor<S>> memo;
    memo.emplace("", x);
    auto eval = [&](const std::string &word) -> const SymTensor<S> & {
        std::size_t known = word.size();
        while (known > 0 && memo.find(word.substr(word.size() - known)) == memo.end()) {
            --known;
        }
        for (std::size_t len = known + 1; len <= word.size(); ++len) {
            const auto suffix = word.substr(word.size() - len);
            const auto &inner = memo.at(suffix.substr(1));
            memo.emplace(suffix, letter(suffix[0], inner));
        }
        return memo.at(word);
    };
    std::optional<SymTensor<S>> acc;
    for (const auto &w : plan.words) {
        if (sgn(w.coefficient) == 0) {
            continue;
        }
        SymTensor<S> term = eval(w.letters) * scalar_traits<S>::from_rational(w.coefficient);
        if (acc) {
            *acc += term;
        } else {
            acc = std::move(term);
        }
    }
    if (!acc) {
        // every coefficient vanished: the zero tensor of the right shape
        SymTensor<S> t = eval(plan.words.front().letters);
        return t * S(0);
    }
    return *acc;
}

} // namespace detail

// Applies a density-side plan (D = nabla_s, T = r v .) to a weighted scalar density.
template <typename S>
SymTensor<S> apply_plan_density(const ExpansionPlan &plan, const SymTensor<S> &f, const Geometry<S> &geo)
{
    if (plan.side != Side::density) {
        throw domain_error("apply_plan_density: plan is for the symbol side");
    }
    return detail::apply_plan(plan, f, [&](char c, const SymTensor<S> &x) {
        return c == 'D' ? sym_derivative(x, geo) : sym_product(geo.r(), x);
    });
}

// Applies a symbol-side plan (D = Div, T = i(r)) to a contravariant symbol.
template <typename S>
SymTensor<S> apply_plan_symbol(const ExpansionPlan &plan, const SymTensor<S> &s, const Geometry<S> &geo)
{
    if (plan.side != Side::symbol) {
        throw domain_error("apply_plan_symbol: plan is for the density side");
    }
    return detail::apply_plan(plan, s, [&](char c, const SymTensor<S> &x) {
        return c == 'D' ? divergence(x, geo) : insert(geo.r(), x);
    });
}

struct QuantizeOptions {
    // Reject symbols whose metric trace does not vanish.
    bool check_trace = true;
    // Relative tolerance of the trace check in float mode.
    double trace_tolerance = 1e-9;
};

namespace detail
{

template <typename S>
int check_inputs(const Geometry<S> &geo, const SymTensor<S> &s, const SymTensor<S> &f, const QuantParams &p,
                 const QuantizeOptions &opts)
{
    const int m = geo.dim();
    if (p.m != m || s.dim() != m || f.dim() != m) {
        throw dimension_error("quantize: metric, symbol, density and parameters disagree on the dimension");
    }
    if (s.rank() != p.k || !s.is_contravariant()) {
        throw dimension_error("quantize: symbol must be contravariant of degree " + std::to_string(p.k));
    }
    if (s.weight() != p.delta()) {
        throw dimension_error("quantize: symbol weight " + s.weight().get_str() + " differs from delta = mu - lambda = "
                              + p.delta().get_str());
    }
    if (f.rank() != 0) {
        throw dimension_error("quantize: the argument must be a scalar density");
    }
    if (f.weight() != p.lambda) {
        throw dimension_error("quantize: density weight " + f.weight().get_str() + " differs from lambda = "
                              + p.lambda.get_str());
    }
    const int n = std::min({geo.order(), s.order(), f.order()});
    if (n < p.k) {
        throw order_error("quantize: jets of order " + std::to_string(n) + " cannot carry " + std::to_string(p.k)
                          + " derivatives");
    }
    if (opts.check_trace && !is_trace_free(s, geo, opts.trace_tolerance)) {
        throw trace_error("quantize: symbol is not trace-free");
    }
    return n - p.k;
}

} // namespace detail

// Q(S)f = sum_l C_{k,l} < Y_l S, X_{k-l} f >, a density of weight mu, truncated to
// order min(orders) - k.
template <typename S>
SymTensor<S> quantize(const Geometry<S> &geo, const SymTensor<S> &s, const SymTensor<S> &f, const CoefficientTable &table,
                      const QuantizeOptions &opts = {})
{
    const auto &p = table.params();
    table.require_noncritical();
    const int out_order = detail::check_inputs(geo, s, f, p, opts);
    std::optional<SymTensor<S>> q;
    for (int l = 0; l <= p.k; ++l) {
        const auto y = apply_plan_symbol(expand_words(Side::symbol, l, table), s, geo);
        const auto x = apply_plan_density(expand_words(Side::density, p.k - l, table), f, geo);
        auto term = pair(y, x) * scalar_traits<S>::from_rational(table.c(l));
        if (q) {
            *q += term;
        } else {
            q = std::move(term);
        }
    }
    return q->truncate(out_order);
}

template <typename S>
SymTensor<S> quantize(const Geometry<S> &geo, const SymTensor<S> &s, const SymTensor<S> &f, const QuantParams &p,
                      Mutation mutation = Mutation::none, const QuantizeOptions &opts = {})
{
    return quantize(geo, s, f, CoefficientTable(p, mutation), opts);
}

template <typename S>
SymTensor<S> quantize(const MetricJet<S> &g, const SymTensor<S> &s, const SymTensor<S> &f, const QuantParams &p,
                      Mutation mutation = Mutation::none, const QuantizeOptions &opts = {})
{
    return quantize(Geometry<S>(g), s, f, CoefficientTable(p, mutation), opts);
}

// Closed forms for degrees 2 and 3, written out term by term without the word machinery.
namespace reference
{

template <typename S>
S num(const Rational &q)
{
    return scalar_traits<S>::from_rational(q);
}

// <S, (nabla_s^2 - lambda m r) f> + C21 <Div S, nabla_s f> + C22 <(Div^2 + m gamma_2 i(r)) S, f>
template <typename S>
SymTensor<S> quantize_k2(const Geometry<S> &geo, const SymTensor<S> &s, const SymTensor<S> &f, const QuantParams &p)
{
    if (p.k != 2) {
        throw domain_error("reference::quantize_k2: degree must be 2");
    }
    const int m = p.m;
    const auto d = p.delta();
    const auto &r = geo.r();
    const auto c21 = C(2, 1, m, p.lambda, d);
    const auto c22 = C(2, 2, m, p.lambda, d);
    const auto g2 = gamma(2, m, d);

    const auto df = sym_derivative(f, geo);
    const auto ddf = sym_derivative(df, geo);
    const auto x0 = ddf - sym_product(r, f) * num<S>(p.lambda * m);
    const auto divs = divergence(s, geo);
    const auto y2 = divergence(divs, geo) + insert(r, s) * num<S>(m * g2);

    auto q = pair(s, x0);
    q += pair(divs, df) * num<S>(c21);
    q += pair(y2, f) * num<S>(c22);
    return q.truncate(std::min({geo.order(), s.order(), f.order()}) - 2);
}

// <S, (nabla_s^3 - (3 lambda m + 2) r v nabla_s - lambda m (nabla_s r)) f>
// + C31 <Div S, (nabla_s^2 - lambda m r) f>
// + C32 <(Div^2 + m gamma_4 i(r)) S, nabla_s f>
// + C33 <(Div^3 + (3 m gamma_4 - 2) i(r) Div + m gamma_4 i(nabla_s r)) S, f>
template <typename S>
SymTensor<S> quantize_k3(const Geometry<S> &geo, const SymTensor<S> &s, const SymTensor<S> &f, const QuantParams &p)
{
    if (p.k != 3) {
        throw domain_error("reference::quantize_k3: degree must be 3");
    }
    const int m = p.m;
    const auto d = p.delta();
    const Rational lm = p.lambda * m;
    const auto &r = geo.r();
    const auto dr = sym_derivative(r, geo);
    const auto g4 = gamma(4, m, d);

    const auto df = sym_derivative(f, geo);
    const auto ddf = sym_derivative(df, geo);
    const auto dddf = sym_derivative(ddf, geo);
    const auto x0 = dddf - sym_product(r, df) * num<S>(3 * lm + 2) - sym_product(dr, f) * num<S>(lm);
    const auto x1 = ddf - sym_product(r, f) * num<S>(lm);

    const auto s1 = divergence(s, geo);
    const auto s2 = divergence(s1, geo);
    const auto s3 = divergence(s2, geo);
    const auto y2 = s2 + insert(r, s) * num<S>(m * g4);
    const auto y3 = s3 + insert(r, s1) * num<S>(3 * m * g4 - 2) + insert(dr, s) * num<S>(m * g4);

    auto q = pair(s, x0);
    q += pair(s1, x1) * num<S>(C(3, 1, m, p.lambda, d));
    q += pair(y2, df) * num<S>(C(3, 2, m, p.lambda, d));
    q += pair(y3, f) * num<S>(C(3, 3, m, p.lambda, d));
    return q.truncate(std::min({geo.order(), s.order(), f.order()}) - 3);
}

// Constant metric: every covariant derivative is a plain partial derivative and the
// quantization collapses to sum_l C_{k,l} (d_{b1..bl} S^{b1..bl J}) d_J f, summed over J.
// Only jet_partial is used here.
template <typename S>
SymTensor<S> quantize_flat(const SymTensor<S> &s, const SymTensor<S> &f, const QuantParams &p)
{
    const int m = p.m;
    const int k = p.k;
    const int n = std::min(s.order(), f.order()) - k;
    if (n < 0) {
        throw order_error("reference::quantize_flat: jets too short");
    }
    // divs[l] holds the l-fold flat divergence as a map from sorted tuples to jets
    std::vector<std::vector<Jet<S>>> divs{s.comps()};
    for (int l = 1; l <= k; ++l) {
        const auto &src = SymIndexSet::get(m, k - l + 1);
        const auto &dst = SymIndexSet::get(m, k - l);
        std::vector<Jet<S>> next;
        for (std::size_t J = 0; J < dst.size(); ++J) {
            Jet<S> acc(m, s.order() - l);
            std::vector<int> full{0};
            full.insert(full.end(), dst.tuple(J).begin(), dst.tuple(J).end());
            for (int b = 0; b < m; ++b) {
                full[0] = b;
                acc += jet_partial(divs.back()[src.index_of(full)], b);
            }
            next.push_back(std::move(acc));
        }
        divs.push_back(std::move(next));
    }
    Jet<S> q(m, n);
    for (int l = 0; l <= k; ++l) {
        const auto &idx = SymIndexSet::get(m, k - l);
        const S c = num<S>(C(k, l, m, p.lambda, p.delta()));
        for (std::size_t J = 0; J < idx.size(); ++J) {
            Jet<S> df = f.value();
            for (int v : idx.tuple(J)) {
                df = jet_partial(df, v);
            }
            q += divs[static_cast<std::size_t>(l)][J] * df * (c * S(static_cast<long>(idx.multiplicity(J))));
        }
    }
    return SymTensor<S>::scalar(q.truncate(n), p.mu);
}

} // namespace reference

} // namespace conformq

#endif
