#ifndef CONFORMQ_EXPANSION_HPP
#define CONFORMQ_EXPANSION_HPP

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <conformq/coefficients.hpp>
#include <conformq/errors.hpp>
#include <conformq/scalar.hpp>

namespace conformq
{

// Which factor of the pairing a word acts on.
//   density side: D = symmetrized covariant derivative (degree 1), T = r v . (degree 2)
//   symbol side:  D = divergence (degree -1),                      T = i(r) . (degree -2)
enum class Side { density, symbol };

// Polynomial in the side's distinguished number beta, ascending powers.
// beta = -lambda m on the density side and m gamma_{2k-2} on the symbol side.
using BetaPolynomial = std::vector<Rational>;

// A composition of D and T letters; the rightmost letter acts first. The coefficient is the
// product of the T factors met while applying the word, each taken at the valence it sees.
struct OperatorWord {
    Side side = Side::density;
    std::string letters;
    Rational coefficient = 1;
    BetaPolynomial beta_coefficient{Rational(1)};

    // Total |degree|: D counts 1, T counts 2.
    int degree() const
    {
        int d = 0;
        for (char c : letters) {
            d += c == 'T' ? 2 : 1;
        }
        return d;
    }
    bool has_t() const
    {
        return letters.find('T') != std::string::npos;
    }
};

struct ExpansionPlan {
    Side side = Side::density;
    int k = 0;
    int target = 0;
    std::vector<OperatorWord> words;
};

namespace detail
{

inline BetaPolynomial poly_mul_linear(const BetaPolynomial &p, const Rational &c0, const Rational &c1)
{
    BetaPolynomial r(p.size() + 1, Rational(0));
    for (std::size_t i = 0; i < p.size(); ++i) {
        r[i] += p[i] * c0;
        r[i + 1] += p[i] * c1;
    }
    return r;
}

inline void poly_add(BetaPolynomial &acc, const BetaPolynomial &p, const Rational &scale = 1)
{
    if (acc.size() < p.size()) {
        acc.resize(p.size(), Rational(0));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc[i] += p[i] * scale;
    }
}

inline bool poly_is_zero(const BetaPolynomial &p)
{
    return std::all_of(p.begin(), p.end(), [](const Rational &c) { return sgn(c) == 0; });
}

inline void enumerate_words(int remaining, std::string &cur, std::vector<std::string> &out)
{
    if (remaining == 0) {
        out.push_back(cur);
        return;
    }
    cur.push_back('D');
    enumerate_words(remaining - 1, cur, out);
    cur.pop_back();
    if (remaining >= 2) {
        cur.push_back('T');
        enumerate_words(remaining - 2, cur, out);
        cur.pop_back();
    }
}

} // namespace detail

// All words of the given degree with their valence-tracked coefficients. Density side words
// start at covariant valence 0; symbol side words start at symbol degree k and need
// target <= k.
inline ExpansionPlan expand_words(Side side, int target, const CoefficientTable &table)
{
    const int k = table.params().k;
    if (target < 0) {
        throw domain_error("expand_words: negative target degree");
    }
    if (side == Side::symbol && target > k) {
        throw domain_error("expand_words: symbol-side degree drop exceeds the symbol degree");
    }
    std::vector<std::string> raw;
    std::string cur;
    detail::enumerate_words(target, cur, raw);

    ExpansionPlan plan{side, k, target, {}};
    for (const auto &letters : raw) {
        OperatorWord w;
        w.side = side;
        w.letters = letters;
        int valence = side == Side::density ? 0 : k;
        for (auto it = letters.rbegin(); it != letters.rend(); ++it) {
            if (*it == 'D') {
                valence += side == Side::density ? 1 : -1;
                continue;
            }
            if (side == Side::density) {
                // (beta - j)(j + 1)
                w.coefficient *= table.t1(valence);
                w.beta_coefficient
                    = detail::poly_mul_linear(w.beta_coefficient, Rational(-valence * (valence + 1)), Rational(valence + 1));
                valence += 2;
            } else {
                // (beta - k + j)(k - j + 1)
                w.coefficient *= table.t2(valence);
                const int f = k - valence + 1;
                w.beta_coefficient
                    = detail::poly_mul_linear(w.beta_coefficient, Rational((valence - k) * f), Rational(f));
                valence -= 2;
            }
        }
        plan.words.push_back(std::move(w));
    }
    return plan;
}

inline ExpansionPlan expand_words(Side side, int target, int k, int m, const Rational &lambda, const Rational &delta)
{
    return expand_words(side, target, CoefficientTable(QuantParams{m, lambda, lambda + delta, k}));
}

// A Leibniz-normal term: (d^{i_1} T) ... (d^{i_t} T) D^n with i_1 <= ... <= i_t.
struct NormalTerm {
    std::vector<int> t_derivatives;
    int trailing_d = 0;

    friend bool operator<(const NormalTerm &a, const NormalTerm &b)
    {
        // larger trailing D power first, then fewer/lower T derivatives
        if (a.trailing_d != b.trailing_d) {
            return a.trailing_d > b.trailing_d;
        }
        if (a.t_derivatives.size() != b.t_derivatives.size()) {
            return a.t_derivatives.size() < b.t_derivatives.size();
        }
        return a.t_derivatives < b.t_derivatives;
    }
};

// Rewrites each word with D (T X) = (dT) X + T (D X) until every D stands to the right of
// all T factors, and collects the symbolic (beta-polynomial) coefficients. The same rule
// holds on both sides: nabla_s(r v X) = (nabla_s r) v X + r v nabla_s X and
// Div(i(r) X) = i(nabla_s r) X + i(r) Div X.
inline std::map<NormalTerm, BetaPolynomial> leibniz_normalize(const ExpansionPlan &plan)
{
    std::map<NormalTerm, BetaPolynomial> out;
    for (const auto &w : plan.words) {
        std::map<NormalTerm, Rational> state{{NormalTerm{}, Rational(1)}};
        for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) {
            std::map<NormalTerm, Rational> next;
            for (const auto &[term, c] : state) {
                if (*it == 'T') {
                    NormalTerm t = term;
                    t.t_derivatives.push_back(0);
                    std::sort(t.t_derivatives.begin(), t.t_derivatives.end());
                    next[t] += c;
                    continue;
                }
                NormalTerm t = term;
                ++t.trailing_d;
                next[t] += c;
                for (std::size_t f = 0; f < term.t_derivatives.size(); ++f) {
                    NormalTerm u = term;
                    ++u.t_derivatives[f];
                    std::sort(u.t_derivatives.begin(), u.t_derivatives.end());
                    next[u] += c;
                }
            }
            state = std::move(next);
        }
        for (const auto &[term, c] : state) {
            detail::poly_add(out[term], w.beta_coefficient, c);
        }
    }
    for (auto it = out.begin(); it != out.end();) {
        it = detail::poly_is_zero(it->second) ? out.erase(it) : std::next(it);
    }
    return out;
}

// ----------------------------------------------------------------------------
// Rendering
// ----------------------------------------------------------------------------

// beta: coefficients as polynomials in beta. substituted: beta replaced by -λm or mγ_{2k-2}.
enum class RenderStyle { beta, substituted };

namespace detail
{

inline std::string superscript(int n)
{
    static const char *digits[] = {"⁰", "¹", "²", "³", "⁴", "⁵", "⁶", "⁷", "⁸", "⁹"};
    if (n == 0) {
        return digits[0];
    }
    std::string s;
    for (char c : std::to_string(n)) {
        s += digits[c - '0'];
    }
    return s;
}

inline std::string subscript(int n)
{
    static const char *digits[] = {"₀", "₁", "₂", "₃", "₄", "₅", "₆", "₇", "₈", "₉"};
    std::string s;
    if (n < 0) {
        s = "₋";
        n = -n;
    }
    for (char c : std::to_string(n)) {
        s += digits[c - '0'];
    }
    return s;
}

inline std::string power(const std::string &base, int n)
{
    return n == 1 ? base : base + superscript(n);
}

inline const char *minus_sign()
{
    return "−";
}

inline std::string rational_text(const Rational &q)
{
    return q.get_den() == 1 ? q.get_str() : "(" + q.get_str() + ")";
}

// Coefficient polynomial as text. Beta style prints it in beta itself with common integer
// factors pulled out, e.g. "2(β−1)". Substituted style rewrites it in the positive
// quantity X (X = λm with beta = -X on the density side; X = mγ_{2k-2} = beta on the
// symbol side), e.g. "−3λm−2".
inline std::string render_coefficient(const BetaPolynomial &beta_poly, Side side, int k, RenderStyle style,
                                      bool *needs_parens)
{
    const bool beta = style == RenderStyle::beta;
    const std::string x = beta ? "β" : side == Side::density ? "λm" : "mγ" + subscript(2 * k - 2);
    std::vector<std::pair<int, Rational>> terms;
    for (std::size_t n = beta_poly.size(); n-- > 0;) {
        Rational c = beta_poly[n];
        if (!beta && side == Side::density && n % 2 == 1) {
            c = -c;
        }
        if (sgn(c) != 0) {
            terms.emplace_back(static_cast<int>(n), c);
        }
    }
    mpz_class common = 0;
    if (beta && terms.size() > 1) {
        for (const auto &[n, c] : terms) {
            if (c.get_den() != 1) {
                common = 1;
                break;
            }
            mpz_gcd(common.get_mpz_t(), common.get_mpz_t(), c.get_num().get_mpz_t());
        }
        common = ::abs(common);
    }
    const bool factored = common > 1;
    std::string s;
    bool first = true;
    for (const auto &[n, c0] : terms) {
        const Rational c = factored ? Rational(c0 / Rational(common)) : c0;
        const Rational a = abs(c);
        if (sgn(c) < 0) {
            s += minus_sign();
        } else if (!first) {
            s += "+";
        }
        if (n == 0) {
            s += rational_text(a);
        } else {
            if (a != 1) {
                s += rational_text(a);
            }
            s += n == 1 ? x : (beta ? x : "(" + x + ")") + superscript(n);
        }
        first = false;
    }
    if (factored) {
        *needs_parens = false;
        return common.get_str() + "(" + s + ")";
    }
    *needs_parens = terms.size() > 1 || (!terms.empty() && sgn(terms.front().second) < 0);
    return s;
}

inline bool is_one(const BetaPolynomial &p)
{
    if (p.empty() || p[0] != 1) {
        return false;
    }
    return std::all_of(p.begin() + 1, p.end(), [](const Rational &c) { return sgn(c) == 0; });
}

inline std::string join_terms(const std::vector<std::pair<std::string, BetaPolynomial>> &items, Side side, int k,
                              RenderStyle style = RenderStyle::substituted)
{
    const bool beta = style == RenderStyle::beta;
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) {
            s += " + ";
        }
        const auto &[op, coeff] = items[i];
        if (is_one(coeff)) {
            s += op;
            continue;
        }
        bool parens = false;
        const auto c = render_coefficient(coeff, side, k, style, &parens);
        s += parens ? "(" + c + ")" : c;
        if (op.empty()) {
            continue;
        }
        if (beta) {
            s += op.rfind("∂", 0) == 0 ? "(" + op + ")" : op;
        } else {
            s += "·" + op;
        }
    }
    return s.empty() ? "0" : s;
}

inline std::string compress_letters(const std::string &letters)
{
    std::string s;
    for (std::size_t i = 0; i < letters.size();) {
        std::size_t j = i;
        while (j < letters.size() && letters[j] == letters[i]) {
            ++j;
        }
        s += power(std::string(1, letters[i]), static_cast<int>(j - i));
        i = j;
    }
    return s;
}

} // namespace detail

// Raw words, e.g. "D³ + (−λm)·DT + (−2λm−2)·TD", or "D³ + βDT + 2(β−1)TD" in beta style.
inline std::string render_words(const ExpansionPlan &plan, RenderStyle style = RenderStyle::substituted)
{
    std::vector<std::pair<std::string, BetaPolynomial>> items;
    for (const auto &w : plan.words) {
        items.emplace_back(w.letters.empty() ? "1" : detail::compress_letters(w.letters), w.beta_coefficient);
    }
    return detail::join_terms(items, plan.side, plan.k, style);
}

// Normal form with abstract letters, e.g. "D³ + (−3λm−2)·TD + (−λm)·∂T", or
// "D³ + (3β−2)TD + β(∂T)" in beta style.
inline std::string render_normal_letters(const ExpansionPlan &plan, RenderStyle style = RenderStyle::substituted)
{
    std::vector<std::pair<std::string, BetaPolynomial>> items;
    for (const auto &[term, coeff] : leibniz_normalize(plan)) {
        std::string op;
        for (int i : term.t_derivatives) {
            op += (i == 0 ? "" : detail::power("∂", i)) + "T";
        }
        if (term.trailing_d > 0) {
            op += detail::power("D", term.trailing_d);
        }
        items.emplace_back(op.empty() ? "1" : op, coeff);
    }
    return detail::join_terms(items, plan.side, plan.k, style);
}

// Normal form with the concrete operators, e.g.
// "∇_s³ + (−3λm−2)·r∨∇_s + (−λm)·(∇_s r)" or "Div³ + (3mγ₄−2)·i(r)Div + mγ₄·i(∇_s r)".
// Returns an empty string for the identity.
inline std::string render_operators(const ExpansionPlan &plan)
{
    std::vector<std::pair<std::string, BetaPolynomial>> items;
    for (const auto &[term, coeff] : leibniz_normalize(plan)) {
        std::string op;
        if (plan.side == Side::density) {
            std::vector<std::string> factors;
            for (int i : term.t_derivatives) {
                factors.push_back(i == 0 ? "r" : "(" + detail::power("∇_s", i) + " r)");
            }
            if (term.trailing_d > 0) {
                factors.push_back(detail::power("∇_s", term.trailing_d));
            }
            for (std::size_t f = 0; f < factors.size(); ++f) {
                op += (f ? "∨" : "") + factors[f];
            }
        } else {
            for (int i : term.t_derivatives) {
                op += i == 0 ? "i(r)" : "i(" + detail::power("∇_s", i) + " r)";
            }
            if (term.trailing_d > 0) {
                op += detail::power("Div", term.trailing_d);
            }
        }
        items.emplace_back(op, coeff);
    }
    if (items.size() == 1 && items[0].first.empty() && detail::is_one(items[0].second)) {
        return "";
    }
    return detail::join_terms(items, plan.side, plan.k);
}

// The whole quantization formula for degree k in operator notation, e.g. for k = 2
// "⟨S, (∇_s² + (−λm)·r)f⟩ + C_{2,1}⟨Div S, ∇_s f⟩ + C_{2,2}⟨(Div² + mγ₂·i(r))S, f⟩".
inline std::string render_formula(int k)
{
    // the symbolic rendering does not depend on the numeric parameters
    const CoefficientTable table(QuantParams{3, Rational(0), Rational(0), k});
    std::string s;
    for (int l = 0; l <= k; ++l) {
        const auto sym = expand_words(Side::symbol, l, table);
        const auto den = expand_words(Side::density, k - l, table);
        const auto so = render_operators(sym);
        const auto dop = render_operators(den);
        auto apply = [](const std::string &op, const ExpansionPlan &plan, const char *arg) {
            if (op.empty()) {
                return std::string(arg);
            }
            if (plan.words.size() == 1) {
                return op + " " + arg;
            }
            return "(" + op + ")" + arg;
        };
        if (l > 0) {
            s += " + C_{" + std::to_string(k) + "," + std::to_string(l) + "}";
        }
        s += "⟨" + apply(so, sym, "S") + ", " + apply(dop, den, "f") + "⟩";
    }
    return s;
}

namespace detail
{

inline std::string latex_rational(const Rational &q)
{
    return q.get_den() == 1 ? q.get_num().get_str() : "\\frac{" + q.get_num().get_str() + "}{" + q.get_den().get_str() + "}";
}

// Signed LaTeX coefficient in X = λm (density) or X = mγ_{2k-2} (symbol), with a negative
// leading term pulled out as a sign: "-(3\lambda m+2)", "-\lambda m", "+m\gamma_{4}".
inline std::string latex_coefficient(const BetaPolynomial &beta_poly, Side side, int k)
{
    const std::string x = side == Side::density ? "\\lambda m" : "m\\gamma_{" + std::to_string(2 * k - 2) + "}";
    std::vector<std::pair<int, Rational>> terms;
    for (std::size_t n = beta_poly.size(); n-- > 0;) {
        Rational c = beta_poly[n];
        if (side == Side::density && n % 2 == 1) {
            c = -c;
        }
        if (sgn(c) != 0) {
            terms.emplace_back(static_cast<int>(n), c);
        }
    }
    if (terms.empty()) {
        return "+0";
    }
    const bool negative = sgn(terms.front().second) < 0;
    std::string body;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto &[n, c0] = terms[i];
        const Rational c = negative ? Rational(-c0) : c0;
        if (i > 0) {
            body += sgn(c) < 0 ? "-" : "+";
        } else if (sgn(c) < 0) {
            body += "-";
        }
        const Rational a = abs(c);
        if (n == 0) {
            body += latex_rational(a);
            continue;
        }
        if (a != 1) {
            body += latex_rational(a);
        }
        body += n == 1 ? x : "(" + x + ")^{" + std::to_string(n) + "}";
    }
    if (terms.size() > 1) {
        body = "(" + body + ")";
    }
    return (negative ? "-" : "+") + body;
}

inline std::string latex_power(const std::string &base, int n)
{
    return n == 1 ? base : base + "^{" + std::to_string(n) + "}";
}

inline std::string latex_operator(const NormalTerm &term, Side side)
{
    std::string op;
    if (side == Side::density) {
        std::vector<std::string> factors;
        for (int i : term.t_derivatives) {
            factors.push_back(i == 0 ? "r" : "(" + latex_power("\\nabla_{s}", i) + "r)");
        }
        if (term.trailing_d > 0) {
            factors.push_back(latex_power("\\nabla_{s}", term.trailing_d));
        }
        for (std::size_t f = 0; f < factors.size(); ++f) {
            op += (f ? "\\vee " : "") + factors[f];
        }
    } else {
        for (int i : term.t_derivatives) {
            op += i == 0 ? "i(r)" : "i(" + latex_power("\\nabla_{s}", i) + "r)";
        }
        if (term.trailing_d > 0) {
            op += latex_power("Div", term.trailing_d);
        }
    }
    return op;
}

// The operator of one plan applied to its argument, e.g. "(\nabla_{s}^{2}-\lambda m r)f".
inline std::string latex_applied(const ExpansionPlan &plan, const char *arg)
{
    const auto terms = leibniz_normalize(plan);
    std::string s;
    bool first = true;
    for (const auto &[term, coeff] : terms) {
        const std::string op = latex_operator(term, plan.side);
        std::string piece;
        if (is_one(coeff)) {
            piece = (first ? "" : "+") + op;
        } else {
            piece = latex_coefficient(coeff, plan.side, plan.k);
            if (first && piece[0] == '+') {
                piece.erase(0, 1);
            }
            piece += (op.empty() || op[0] == '(' || op[0] == '\\' || op[0] == 'i' || op[0] == 'D') ? op : " " + op;
        }
        s += piece;
        first = false;
    }
    if (s.empty()) {
        return arg;
    }
    if (terms.size() == 1) {
        return s + " " + arg;
    }
    return "(" + s + ")" + arg;
}

} // namespace detail

// The formula of render_formula in LaTeX, e.g. for k = 2
// "\langle S,(\nabla_{s}^{2}-\lambda m r)f\rangle+C_{2,1}\langle Div S,\nabla_{s} f\rangle+...".
inline std::string render_formula_latex(int k)
{
    const CoefficientTable table(QuantParams{3, Rational(0), Rational(0), k});
    std::string s;
    for (int l = 0; l <= k; ++l) {
        if (l > 0) {
            s += "+C_{" + std::to_string(k) + "," + std::to_string(l) + "}";
        }
        s += "\\langle " + detail::latex_applied(expand_words(Side::symbol, l, table), "S") + ","
             + detail::latex_applied(expand_words(Side::density, k - l, table), "f") + "\\rangle";
    }
    return s;
}

} // namespace conformq

#endif
