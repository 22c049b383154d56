#ifndef CONFORMQ_SCALAR_HPP
#define CONFORMQ_SCALAR_HPP

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>

#include <gmp.h>
#include <gmpxx.h>

#include <conformq/errors.hpp>

namespace conformq
{

using Rational = mpq_class;

// Parses "p", "-p" or "p/q". Decimal notation is rejected: exactness has to survive
// serialization.
inline Rational parse_rational(std::string_view text)
{
    std::string s(text);
    auto trim = [](std::string &t) {
        const auto b = t.find_first_not_of(" \t");
        const auto e = t.find_last_not_of(" \t");
        t = b == std::string::npos ? std::string{} : t.substr(b, e - b + 1);
    };
    trim(s);
    if (s.empty()) {
        throw config_error("empty rational literal");
    }
    const auto slash = s.find('/');
    auto valid_int = [](std::string_view t, bool allow_sign) {
        if (t.empty()) {
            return false;
        }
        std::size_t i = 0;
        if (allow_sign && (t[0] == '-' || t[0] == '+')) {
            i = 1;
        }
        if (i == t.size()) {
            return false;
        }
        for (; i < t.size(); ++i) {
            if (t[i] < '0' || t[i] > '9') {
                return false;
            }
        }
        return true;
    };
    std::string num = slash == std::string::npos ? s : s.substr(0, slash);
    std::string den = slash == std::string::npos ? std::string("1") : s.substr(slash + 1);
    if (!valid_int(num, true) || !valid_int(den, false)) {
        throw config_error("not an exact rational literal: '" + s + "'");
    }
    if (num[0] == '+') {
        num.erase(0, 1);
    }
    Rational q;
    mpz_class n(num, 10), d(den, 10);
    if (d == 0) {
        throw config_error("zero denominator in rational literal: '" + s + "'");
    }
    q = Rational(n, d);
    q.canonicalize();
    return q;
}

// n/d in canonical form (mpq_class(n, d) alone does not reduce or fix signs).
inline Rational ratio(long n, long d)
{
    if (d == 0) {
        throw domain_error("ratio: zero denominator");
    }
    Rational q(n, d);
    q.canonicalize();
    return q;
}

inline std::string to_string(const Rational &q)
{
    return q.get_str();
}

namespace detail
{

// Exact q-th root of a non-negative integer, if it exists.
inline bool exact_root(mpz_class &out, const mpz_class &x, unsigned long q)
{
    return mpz_root(out.get_mpz_t(), x.get_mpz_t(), q) != 0;
}

} // namespace detail

// x^e for x > 0 and rational e, when the result is rational.
inline Rational rational_pow(const Rational &x, const Rational &e)
{
    if (sgn(x) <= 0) {
        throw domain_error("rational_pow: base must be positive");
    }
    if (sgn(e) == 0) {
        return Rational(1);
    }
    const mpz_class &p = e.get_num();
    const mpz_class &q = e.get_den();
    if (!q.fits_ulong_p() || !p.fits_slong_p()) {
        throw domain_error("rational_pow: exponent too large");
    }
    mpz_class rn, rd;
    if (!detail::exact_root(rn, x.get_num(), q.get_ui()) || !detail::exact_root(rd, x.get_den(), q.get_ui())) {
        throw exactness_error("(" + x.get_str() + ")^(" + e.get_str() + ") is not rational");
    }
    long pe = p.get_si();
    const bool neg = pe < 0;
    const unsigned long up = static_cast<unsigned long>(neg ? -pe : pe);
    mpz_class n, d;
    mpz_pow_ui(n.get_mpz_t(), rn.get_mpz_t(), up);
    mpz_pow_ui(d.get_mpz_t(), rd.get_mpz_t(), up);
    Rational r = neg ? Rational(d, n) : Rational(n, d);
    r.canonicalize();
    return r;
}

// Per-scalar policy. Rational mode is exact; float mode compares with a tolerance.
template <typename T>
struct scalar_traits;

template <>
struct scalar_traits<Rational> {
    static constexpr bool exact = true;
    static constexpr const char *name = "rational";

    static Rational from_rational(const Rational &q)
    {
        return q;
    }
    static bool is_zero(const Rational &x)
    {
        return sgn(x) == 0;
    }
    static int sign(const Rational &x)
    {
        return sgn(x);
    }
    static double to_double(const Rational &x)
    {
        return x.get_d();
    }
    static std::string str(const Rational &x)
    {
        return x.get_str();
    }
    static Rational abs(const Rational &x)
    {
        return ::abs(x);
    }
    // acc += a * b, with tmp as scratch.
    static void add_product(Rational &acc, const Rational &a, const Rational &b, Rational &tmp)
    {
        mpq_mul(tmp.get_mpq_t(), a.get_mpq_t(), b.get_mpq_t());
        mpq_add(acc.get_mpq_t(), acc.get_mpq_t(), tmp.get_mpq_t());
    }
    static Rational exp_const(const Rational &x)
    {
        if (sgn(x) != 0) {
            throw exactness_error("exp(" + x.get_str() + ") is not rational; use a zero constant term in rational mode");
        }
        return Rational(1);
    }
    static Rational pow_const(const Rational &x, const Rational &e)
    {
        return rational_pow(x, e);
    }
};

template <>
struct scalar_traits<double> {
    static constexpr bool exact = false;
    static constexpr const char *name = "float";

    static double from_rational(const Rational &q)
    {
        return q.get_d();
    }
    static bool is_zero(double x)
    {
        return x == 0.0;
    }
    static int sign(double x)
    {
        return (x > 0) - (x < 0);
    }
    static double to_double(double x)
    {
        return x;
    }
    static std::string str(double x)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    }
    static double abs(double x)
    {
        return std::fabs(x);
    }
    static void add_product(double &acc, double a, double b, double &)
    {
        acc += a * b;
    }
    static double exp_const(double x)
    {
        return std::exp(x);
    }
    static double pow_const(double x, const Rational &e)
    {
        if (x <= 0) {
            throw domain_error("pow: base must be positive");
        }
        return std::pow(x, e.get_d());
    }
};

} // namespace conformq

#endif
