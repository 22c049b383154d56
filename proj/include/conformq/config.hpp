#ifndef CONFORMQ_CONFIG_HPP
#define CONFORMQ_CONFIG_HPP

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <conformq/errors.hpp>
#include <conformq/harness.hpp>
#include <conformq/jet.hpp>
#include <conformq/metric.hpp>
#include <conformq/scalar.hpp>
#include <conformq/tensor.hpp>

namespace conformq
{

// One term c * x^e of a polynomial in absolute chart coordinates.
struct PolyTerm {
    std::vector<int> exponents;
    Rational coefficient;

    friend bool operator==(const PolyTerm &, const PolyTerm &) = default;
};

using Polynomial = std::vector<PolyTerm>;

// A tensor component given by its (unordered) index tuple.
struct ComponentPoly {
    std::vector<int> indices;
    Polynomial poly;

    friend bool operator==(const ComponentPoly &, const ComponentPoly &) = default;
};

// Everything needed to evaluate one quantization at a point.
//
//   {
//     "dimension": 3, "signature": "euclidean" | "lorentzian" | [p, q],
//     "mode": "rational" | "float", "order": 2, "base_point": ["0", "0", "0"],
//     "lambda": "1/2", "mu": "1/2", "degree": 1,
//     "metric":  [{"indices": [0, 0], "terms": [{"exponents": [0, 0, 0], "coefficient": "1"}]}, ...],
//     "symbol":  [{"indices": [2], "terms": [...]}],
//     "density": [{"exponents": [1, 0, 0], "coefficient": "1"}],
//     "phi": [...], "psi": [[...], [...], [...]]
//   }
//
// Missing metric/symbol components are zero. phi and psi are optional; psi is a list of m
// polynomials in coordinates centred at the source base point and must send it to
// base_point.
struct ChartConfig {
    int dimension = 3;
    Signature signature{3, 0};
    Arithmetic mode = Arithmetic::rational;
    int order = -1;
    std::vector<Rational> base_point;
    Rational lambda = 0;
    Rational mu = 0;
    int degree = 0;
    std::vector<ComponentPoly> metric;
    std::vector<ComponentPoly> symbol;
    Polynomial density;
    std::optional<Polynomial> phi;
    std::optional<std::vector<Polynomial>> psi;

    QuantParams params() const
    {
        return QuantParams{dimension, lambda, mu, degree};
    }
    // The declared order, or the degree when none was given.
    int jet_order() const
    {
        return order < 0 ? degree : order;
    }

    friend bool operator==(const ChartConfig &, const ChartConfig &) = default;
};

namespace detail
{

inline Rational parse_coefficient(const nlohmann::json &j, Arithmetic mode, const std::string &where)
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (mode == Arithmetic::floating && s.find_first_of(".eE") != std::string::npos) {
            char *end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
                throw config_error(where + ": not a number: '" + s + "'");
            }
            return Rational(v);
        }
        try {
            return parse_rational(s);
        } catch (const config_error &e) {
            throw config_error(where + ": " + e.what());
        }
    }
    if (j.is_number_integer()) {
        return Rational(j.get<long>());
    }
    if (j.is_number_float()) {
        if (mode == Arithmetic::rational) {
            throw config_error(where + ": decimal numbers are not accepted in rational mode; write \"p/q\"");
        }
        return Rational(j.get<double>());
    }
    throw config_error(where + ": expected a rational string or a number");
}

inline nlohmann::json require(const nlohmann::json &j, const char *key, const std::string &where)
{
    if (!j.is_object() || !j.contains(key)) {
        throw config_error(where + ": missing key '" + key + "'");
    }
    return j.at(key);
}

inline Polynomial parse_polynomial(const nlohmann::json &j, int dim, Arithmetic mode, const std::string &where)
{
    if (!j.is_array()) {
        throw config_error(where + ": polynomial must be a list of terms");
    }
    Polynomial p;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto w = where + "[" + std::to_string(i) + "]";
        const auto ex = require(j[i], "exponents", w);
        if (!ex.is_array() || static_cast<int>(ex.size()) != dim) {
            throw config_error(w + ": exponents must list " + std::to_string(dim) + " integers");
        }
        PolyTerm t;
        for (const auto &e : ex) {
            if (!e.is_number_integer() || e.get<int>() < 0) {
                throw config_error(w + ": exponents must be non-negative integers");
            }
            t.exponents.push_back(e.get<int>());
        }
        t.coefficient = parse_coefficient(require(j[i], "coefficient", w), mode, w + ".coefficient");
        p.push_back(std::move(t));
    }
    return p;
}

inline std::vector<ComponentPoly> parse_components(const nlohmann::json &j, int dim, int rank, Arithmetic mode,
                                                   const std::string &where)
{
    if (!j.is_array()) {
        throw config_error(where + ": expected a list of components");
    }
    std::vector<ComponentPoly> out;
    std::set<std::vector<int>> seen;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto w = where + "[" + std::to_string(i) + "]";
        ComponentPoly c;
        const auto idx = require(j[i], "indices", w);
        if (!idx.is_array() || static_cast<int>(idx.size()) != rank) {
            throw config_error(w + ": expected " + std::to_string(rank) + " indices");
        }
        for (const auto &x : idx) {
            if (!x.is_number_integer() || x.get<int>() < 0 || x.get<int>() >= dim) {
                throw config_error(w + ": indices must be integers in [0, " + std::to_string(dim) + ")");
            }
            c.indices.push_back(x.get<int>());
        }
        auto key = c.indices;
        std::sort(key.begin(), key.end());
        if (!seen.insert(key).second) {
            throw config_error(w + ": component given twice");
        }
        c.poly = parse_polynomial(require(j[i], "terms", w), dim, mode, w + ".terms");
        out.push_back(std::move(c));
    }
    return out;
}

inline Signature parse_signature(const nlohmann::json &j, int dim)
{
    if (j.is_string()) {
        return signature_of(parse_signature_profile(j.get<std::string>()), dim);
    }
    if (j.is_array() && j.size() == 2 && j[0].is_number_integer() && j[1].is_number_integer()) {
        Signature s{j[0].get<int>(), j[1].get<int>()};
        if (s.positive < 0 || s.negative < 0 || s.positive + s.negative != dim) {
            throw config_error("signature: [p, q] must be non-negative with p + q = dimension");
        }
        return s;
    }
    throw config_error("signature: expected \"euclidean\", \"lorentzian\" or [p, q]");
}

inline nlohmann::json polynomial_json(const Polynomial &p)
{
    auto a = nlohmann::json::array();
    for (const auto &t : p) {
        a.push_back({{"exponents", t.exponents}, {"coefficient", t.coefficient.get_str()}});
    }
    return a;
}

inline nlohmann::json components_json(const std::vector<ComponentPoly> &cs)
{
    auto a = nlohmann::json::array();
    for (const auto &c : cs) {
        a.push_back({{"indices", c.indices}, {"terms", polynomial_json(c.poly)}});
    }
    return a;
}

template <typename S>
std::vector<std::pair<std::vector<int>, S>> terms_as(const Polynomial &p)
{
    std::vector<std::pair<std::vector<int>, S>> t;
    for (const auto &x : p) {
        t.emplace_back(x.exponents, scalar_traits<S>::from_rational(x.coefficient));
    }
    return t;
}

} // namespace detail

inline ChartConfig parse_config(const nlohmann::json &j)
{
    if (!j.is_object()) {
        throw config_error("config: top level must be an object");
    }
    ChartConfig c;
    const auto dim = detail::require(j, "dimension", "config");
    if (!dim.is_number_integer() || dim.get<int>() < 3) {
        throw config_error("config.dimension: must be an integer >= 3");
    }
    c.dimension = dim.get<int>();
    c.signature = j.contains("signature") ? detail::parse_signature(j.at("signature"), c.dimension)
                                          : Signature{c.dimension, 0};
    if (j.contains("mode")) {
        if (!j.at("mode").is_string()) {
            throw config_error("config.mode: expected a string");
        }
        try {
            c.mode = parse_arithmetic(j.at("mode").get<std::string>());
        } catch (const config_error &e) {
            throw config_error(std::string("config.mode: ") + e.what());
        }
    }
    if (j.contains("order")) {
        if (!j.at("order").is_number_integer() || j.at("order").get<int>() < 0) {
            throw config_error("config.order: must be a non-negative integer");
        }
        c.order = j.at("order").get<int>();
    }
    const auto deg = detail::require(j, "degree", "config");
    if (!deg.is_number_integer() || deg.get<int>() < 0) {
        throw config_error("config.degree: must be a non-negative integer");
    }
    c.degree = deg.get<int>();
    c.lambda = detail::parse_coefficient(detail::require(j, "lambda", "config"), c.mode, "config.lambda");
    c.mu = detail::parse_coefficient(detail::require(j, "mu", "config"), c.mode, "config.mu");
    if (j.contains("base_point")) {
        const auto &bp = j.at("base_point");
        if (!bp.is_array() || static_cast<int>(bp.size()) != c.dimension) {
            throw config_error("config.base_point: expected " + std::to_string(c.dimension) + " coordinates");
        }
        for (std::size_t i = 0; i < bp.size(); ++i) {
            c.base_point.push_back(
                detail::parse_coefficient(bp[i], c.mode, "config.base_point[" + std::to_string(i) + "]"));
        }
    } else {
        c.base_point.assign(static_cast<std::size_t>(c.dimension), Rational(0));
    }
    c.metric = detail::parse_components(detail::require(j, "metric", "config"), c.dimension, 2, c.mode, "config.metric");
    c.symbol = detail::parse_components(detail::require(j, "symbol", "config"), c.dimension, c.degree, c.mode,
                                        "config.symbol");
    c.density = detail::parse_polynomial(detail::require(j, "density", "config"), c.dimension, c.mode, "config.density");
    if (j.contains("phi")) {
        c.phi = detail::parse_polynomial(j.at("phi"), c.dimension, c.mode, "config.phi");
    }
    if (j.contains("psi")) {
        const auto &ps = j.at("psi");
        if (!ps.is_array() || static_cast<int>(ps.size()) != c.dimension) {
            throw config_error("config.psi: expected " + std::to_string(c.dimension) + " polynomials");
        }
        std::vector<Polynomial> v;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            v.push_back(detail::parse_polynomial(ps[i], c.dimension, c.mode, "config.psi[" + std::to_string(i) + "]"));
        }
        c.psi = std::move(v);
    }
    return c;
}

inline ChartConfig parse_config(const std::string &text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline ChartConfig load_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in) {
        throw config_error("config: cannot open '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// Serializes with every number as an exact "p/q" string, so parsing the result gives back
// an equal config.
inline nlohmann::json to_json(const ChartConfig &c)
{
    nlohmann::json j;
    j["dimension"] = c.dimension;
    j["signature"] = {c.signature.positive, c.signature.negative};
    j["mode"] = to_string(c.mode);
    if (c.order >= 0) {
        j["order"] = c.order;
    }
    auto bp = nlohmann::json::array();
    for (const auto &x : c.base_point) {
        bp.push_back(x.get_str());
    }
    j["base_point"] = bp;
    j["lambda"] = c.lambda.get_str();
    j["mu"] = c.mu.get_str();
    j["degree"] = c.degree;
    j["metric"] = detail::components_json(c.metric);
    j["symbol"] = detail::components_json(c.symbol);
    j["density"] = detail::polynomial_json(c.density);
    if (c.phi) {
        j["phi"] = detail::polynomial_json(*c.phi);
    }
    if (c.psi) {
        auto a = nlohmann::json::array();
        for (const auto &p : *c.psi) {
            a.push_back(detail::polynomial_json(p));
        }
        j["psi"] = a;
    }
    return j;
}

// Jets built from a config, at its base point and order.
template <typename S>
struct ChartData {
    MetricJet<S> g;
    SymTensor<S> s;
    SymTensor<S> f;
    std::optional<Jet<S>> phi;
    std::optional<ChartDiffeo<S>> psi;
};

namespace detail
{

template <typename S>
SymTensor<S> components_tensor(const std::vector<ComponentPoly> &cs, int dim, int rank, Variance var,
                               const Rational &weight, int order, const std::vector<S> &point)
{
    const auto &idx = SymIndexSet::get(dim, rank);
    std::vector<Jet<S>> comps(idx.size(), Jet<S>(dim, order));
    for (const auto &c : cs) {
        comps[idx.index_of(c.indices)] = polynomial_jet(dim, order, terms_as<S>(c.poly), point);
    }
    return SymTensor<S>(dim, rank, var, weight, std::move(comps));
}

} // namespace detail

template <typename S>
ChartData<S> build_chart(const ChartConfig &c, int order_override = -1)
{
    const int m = c.dimension;
    const int n = order_override >= 0 ? order_override : c.jet_order();
    std::vector<S> point;
    for (const auto &x : c.base_point) {
        point.push_back(scalar_traits<S>::from_rational(x));
    }
    MetricJet<S> g(detail::components_tensor<S>(c.metric, m, 2, Variance::covariant, 0, n, point), c.signature);
    auto s = detail::components_tensor<S>(c.symbol, m, c.degree, Variance::contravariant, c.mu - c.lambda, n, point);
    auto f = SymTensor<S>::scalar(polynomial_jet(m, n, detail::terms_as<S>(c.density), point), c.lambda);
    ChartData<S> d{std::move(g), std::move(s), std::move(f), std::nullopt, std::nullopt};
    if (c.phi) {
        d.phi = polynomial_jet(m, n, detail::terms_as<S>(*c.phi), point);
    }
    if (c.psi) {
        std::vector<Jet<S>> psi;
        const std::vector<S> origin(static_cast<std::size_t>(m), S(0));
        for (const auto &p : *c.psi) {
            // source coordinates are centred at the source base point; values are absolute
            psi.push_back(polynomial_jet(m, n + 1, detail::terms_as<S>(p), origin));
        }
        d.psi.emplace(std::move(psi), point);
    }
    return d;
}

} // namespace conformq

#endif
