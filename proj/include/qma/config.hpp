#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qma/error.hpp"
#include "qma/expression.hpp"
#include "qma/grid.hpp"
#include "qma/random.hpp"
#include "qma/regularization.hpp"
#include "qma/solver.hpp"

namespace qma {

using Json = nlohmann::json;

/// Flat run configuration. Expressions are kept as text and compiled on use.
struct Config {
    std::size_t n = 1;
    std::string domain_type = "ball";
    std::vector<double> center;
    double radius = 1.0;
    std::vector<double> lower, upper;

    std::optional<std::string> f_text, g_text, exact_text;
    std::optional<double> t_min, t_max;

    SolverOptions solver;
    std::uint64_t seed = 1;

    std::string csv_output = "solution.csv";
    std::string report_output = "report.json";

    std::optional<std::string> matrix_file;

    std::optional<std::string> psh_field;
    std::size_t psh_samples = 100;
    double psh_tol = 1e-8;
    double psh_radius = 1.0;

    std::optional<std::string> convolve_field;
    std::string convolve_kind = "sup";
    double delta = 0.2;
    double a_const = 2.0;
    std::string convolve_output = "convolution.csv";

    std::size_t property_trials = 100;

    Json source;  // the document as read, after command-line overrides
};

namespace detail {

inline const std::set<std::string>& config_keys() {
    static const std::set<std::string> keys{
        "n",          "domain",        "center",       "radius",         "lower",          "upper",
        "grid_points", "stencil_radius", "F",          "g",              "exact",          "t_min",
        "t_max",      "tol",           "max_iter",     "tau_factor",     "richness",       "init",
        "threads",    "seed",          "csv_output",   "report_output",  "matrix_file",    "psh_field",
        "psh_samples", "psh_tol",      "psh_radius",   "convolve_field", "convolve_kind",  "delta",
        "A",          "convolve_output", "property_trials"};
    return keys;
}

template <class T>
T get_key(const Json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("config key '") + key + "': " + e.what());
    }
}

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = get_key<T>(j, key);
}

template <class T>
void read_opt(const Json& j, const char* key, std::optional<T>& out) {
    if (j.contains(key)) out = get_key<T>(j, key);
}

inline std::size_t read_count(const Json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto v = get_key<std::int64_t>(j, key);
    if (v < 0) throw InputError(std::string("config key '") + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

}  // namespace detail

/// Parses and type-checks a config document (expressions are parsed too).
inline Config parse_config(const Json& j) {
    if (!j.is_object()) throw InputError("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!detail::config_keys().count(key)) throw InputError("unknown config key '" + key + "'");

    Config c;
    c.source = j;
    c.n = detail::read_count(j, "n", 1);
    if (c.n == 0) throw InputError("config key 'n' must be >= 1");
    const std::size_t dim = 4 * c.n;
    detail::read_opt(j, "domain", c.domain_type);
    c.center.assign(dim, 0.0);
    detail::read_opt(j, "center", c.center);
    detail::read_opt(j, "radius", c.radius);
    c.lower.assign(dim, -1.0);
    c.upper.assign(dim, 1.0);
    detail::read_opt(j, "lower", c.lower);
    detail::read_opt(j, "upper", c.upper);
    if (c.domain_type != "ball" && c.domain_type != "box")
        throw InputError("config key 'domain' must be \"ball\" or \"box\"");
    if (c.center.size() != dim || c.lower.size() != dim || c.upper.size() != dim)
        throw InputError("domain vectors must have 4n = " + std::to_string(dim) + " entries");

    detail::read_opt(j, "F", c.f_text);
    detail::read_opt(j, "g", c.g_text);
    detail::read_opt(j, "exact", c.exact_text);
    detail::read_opt(j, "t_min", c.t_min);
    detail::read_opt(j, "t_max", c.t_max);
    if (c.t_min && c.t_max && !(*c.t_min < *c.t_max)) throw InputError("t_min must be smaller than t_max");

    c.solver.points = detail::read_count(j, "grid_points", c.solver.points);
    detail::read_opt(j, "stencil_radius", c.solver.stencil_radius);
    detail::read_opt(j, "tol", c.solver.tol);
    c.solver.max_iter = detail::read_count(j, "max_iter", c.solver.max_iter);
    detail::read_opt(j, "tau_factor", c.solver.tau_factor);
    c.solver.richness = static_cast<int>(detail::read_count(j, "richness", static_cast<std::size_t>(c.solver.richness)));
    if (j.contains("init")) c.solver.init = init_kind_from_string(detail::get_key<std::string>(j, "init"));
    c.solver.threads = static_cast<unsigned>(detail::read_count(j, "threads", c.solver.threads));
    if (c.solver.points < 3) throw InputError("grid_points must be >= 3");
    if (!(c.solver.stencil_radius >= 1.0)) throw InputError("stencil_radius must be >= 1");
    if (!(c.solver.tol > 0.0)) throw InputError("tol must be positive");
    if (!(c.solver.tau_factor > 0.0)) throw InputError("tau_factor must be positive");
    if (c.solver.max_iter == 0) throw InputError("max_iter must be positive");
    if (c.solver.threads == 0) c.solver.threads = 1;

    if (j.contains("seed")) c.seed = detail::get_key<std::uint64_t>(j, "seed");
    detail::read_opt(j, "csv_output", c.csv_output);
    detail::read_opt(j, "report_output", c.report_output);
    detail::read_opt(j, "matrix_file", c.matrix_file);
    detail::read_opt(j, "psh_field", c.psh_field);
    c.psh_samples = detail::read_count(j, "psh_samples", c.psh_samples);
    detail::read_opt(j, "psh_tol", c.psh_tol);
    detail::read_opt(j, "psh_radius", c.psh_radius);
    detail::read_opt(j, "convolve_field", c.convolve_field);
    detail::read_opt(j, "convolve_kind", c.convolve_kind);
    detail::read_opt(j, "delta", c.delta);
    detail::read_opt(j, "A", c.a_const);
    detail::read_opt(j, "convolve_output", c.convolve_output);
    c.property_trials = detail::read_count(j, "property_trials", c.property_trials);
    if (c.convolve_kind != "sup" && c.convolve_kind != "inf")
        throw InputError("config key 'convolve_kind' must be \"sup\" or \"inf\"");

    const ExpressionContext with_t{c.n, true}, without_t{c.n, false};
    auto check_expr = [](const std::optional<std::string>& text, const char* key, ExpressionContext ctx) {
        if (!text) return;
        try {
            parse_expression(*text, ctx);
        } catch (const ExpressionError& e) {
            throw InputError(std::string("expression '") + key + "': " + e.what());
        }
    };
    check_expr(c.f_text, "F", with_t);
    check_expr(c.g_text, "g", without_t);
    check_expr(c.exact_text, "exact", without_t);
    check_expr(c.psh_field, "psh_field", without_t);
    check_expr(c.convolve_field, "convolve_field", without_t);
    return c;
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open config file: " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("config file " + path + " is not valid JSON: " + e.what());
    }
}

inline Domain make_domain(const Config& c) {
    return c.domain_type == "ball" ? Domain::ball(c.center, c.radius) : Domain::box(c.lower, c.upper);
}

inline Expression compile_field(const std::string& text, std::size_t n) { return parse_expression(text, {n, false}); }

inline std::function<double(std::span<const double>)> as_function(const Expression& e) {
    return [e](std::span<const double> x) { return e(x, 0.0); };
}

inline RhsFunction make_rhs(const Config& c) {
    if (!c.f_text) throw InputError("config key 'F' is required");
    const Expression e = parse_expression(*c.f_text, {c.n, true});
    return {c.n, [e](std::span<const double> x, double t) { return e(x, t); }};
}

/// Uniform points in the domain (rejection sampling inside the bounding box).
inline std::vector<std::vector<double>> sample_domain(const Domain& d, std::size_t count, Rng& rng) {
    const auto lo = d.bbox_lower(), hi = d.bbox_upper();
    std::vector<std::vector<double>> out;
    std::vector<double> x(d.dim());
    std::size_t attempts = 0;
    while (out.size() < count) {
        if (++attempts > 1000 * (count + 1)) throw InputError("cannot sample points inside the domain");
        for (std::size_t a = 0; a < x.size(); ++a) x[a] = std::uniform_real_distribution<double>(lo[a], hi[a])(rng);
        if (d.signed_distance(x) >= 0.0) out.push_back(x);
    }
    return out;
}

/// Range of t used to validate F: t_min / t_max from the config, otherwise the
/// range of g over the sampled domain widened by 1 on each side.
inline std::pair<double, double> validation_t_range(const Config& c, const std::vector<std::vector<double>>& pts) {
    double lo = -1.0, hi = 1.0;
    if (c.g_text) {
        const Expression g = compile_field(*c.g_text, c.n);
        lo = std::numeric_limits<double>::infinity();
        hi = -lo;
        for (const auto& x : pts) {
            const double v = g(x);
            if (!std::isfinite(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!(lo <= hi)) lo = hi = 0.0;
        lo -= 1.0;
        hi += 1.0;
    }
    return {c.t_min.value_or(lo), c.t_max.value_or(hi)};
}

/// Samples 200 (q, t1 < t2) pairs: F must be finite, >= 0, and F(q, t1) <= F(q, t2).
/// Also checks g (and exact) are finite on the sampled points.
inline void validate_problem(const Config& c) {
    const Domain dom = make_domain(c);
    Rng rng(c.seed);
    const auto pts = sample_domain(dom, 200, rng);
    if (c.g_text) {
        const Expression g = compile_field(*c.g_text, c.n);
        for (const auto& x : pts)
            if (!std::isfinite(g(x))) throw InputError("g is not finite at a sampled domain point");
    }
    if (c.exact_text) {
        const Expression ex = compile_field(*c.exact_text, c.n);
        for (const auto& x : pts)
            if (!std::isfinite(ex(x))) throw InputError("exact is not finite at a sampled domain point");
    }
    if (!c.f_text) return;
    const Expression f = parse_expression(*c.f_text, {c.n, true});
    const auto [tlo, thi] = validation_t_range(c, pts);
    std::uniform_real_distribution<double> ut(tlo, thi);
    for (const auto& x : pts) {
        double t1 = ut(rng), t2 = ut(rng);
        if (t1 > t2) std::swap(t1, t2);
        const double f1 = f(x, t1), f2 = f(x, t2);
        for (auto [t, v] : {std::pair{t1, f1}, std::pair{t2, f2}}) {
            if (!std::isfinite(v)) throw InputError("F is not finite at a sampled point (t = " + std::to_string(t) + ")");
            if (v < 0.0) {
                std::ostringstream os;
                os << "F must be nonnegative: F = " << v << " at t = " << t;
                throw InputError(os.str());
            }
        }
        if (f1 > f2 + 1e-12 * (1.0 + std::abs(f2))) {
            std::ostringstream os;
            os << "F must be non-decreasing in t: F(q, " << t1 << ") = " << f1 << " > F(q, " << t2 << ") = " << f2;
            throw InputError(os.str());
        }
    }
}

inline DirichletProblem make_problem(const Config& c) {
    if (!c.g_text) throw InputError("config key 'g' is required");
    DirichletProblem p;
    p.n = c.n;
    p.domain = make_domain(c);
    p.g = as_function(compile_field(*c.g_text, c.n));
    p.f = make_rhs(c);
    if (c.exact_text) p.exact = as_function(compile_field(*c.exact_text, c.n));
    return p;
}

inline Json report_to_json(const SolveReport& r, const Json& config_echo) {
    Json j;
    j["iterations"] = r.iterations;
    j["residual"] = r.residual;
    j["residual_history"] = r.residual_history;
    j["linf_error"] = r.linf_error ? Json(*r.linf_error) : Json(nullptr);
    j["converged"] = r.converged;
    j["tau"] = r.tau;
    j["tau_max"] = r.tau_max;
    j["directions"] = r.directions;
    j["interior_nodes"] = r.interior_nodes;
    j["boundary_nodes"] = r.boundary_nodes;
    j["config_echo"] = config_echo;
    return j;
}

}  // namespace qma
