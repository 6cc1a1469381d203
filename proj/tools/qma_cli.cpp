#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "qma/config.hpp"
#include "qma/differential.hpp"
#include "qma/error.hpp"
#include "qma/grid.hpp"
#include "qma/hyperhermitian.hpp"
#include "qma/properties.hpp"
#include "qma/random.hpp"
#include "qma/regularization.hpp"
#include "qma/solver.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string output_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string matrix_path;
};

qma::Config load_config(const GlobalOptions& g) {
    qma::Json doc = g.config_path.empty() ? qma::Json::object() : qma::read_json_file(g.config_path);
    if (!doc.is_object()) throw qma::InputError("config must be a JSON object");
    if (g.seed) doc["seed"] = *g.seed;
    if (g.threads) {
        if (*g.threads < 1) throw qma::InputError("--threads must be >= 1");
        doc["threads"] = *g.threads;
    }
    return qma::parse_config(doc);
}

fs::path output_path(const GlobalOptions& g, const std::string& name) {
    fs::path dir(g.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw qma::InputError("cannot create output directory " + g.output_dir + ": " + ec.message());
    return dir / name;
}

fs::path resolve_relative(const GlobalOptions& g, const std::string& p) {
    fs::path path(p);
    if (path.is_relative() && !g.config_path.empty()) path = fs::path(g.config_path).parent_path() / path;
    return path;
}

int cmd_validate(const GlobalOptions& g) {
    const qma::Config c = load_config(g);
    qma::validate_problem(c);
    if (c.f_text && c.g_text) qma::setup_grid_function(qma::make_problem(c), c.solver);
    std::cout << "config OK\n";
    return 0;
}

int cmd_solve(const GlobalOptions& g) {
    const qma::Config c = load_config(g);
    qma::validate_problem(c);
    const qma::DirichletProblem p = qma::make_problem(c);
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = qma::solve_dirichlet(p, c.solver);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path csv = output_path(g, c.csv_output);
    qma::write_csv_file(csv.string(), result.u);
    const fs::path report = output_path(g, c.report_output);
    {
        std::ofstream out(report, std::ios::binary);
        if (!out) throw qma::InputError("cannot write report: " + report.string());
        out << std::setw(2) << qma::report_to_json(result.report, c.source) << '\n';
    }

    const auto& r = result.report;
    std::cout << "iterations   " << r.iterations << '\n'
              << "residual     " << r.residual << '\n'
              << "converged    " << (r.converged ? "yes" : "no") << '\n';
    if (r.linf_error) std::cout << "linf_error   " << *r.linf_error << '\n';
    std::cout << "directions   " << r.directions << '\n'
              << "interior     " << r.interior_nodes << '\n'
              << "seconds      " << seconds << '\n'
              << "csv          " << csv.string() << '\n'
              << "report       " << report.string() << '\n';
    if (!r.converged) {
        std::cerr << "error: solver did not converge within max_iter = " << c.solver.max_iter << '\n';
        return 2;
    }
    return 0;
}

int cmd_moore_det(const GlobalOptions& g) {
    std::string path = g.matrix_path;
    if (path.empty()) {
        const qma::Config c = load_config(g);
        if (!c.matrix_file) throw qma::InputError("moore-det needs --matrix or the config key 'matrix_file'");
        path = resolve_relative(g, *c.matrix_file).string();
    }
    const qma::HyperhermitianMatrix x = qma::read_matrix_file(path);
    const auto spec = qma::q_eigenvalues(x);
    double product = 1.0;
    for (double v : spec.values) product *= v;
    std::cout << std::setprecision(17);
    std::cout << "n                " << x.size() << '\n';
    std::cout << "eigenvalues     ";
    for (double v : spec.values) std::cout << ' ' << v;
    std::cout << '\n' << "eigenvalue_path  " << product << '\n';
    if (x.size() <= 4)
        std::cout << "oracle_path      " << qma::moore_det_oracle(x) << '\n';
    else
        std::cout << "oracle_path      n/a (n > 4)\n";
    return 0;
}

int cmd_psh_check(const GlobalOptions& g) {
    const qma::Config c = load_config(g);
    const std::optional<std::string> text = c.psh_field ? c.psh_field : c.g_text;
    if (!text) throw qma::InputError("psh-check needs the config key 'psh_field'");
    const qma::Expression e = qma::compile_field(*text, c.n);
    qma::ScalarField u;
    u.n = c.n;
    u.value = qma::as_function(e);
    qma::Rng rng(c.seed);
    std::vector<qma::QPoint> samples;
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    const std::size_t dim = 4 * c.n;
    for (std::size_t s = 0; s < c.psh_samples; ++s) {
        std::vector<double> x(dim);
        double norm = 0.0;
        for (auto& v : x) {
            v = nd(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        const double r = c.psh_radius * std::pow(ud(rng), 1.0 / static_cast<double>(dim));
        for (std::size_t a = 0; a < dim; ++a) x[a] = c.center[a] + (norm > 0.0 ? x[a] * r / norm : 0.0);
        samples.push_back(qma::real_unembed_point(std::span<const double>(x)));
    }
    const auto res = qma::psh_check(u, samples, c.psh_tol);
    std::cout << std::setprecision(12);
    std::cout << "field            " << e.to_string() << '\n'
              << "samples          " << samples.size() << '\n'
              << "plurisubharmonic " << (res.plurisubharmonic ? "yes" : "no") << '\n'
              << "min_eigenvalue   " << res.min_eigenvalue << '\n';
    if (res.witness) {
        std::cout << "witness         ";
        for (double v : qma::real_embed_point(*res.witness)) std::cout << ' ' << v;
        std::cout << '\n';
    }
    return 0;
}

int cmd_convolve(const GlobalOptions& g) {
    const qma::Config c = load_config(g);
    const std::optional<std::string> text = c.convolve_field ? c.convolve_field : c.g_text;
    if (!text) throw qma::InputError("convolve needs the config key 'convolve_field'");
    const qma::Expression e = qma::compile_field(*text, c.n);
    const qma::Domain dom = qma::make_domain(c);
    const qma::Grid grid = qma::make_grid(dom, c.solver.points);
    const auto f = qma::sample(grid, dom, [&](std::span<const double> x) {
        const double v = e(x);
        if (!std::isfinite(v)) throw qma::InputError("convolve_field is not finite on the grid");
        return v;
    });
    const auto out = c.convolve_kind == "sup" ? qma::sup_convolution(f, c.delta, c.a_const)
                                              : qma::inf_convolution(f, c.delta, c.a_const);
    const fs::path csv = output_path(g, c.convolve_output);
    qma::write_csv_file(csv.string(), out);
    std::size_t kept = 0;
    for (auto k : out.mask) kept += k == qma::NodeKind::Interior;
    std::cout << "kind        " << c.convolve_kind << '\n'
              << "oscillation " << qma::oscillation(f) << '\n'
              << "nodes       " << kept << '\n'
              << "csv         " << csv.string() << '\n';
    return 0;
}

int cmd_properties(const GlobalOptions& g) {
    const qma::Config c = load_config(g);
    const auto results = qma::run_properties(c.seed, c.property_trials);
    std::cout << "seed " << c.seed << ", trials " << c.property_trials << '\n' << qma::format_properties(results);
    for (const auto& r : results)
        if (!r.passed) return 2;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qma: quaternionic Monge-Ampere toolkit"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config_path, "Config JSON file");
    app.add_option("--output-dir", g.output_dir, "Directory for CSV / JSON artifacts");
    app.add_option("--seed", g.seed, "RNG seed (overrides the config)");
    app.add_option("--threads", g.threads, "Solver threads (overrides the config)");

    auto* solve = app.add_subcommand("solve", "Solve the Dirichlet problem; write CSV and report JSON");
    auto* det = app.add_subcommand("moore-det", "Moore determinant of a matrix file by both paths");
    det->add_option("--matrix", g.matrix_path, "Matrix file (overrides the config key matrix_file)");
    auto* psh = app.add_subcommand("psh-check", "Sampled plurisubharmonicity check of a field");
    auto* conv = app.add_subcommand("convolve", "Sup/inf-convolution of a field; write CSV");
    auto* validate = app.add_subcommand("validate", "Lint a config");
    auto* props = app.add_subcommand("properties", "Run the seeded invariant suites");
    for (auto* sub : {solve, det, psh, conv, validate, props}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*solve) return cmd_solve(g);
        if (*det) return cmd_moore_det(g);
        if (*psh) return cmd_psh_check(g);
        if (*conv) return cmd_convolve(g);
        if (*validate) return cmd_validate(g);
        if (*props) return cmd_properties(g);
    } catch (const qma::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const qma::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
