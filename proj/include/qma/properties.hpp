#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qma/differential.hpp"
#include "qma/expression.hpp"
#include "qma/grid.hpp"
#include "qma/hyperhermitian.hpp"
#include "qma/quaternion.hpp"
#include "qma/random.hpp"
#include "qma/regularization.hpp"
#include "qma/solver.hpp"

namespace qma {

struct PropertyOutcome {
    std::string name;
    bool passed = false;
    double worst = 0.0;  // largest observed violation (0 when none)
    std::string detail;
};

/// Seeded invariant suites; `trials` scales the random sample counts.
inline std::vector<PropertyOutcome> run_properties(std::uint64_t seed, std::size_t trials) {
    std::vector<PropertyOutcome> out;
    auto record = [&](std::string name, double worst, double bound, std::string detail = {}) {
        out.push_back({std::move(name), worst <= bound, worst, std::move(detail)});
    };
    const std::size_t t = std::max<std::size_t>(trials, 1);

    {
        Rng rng(seed);
        double worst = 0.0;
        for (std::size_t k = 0; k < t; ++k) {
            const auto a = random_quaternion(rng), b = random_quaternion(rng), c = random_quaternion(rng);
            worst = std::max(worst, ((a * b) * c - a * (b * c)).norm() / (1.0 + a.norm() * b.norm() * c.norm()));
            worst = std::max(worst, std::abs((a * b).norm() - a.norm() * b.norm()) / (1.0 + a.norm() * b.norm()));
            worst = std::max(worst, ((a * b).conj() - b.conj() * a.conj()).norm() / (1.0 + a.norm() * b.norm()));
        }
        record("quaternion_algebra", worst, 1e-14);
    }
    {
        Rng rng(seed + 1);
        double worst = 0.0;
        for (std::size_t n = 1; n <= 4; ++n)
            for (std::size_t k = 0; k < t; ++k) {
                const auto x = random_hyperhermitian(rng, n);
                const double d = moore_det(x), o = moore_det_oracle(x);
                worst = std::max(worst, std::abs(d - o) / std::max(1.0, std::abs(o)));
            }
        record("moore_det_oracle_agreement", worst, 1e-9, "n = 1..4");
    }
    {
        Rng rng(seed + 2);
        double worst = 0.0;
        for (std::size_t n = 1; n <= 3; ++n)
            for (std::size_t k = 0; k < t; ++k) {
                const auto x = random_hyperhermitian(rng, n);
                const double d = moore_det(x);
                const double dr = real_embed_matrix(x).determinant();
                worst = std::max(worst, std::abs(dr - std::pow(d, 4)) / std::max(1.0, std::abs(dr)));
            }
        record("real_determinant_fourth_power", worst, 1e-9);
    }
    {
        Rng rng(seed + 3);
        double worst = 0.0;
        for (std::size_t n = 1; n <= 3; ++n)
            for (std::size_t k = 0; k < t; ++k) {
                const auto a = random_psd(rng, n, 1 + rng() % n), b = random_psd(rng, n, 1 + rng() % n);
                const double da = moore_det(a), db = moore_det(b), dab = moore_det(a + b);
                const double scale = std::max(1.0, std::abs(dab));
                worst = std::max(worst, (da + db - dab) / scale);
                const double root = 1.0 / static_cast<double>(n);
                const double lhs = std::pow(std::max(dab, 0.0), root);
                const double rhs = std::pow(std::max(da, 0.0), root) + std::pow(std::max(db, 0.0), root);
                worst = std::max(worst, (rhs - lhs) / std::max(1.0, lhs));
            }
        record("det_superadditive_concave", worst, 1e-9);
    }
    {
        Rng rng(seed + 4);
        double worst = 0.0;
        for (std::size_t k = 0; k < t; ++k) {
            const std::size_t n = 1 + k % 3;
            const auto x = random_pd(rng, n);
            const auto r = inf_trace_value(x);
            const double target = std::pow(moore_det(x), 1.0 / static_cast<double>(n));
            worst = std::max(worst, std::abs(r.value - target) / std::max(1.0, target));
            for (int s = 0; s < 5; ++s) {
                const auto a = normalize_det(random_pd(rng, n));
                const double v = re_trace_product(a, x) / static_cast<double>(n);
                worst = std::max(worst, (target - v) / std::max(1.0, target));
            }
        }
        record("inf_trace_formula", worst, 1e-8);
    }
    {
        Rng rng(seed + 5);
        double worst = 0.0;
        for (std::size_t k = 0; k < t; ++k) {
            const std::size_t n = 1 + k % 3;
            const auto d = static_cast<Eigen::Index>(4 * n);
            Eigen::MatrixXd m = Eigen::MatrixXd::NullaryExpr(d, d, [&] { return std::normal_distribution<double>()(rng); });
            const Eigen::MatrixXd a = m + m.transpose();
            const auto routes = delta_a_routes(a, random_psd(rng, n, n));
            worst = std::max(worst, std::abs(routes.quaternionic - routes.real) /
                                        (1.0 + std::abs(routes.quaternionic) + std::abs(routes.real)));
        }
        record("delta_a_two_routes", worst, 1e-8);
    }
    {
        Rng rng(seed + 6);
        double worst = 0.0;
        for (std::size_t k = 0; k < t; ++k) {
            const std::size_t n = 1 + k % 3;
            const auto d = static_cast<Eigen::Index>(4 * n);
            Eigen::MatrixXd m = Eigen::MatrixXd::NullaryExpr(d, d, [&] { return std::normal_distribution<double>()(rng); });
            const Eigen::MatrixXd a = m * m.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
            const auto gap = det_inequality_gap(quadratic_field(a, Eigen::VectorXd::Zero(d)), QPoint(n));
            worst = std::max(worst, (gap.rhs - gap.lhs) / std::max(1.0, gap.lhs));
        }
        record("det_inequality", worst, 1e-8);
    }
    {
        Rng rng(seed + 7);
        const Domain dom = Domain::ball({0, 0, 0, 0}, 1.0);
        const Grid grid = make_grid(dom, 7);
        std::uniform_real_distribution<double> ud(0.0, 1.0);
        const auto f = sample(grid, dom, [&](std::span<const double>) { return ud(rng); });
        const double h = grid.spacing[0];
        const auto s1 = sup_convolution(f, 0.2, 2.0);
        const auto s2 = sup_convolution(f, 0.3, 2.0);
        double worst = 0.0;
        const auto strides = grid.strides();
        std::vector<std::size_t> idx(4);
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (s2.mask[i] == NodeKind::Interior) worst = std::max(worst, s1.values[i] - s2.values[i]);
            if (s1.mask[i] != NodeKind::Interior) continue;
            worst = std::max(worst, f.values[i] - s1.values[i]);
            grid.unravel(i, idx);
            for (std::size_t a = 0; a < 4; ++a) {
                if (idx[a] == 0 || idx[a] + 1 >= grid.shape[a]) continue;
                const std::size_t lo = i - strides[a], hi = i + strides[a];
                if (s1.mask[lo] != NodeKind::Interior || s1.mask[hi] != NodeKind::Interior) continue;
                const double d2 = (s1.values[hi] - 2.0 * s1.values[i] + s1.values[lo]) / (h * h);
                worst = std::max(worst, -1.0 / (0.2 * 0.2) - 1e-8 - d2);
            }
        }
        record("sup_convolution_monotone_semiconvex", worst, 0.0);
    }
    {
        Rng rng(seed + 8);
        const Domain dom = Domain::ball({0, 0, 0, 0}, 1.0);
        const Grid grid = make_grid(dom, 7, 1);
        std::normal_distribution<double> nd;
        auto u = sample(grid, dom, [&](std::span<const double>) { return nd(rng); }, 3.0 * grid.max_spacing() * 2.0);
        const DiscreteOperator op(grid, build_direction_set(1, 1), 1.0);
        const RhsFunction f{1, [](std::span<const double>, double s) { return std::exp(s); }};
        double worst = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (u.mask[i] != NodeKind::Interior || !op.stencil_fits(u.mask, i)) continue;
            const double base = bellman_residual(u, op, f, i);
            for (auto off : op.stencils[0].offsets) {
                const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + off);
                const double keep = u.values[j];
                u.values[j] += 0.5;
                worst = std::max(worst, base - bellman_residual(u, op, f, i));
                u.values[j] = keep;
            }
            const double keep = u.values[i];
            u.values[i] += 0.5;
            worst = std::max(worst, bellman_residual(u, op, f, i) - base);
            u.values[i] = keep;
        }
        record("scheme_monotonicity", worst, 0.0);
    }
    {
        Rng rng(seed + 9);
        double worst = 0.0;
        const char* atoms[] = {"x0", "x1", "t", "normq", "2.5", "0.125"};
        const char* ops[] = {" + ", " - ", " * ", " / ", " ^ "};
        for (std::size_t k = 0; k < t; ++k) {
            std::string text = atoms[rng() % 6];
            for (int d = 0; d < 4; ++d) {
                const std::string rhs = atoms[rng() % 6];
                switch (rng() % 4) {
                    case 0: text = "(" + text + ")" + ops[rng() % 5] + rhs; break;
                    case 1: text = "-" + text + ops[rng() % 5] + rhs; break;
                    case 2: text = "max(" + text + ", " + rhs + ")"; break;
                    default: text = "exp(" + text + ")" + ops[rng() % 5] + rhs; break;
                }
            }
            const auto e = parse_expression(text);
            if (!(e.ast() == parse_expression(e.to_string()).ast())) worst = 1.0;
        }
        record("expression_round_trip", worst, 0.0);
    }
    return out;
}

inline std::string format_properties(const std::vector<PropertyOutcome>& results) {
    std::ostringstream os;
    std::size_t width = 8;
    for (const auto& r : results) width = std::max(width, r.name.size());
    for (const auto& r : results) {
        os << (r.passed ? "PASS  " : "FAIL  ") << r.name << std::string(width - r.name.size() + 2, ' ')
           << "worst=" << r.worst;
        if (!r.detail.empty()) os << "  (" << r.detail << ")";
        os << '\n';
    }
    return os.str();
}

}  // namespace qma
