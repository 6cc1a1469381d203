#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qma/error.hpp"
#include "qma/grid.hpp"

namespace qma {

/// max - min of f over interior and boundary nodes.
inline double oscillation(const GridFunction& f) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f.in_closure(i)) continue;
        lo = std::min(lo, f.values[i]);
        hi = std::max(hi, f.values[i]);
    }
    return hi >= lo ? hi - lo : 0.0;
}

namespace detail {

struct BallOffset {
    std::ptrdiff_t linear;           // linear-index displacement
    std::vector<std::ptrdiff_t> k;  // per-axis displacement
    double dist2;                    // squared Euclidean length
};

/// Grid displacements of Euclidean length <= radius.
inline std::vector<BallOffset> ball_offsets(const Grid& g, double radius) {
    const std::size_t d = g.dim();
    std::vector<std::ptrdiff_t> reach(d);
    for (std::size_t a = 0; a < d; ++a) reach[a] = static_cast<std::ptrdiff_t>(std::floor(radius / g.spacing[a]));
    const auto strides = g.strides();
    std::vector<BallOffset> out;
    std::vector<std::ptrdiff_t> k(d);
    for (std::size_t a = 0; a < d; ++a) k[a] = -reach[a];
    while (true) {
        double dist2 = 0.0;
        std::ptrdiff_t lin = 0;
        for (std::size_t a = 0; a < d; ++a) {
            const double s = static_cast<double>(k[a]) * g.spacing[a];
            dist2 += s * s;
            lin += k[a] * static_cast<std::ptrdiff_t>(strides[a]);
        }
        if (dist2 <= radius * radius) out.push_back({lin, k, dist2});
        std::size_t a = d;
        while (a-- > 0) {
            if (++k[a] <= reach[a]) break;
            k[a] = -reach[a];
        }
        if (a == static_cast<std::size_t>(-1)) break;
    }
    return out;
}

}  // namespace detail

/// Sup-convolution f^delta(q) = sup_{q' in Omega} { f(q') - |q - q'|^2 / (2 delta^2) }
/// on Omega_delta = { q : dist(q, dOmega) > A delta }.
///
/// With A^2 > 2 osc f no maximizer lies farther than A delta from q, so the
/// scan is restricted to grid nodes in that ball without changing the result.
/// Nodes outside Omega_delta are marked exterior in the output.
inline GridFunction sup_convolution(const GridFunction& f, double delta, double a_const) {
    if (!(delta > 0.0) || !(a_const > 0.0)) throw InputError("sup_convolution: delta and A must be positive");
    const double osc = oscillation(f);
    if (!(a_const * a_const > 2.0 * osc))
        throw InputError("sup_convolution: need A^2 > 2 osc f (A = " + std::to_string(a_const) +
                         ", osc = " + std::to_string(osc) + ")");
    const double radius = a_const * delta;
    const auto offsets = detail::ball_offsets(f.grid, radius);
    const std::size_t d = f.grid.dim();

    GridFunction out{f.grid, f.domain, std::vector<double>(f.size(), std::numeric_limits<double>::quiet_NaN()),
                     std::vector<NodeKind>(f.size(), NodeKind::Exterior)};
    std::vector<double> x(d);
    std::vector<std::size_t> idx(d);
    std::size_t count = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f.mask[i] != NodeKind::Interior) continue;
        f.grid.position(i, x);
        if (!(f.domain.signed_distance(x) > radius)) continue;
        f.grid.unravel(i, idx);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& off : offsets) {
            bool inside = true;
            for (std::size_t a = 0; a < d && inside; ++a) {
                const auto j = static_cast<std::ptrdiff_t>(idx[a]) + off.k[a];
                inside = j >= 0 && j < static_cast<std::ptrdiff_t>(f.grid.shape[a]);
            }
            if (!inside) continue;
            const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + off.linear);
            if (!f.in_closure(j)) continue;
            best = std::max(best, f.values[j] - off.dist2 / (2.0 * delta * delta));
        }
        out.values[i] = best;
        out.mask[i] = NodeKind::Interior;
        ++count;
    }
    if (count == 0) throw InputError("sup_convolution: Omega_delta contains no grid nodes");
    return out;
}

/// Inf-convolution v_eps(q) = inf { v(q') + |q - q'|^2 / (2 eps^2) }, the dual of sup_convolution.
inline GridFunction inf_convolution(const GridFunction& v, double eps, double a_const) {
    GridFunction neg = v;
    for (auto& val : neg.values) val = -val;
    GridFunction out = sup_convolution(neg, eps, a_const);
    for (auto& val : out.values) val = -val;
    return out;
}

/// Right-hand side F(q, t) >= 0, non-decreasing in t; q in real coordinates.
struct RhsFunction {
    std::size_t n = 1;
    std::function<double(std::span<const double>, double)> eval;

    double operator()(std::span<const double> x, double t) const { return eval(x, t); }
};

enum class PerturbSide { Lower, Upper };

namespace detail {

/// Minimum (or maximum) of fn over the closed ball |y - c| <= r: best of a
/// fixed sample pattern, refined by projected gradient descent.
inline double ball_extremum(const std::function<double(std::span<const double>)>& fn, const Eigen::VectorXd& c,
                            double r, bool minimize) {
    const double sgn = minimize ? 1.0 : -1.0;
    auto obj = [&](const Eigen::VectorXd& y) {
        return sgn * fn(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
    };
    const Eigen::Index d = c.size();
    auto project = [&](Eigen::VectorXd y) {
        const Eigen::VectorXd off = y - c;
        const double len = off.norm();
        if (len > r) y = c + off * (r / len);
        return y;
    };
    const double fd = 1e-6 * (1.0 + r + c.norm());
    auto grad = [&](const Eigen::VectorXd& y) {
        Eigen::VectorXd g(d);
        Eigen::VectorXd z = y;
        for (Eigen::Index a = 0; a < d; ++a) {
            z(a) = y(a) + fd;
            const double up = obj(z);
            z(a) = y(a) - fd;
            const double dn = obj(z);
            z(a) = y(a);
            g(a) = (up - dn) / (2.0 * fd);
        }
        return g;
    };

    Eigen::VectorXd best = c;
    double best_val = obj(c);
    auto consider = [&](const Eigen::VectorXd& y) {
        const double v = obj(y);
        if (v < best_val) {
            best_val = v;
            best = y;
        }
    };
    for (Eigen::Index a = 0; a < d; ++a)
        for (double s : {-1.0, -0.5, 0.5, 1.0}) {
            Eigen::VectorXd y = c;
            y(a) += s * r;
            consider(y);
        }
    const Eigen::VectorXd g0 = grad(c);
    if (g0.norm() > 0.0) consider(c - g0 * (r / g0.norm()));

    double step = r;
    for (int it = 0; it < 200 && step > 1e-14 * (1.0 + r); ++it) {
        const Eigen::VectorXd g = grad(best);
        if (!(g.norm() > 0.0)) break;
        bool improved = false;
        while (step > 1e-14 * (1.0 + r)) {
            const Eigen::VectorXd y = project(best - g * (step / g.norm()));
            const double v = obj(y);
            if (v < best_val) {
                best_val = v;
                best = y;
                improved = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }
    return sgn * best_val;
}

}  // namespace detail

/// F_delta(q, t) = inf_{|q' - q| <= A delta} F(q', t) (Lower) or the matching
/// sup F^delta (Upper). The extremum is located numerically, so F_delta <= F
/// holds exactly (q itself is always a candidate) and optimality is up to the
/// local search tolerance.
inline RhsFunction perturbed_rhs(const RhsFunction& f, double delta, double a_const, PerturbSide side) {
    if (!(delta >= 0.0) || !(a_const > 0.0)) throw InputError("perturbed_rhs: need delta >= 0 and A > 0");
    const double radius = a_const * delta;
    RhsFunction out;
    out.n = f.n;
    out.eval = [f, radius, side](std::span<const double> x, double t) {
        if (radius == 0.0) return f(x, t);
        const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
        return detail::ball_extremum([&](std::span<const double> y) { return f(y, t); }, c, radius,
                                     side == PerturbSide::Lower);
    };
    return out;
}

}  // namespace qma
