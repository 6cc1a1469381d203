#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "qma/error.hpp"
#include "qma/grid.hpp"
#include "qma/hyperhermitian.hpp"
#include "qma/quaternion.hpp"
#include "qma/regularization.hpp"

namespace qma {

/// One coefficient matrix a (det a = 1) with the spectral data of a^R:
/// a^R = directions * diag(weights) * directions^T.
struct DirectionMember {
    HyperhermitianMatrix a;
    Eigen::MatrixXd directions;  // orthonormal columns in R^{4n}
    Eigen::VectorXd weights;     // positive
};

struct DirectionSet {
    std::size_t n = 1;
    int richness = 0;
    std::vector<DirectionMember> members;  // members[0] is the identity

    std::size_t size() const { return members.size(); }
};

namespace detail {

inline DirectionMember make_member(const QMatrix& unitary, const std::vector<double>& diag) {
    const std::size_t n = diag.size();
    DirectionMember m{HyperhermitianMatrix::diagonal(diag).congruence(unitary), real_embed(unitary),
                      Eigen::VectorXd(static_cast<Eigen::Index>(4 * n))};
    for (std::size_t p = 0; p < n; ++p)
        for (int s = 0; s < 4; ++s) m.weights(static_cast<Eigen::Index>(4 * p) + s) = diag[p];
    return m;
}

/// Unitary acting as [[1, p], [-conj p, 1]] / sqrt 2 on coordinates (j, k).
inline QMatrix pair_rotation(std::size_t n, std::size_t j, std::size_t k, const Quaternion& p) {
    QMatrix g = QMatrix::identity(n);
    const double r = 1.0 / std::sqrt(2.0);
    g(j, j) = Quaternion(r, 0, 0, 0);
    g(k, k) = Quaternion(r, 0, 0, 0);
    g(j, k) = p * r;
    g(k, j) = p.conj() * (-r);
    return g;
}

}  // namespace detail

/// Finite family of det-1 positive coefficient matrices for the Bellman infimum.
///
/// Diagonal members diag(2^{e_1}, ..., 2^{e_n}) for integer e_i in [-r, r] with
/// sum e_i = 0, so eigenvalue ratios run over the ladder 4^{-r} .. 4^{r}.
/// Every non-identity diagonal member is also conjugated by the rotations
/// [[1, p], [-conj p, 1]] / sqrt 2, p in {1, i, j, k}, on each coordinate pair.
inline DirectionSet build_direction_set(std::size_t n, int richness) {
    if (n == 0) throw InputError("direction set needs n >= 1");
    if (richness < 0) throw InputError("direction richness must be >= 0");
    DirectionSet set{n, richness, {}};
    set.members.push_back(detail::make_member(QMatrix::identity(n), std::vector<double>(n, 1.0)));

    std::vector<std::vector<double>> diagonals;
    std::vector<int> e(n, -richness);
    while (true) {
        int sum = 0;
        bool zero = true;
        for (int v : e) {
            sum += v;
            zero = zero && v == 0;
        }
        if (sum == 0 && !zero) {
            std::vector<double> d(n);
            for (std::size_t p = 0; p < n; ++p) d[p] = std::ldexp(1.0, e[p]);
            diagonals.push_back(d);
        }
        std::size_t p = n;
        while (p-- > 0) {
            if (++e[p] <= richness) break;
            e[p] = -richness;
        }
        if (p == static_cast<std::size_t>(-1)) break;
    }
    for (const auto& d : diagonals) set.members.push_back(detail::make_member(QMatrix::identity(n), d));
    for (const auto& d : diagonals)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k)
                for (int u = 0; u < 4; ++u)
                    set.members.push_back(detail::make_member(detail::pair_rotation(n, j, k, Quaternion::unit(u)), d));

    std::vector<DirectionMember> unique;
    for (auto& m : set.members) {
        const bool dup = std::any_of(unique.begin(), unique.end(), [&](const DirectionMember& o) {
            return (o.a.matrix() - m.a.matrix()).max_abs() <= 1e-12;
        });
        if (!dup) unique.push_back(std::move(m));
    }
    set.members = std::move(unique);
    return set;
}

/// Translation-invariant stencil of Delta_a on a grid: Delta_a u(i) =
/// sum_k weights[k] * (u[i + offsets[k]] - u[i]), all weights positive.
struct Stencil {
    std::vector<std::ptrdiff_t> offsets;
    std::vector<double> weights;
    std::vector<std::ptrdiff_t> reach_lo;  // most negative per-axis index offset
    std::vector<std::ptrdiff_t> reach_hi;  // most positive per-axis index offset
    double center = 0.0;                   // sum of weights

    double apply(std::span<const double> u, std::size_t i) const {
        const double c = u[i];
        double acc = 0.0;
        for (std::size_t k = 0; k < offsets.size(); ++k)
            acc += weights[k] * (u[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + offsets[k])] - c);
        return acc;
    }
};

/// Stencil of Delta_a u = 1/2 sum_m lambda_m D^2_{e_m} u with D^2_e the centered
/// second difference of step rho * h_min. Off-grid endpoints are multilinearly
/// interpolated from the surrounding nodes.
inline Stencil build_stencil(const Grid& grid, const DirectionMember& member, double rho) {
    const std::size_t d = grid.dim();
    if (static_cast<std::size_t>(member.directions.rows()) != d)
        throw InputError("direction set dimension does not match the grid");
    if (!(rho > 0.0)) throw InputError("stencil radius must be positive");
    const double step = rho * grid.min_spacing();
    const auto strides = grid.strides();
    std::map<std::vector<std::ptrdiff_t>, double> acc;

    for (Eigen::Index m = 0; m < member.directions.cols(); ++m) {
        const double coef = 0.5 * member.weights(m) / (step * step);
        for (double sign : {1.0, -1.0}) {
            std::vector<std::ptrdiff_t> base(d);
            std::vector<double> frac(d);
            for (std::size_t a = 0; a < d; ++a) {
                double off = sign * step * member.directions(static_cast<Eigen::Index>(a), m) / grid.spacing[a];
                const double r = std::round(off);
                if (std::abs(off - r) < 1e-12) off = r;
                const double fl = std::floor(off);
                base[a] = static_cast<std::ptrdiff_t>(fl);
                frac[a] = off - fl;
            }
            std::vector<std::ptrdiff_t> corner(d);
            for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
                double w = coef;
                for (std::size_t a = 0; a < d && w != 0.0; ++a) {
                    const bool up = (mask >> a) & 1u;
                    w *= up ? frac[a] : 1.0 - frac[a];
                    corner[a] = base[a] + (up ? 1 : 0);
                }
                if (w == 0.0) continue;
                acc[corner] += w;
            }
        }
    }

    Stencil s;
    s.reach_lo.assign(d, 0);
    s.reach_hi.assign(d, 0);
    for (const auto& [corner, w] : acc) {
        if (std::all_of(corner.begin(), corner.end(), [](std::ptrdiff_t v) { return v == 0; })) continue;
        std::ptrdiff_t lin = 0;
        for (std::size_t a = 0; a < d; ++a) {
            lin += corner[a] * static_cast<std::ptrdiff_t>(strides[a]);
            s.reach_lo[a] = std::min(s.reach_lo[a], corner[a]);
            s.reach_hi[a] = std::max(s.reach_hi[a], corner[a]);
        }
        s.offsets.push_back(lin);
        s.weights.push_back(w);
        s.center += w;
    }
    return s;
}

/// Stencils for every member of a direction set on one grid.
struct DiscreteOperator {
    Grid grid;
    std::size_t n = 1;
    double rho = 1.0;
    std::vector<Stencil> stencils;

    DiscreteOperator(const Grid& g, const DirectionSet& dirs, double stencil_radius)
        : grid(g), n(dirs.n), rho(stencil_radius) {
        if (4 * dirs.n != g.dim()) throw InputError("direction set dimension does not match the grid");
        for (const auto& m : dirs.members) stencils.push_back(build_stencil(g, m, stencil_radius));
    }

    /// Largest center coefficient of (2/n) Delta_a.
    double max_center() const {
        double c = 0.0;
        for (const auto& s : stencils) c = std::max(c, s.center);
        return 2.0 / static_cast<double>(n) * c;
    }

    /// True when every stencil point of node i lies on the grid and in the closure of the mask.
    bool stencil_fits(std::span<const NodeKind> mask, std::size_t i) const {
        std::vector<std::size_t> idx(grid.dim());
        grid.unravel(i, idx);
        for (const auto& s : stencils) {
            for (std::size_t a = 0; a < grid.dim(); ++a) {
                const auto j = static_cast<std::ptrdiff_t>(idx[a]);
                if (j + s.reach_lo[a] < 0 || j + s.reach_hi[a] >= static_cast<std::ptrdiff_t>(grid.shape[a]))
                    return false;
            }
            for (auto off : s.offsets)
                if (mask[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + off)] == NodeKind::Exterior)
                    return false;
        }
        return true;
    }

    /// min_a (2/n) Delta_a u at node i.
    double min_operator(std::span<const double> u, std::size_t i) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : stencils) best = std::min(best, s.apply(u, i));
        return 2.0 / static_cast<double>(n) * best;
    }
};

namespace detail {

inline void check_interior_node(const GridFunction& u, const DiscreteOperator& op, std::size_t node) {
    if (node >= u.size()) throw InputError("node index out of range");
    if (u.mask[node] != NodeKind::Interior) throw InputError("node is not interior");
    if (!op.stencil_fits(u.mask, node))
        throw InputError("stencil exits the grid or the domain closure; pad the grid or widen the boundary band");
}

inline double rhs_root(double f, std::size_t n) {
    if (!(f >= 0.0)) throw NumericalError("right-hand side is negative or NaN: " + std::to_string(f));
    return n == 1 ? f : std::pow(f, 1.0 / static_cast<double>(n));
}

}  // namespace detail

/// Discrete Delta_a u at an interior node (1/2 sum_m lambda_m D^2_{e_m} u).
inline double discrete_delta_a(const GridFunction& u, const DirectionSet& dirs, std::size_t member, std::size_t node,
                               double rho = 1.0) {
    if (member >= dirs.size()) throw InputError("direction member index out of range");
    DirectionSet single{dirs.n, dirs.richness, {dirs.members[member]}};
    const DiscreteOperator op(u.grid, single, rho);
    detail::check_interior_node(u, op, node);
    return op.stencils[0].apply(u.values, node);
}

/// R(u, node) = min_a (2/n) Delta_a u - F(q, u(node))^{1/n}.
inline double bellman_residual(const GridFunction& u, const DiscreteOperator& op, const RhsFunction& f,
                               std::size_t node) {
    detail::check_interior_node(u, op, node);
    std::vector<double> x(u.grid.dim());
    u.grid.position(node, x);
    return op.min_operator(u.values, node) - detail::rhs_root(f(x, u.values[node]), op.n);
}

inline double bellman_residual(const GridFunction& u, std::size_t node, const DirectionSet& dirs,
                               const RhsFunction& f, double rho = 1.0) {
    return bellman_residual(u, DiscreteOperator(u.grid, dirs, rho), f, node);
}

struct DirichletProblem {
    std::size_t n = 1;
    Domain domain = Domain::ball({0, 0, 0, 0}, 1.0);
    std::function<double(std::span<const double>)> g;
    RhsFunction f;
    std::function<double(std::span<const double>)> exact;  // optional
};

enum class InitKind { GExtension, MinG, MaxG };

inline std::string_view to_string(InitKind k) {
    switch (k) {
        case InitKind::GExtension: return "g_extension";
        case InitKind::MinG: return "min_g";
        case InitKind::MaxG: return "max_g";
    }
    return "?";
}

inline InitKind init_kind_from_string(std::string_view s) {
    if (s == "g_extension") return InitKind::GExtension;
    if (s == "min_g") return InitKind::MinG;
    if (s == "max_g") return InitKind::MaxG;
    throw InputError("unknown initialization '" + std::string(s) + "' (expected g_extension, min_g or max_g)");
}

struct SolverOptions {
    std::size_t points = 13;  // nodes per axis across the domain's bounding box
    double stencil_radius = 1.0;
    int richness = 1;
    double tol = 1e-6;
    std::size_t max_iter = 200000;
    double tau_factor = 0.5;  // tau = tau_factor * tau_max
    InitKind init = InitKind::MinG;
    unsigned threads = 1;
};

struct SolveReport {
    std::size_t iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    std::vector<double> residual_history;
    std::optional<double> linf_error;
    bool converged = false;
    double tau = 0.0;
    double tau_max = 0.0;
    std::size_t directions = 0;
    std::size_t interior_nodes = 0;
    std::size_t boundary_nodes = 0;
};

struct SolveResult {
    GridFunction u;
    SolveReport report;
};

/// Grid, mask and boundary values for a problem: the grid spans the domain's
/// bounding box with `points` nodes per axis plus ceil(rho) padding nodes;
/// boundary nodes are non-interior nodes within (rho + sqrt(dim)) h_max of the
/// domain and carry g. Interior nodes are set from `init`.
inline GridFunction setup_grid_function(const DirichletProblem& p, const SolverOptions& opt) {
    if (p.domain.dim() != 4 * p.n) throw InputError("domain dimension must be 4n");
    if (!p.g) throw InputError("boundary data g is missing");
    if (!p.f.eval) throw InputError("right-hand side F is missing");
    if (!(opt.stencil_radius >= 1.0)) throw InputError("stencil radius must be >= 1");
    const auto pad = static_cast<std::size_t>(std::ceil(opt.stencil_radius));
    const Grid grid = make_grid(p.domain, opt.points, pad);
    const double band = (opt.stencil_radius + std::sqrt(static_cast<double>(grid.dim()))) * grid.max_spacing() *
                        (1.0 + 1e-12);
    GridFunction u{grid, p.domain, std::vector<double>(grid.size(), std::numeric_limits<double>::quiet_NaN()),
                   build_mask(grid, p.domain, band)};
    std::vector<double> x(grid.dim());
    double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (u.mask[i] != NodeKind::Boundary) continue;
        grid.position(i, x);
        const double v = p.g(x);
        if (!std::isfinite(v)) throw InputError("boundary data g is not finite at a boundary node");
        u.values[i] = v;
        gmin = std::min(gmin, v);
        gmax = std::max(gmax, v);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (u.mask[i] != NodeKind::Interior) continue;
        switch (opt.init) {
            case InitKind::GExtension: {
                grid.position(i, x);
                const double v = p.g(x);
                if (!std::isfinite(v)) throw InputError("g extension is not finite at an interior node");
                u.values[i] = v;
                break;
            }
            case InitKind::MinG: u.values[i] = gmin; break;
            case InitKind::MaxG: u.values[i] = gmax; break;
        }
    }
    return u;
}

/// Damped Jacobi iteration u <- u + tau R(u) on the Bellman form
/// min_a (2/n) Delta_a u = F(q, u)^{1/n} with Dirichlet data g.
///
/// tau_max = 1 / max_a (2/n) center(a) keeps every update a monotone (convex)
/// combination of stencil values; tau_factor >= 1 is accepted but gives up
/// monotonicity and is typically unstable. Stops once max |R| <= tol; on max_iter the
/// best iterate is returned with converged = false. Throws NumericalError when
/// the residual grows for 50 consecutive sweeps or becomes non-finite.
/// Results are bit-identical for any thread count.
inline SolveResult solve_dirichlet(const DirichletProblem& p, const SolverOptions& opt) {
    if (!(opt.tol > 0.0)) throw InputError("solver tol must be positive");
    if (!(opt.tau_factor > 0.0 && std::isfinite(opt.tau_factor))) throw InputError("tau_factor must be positive");
    if (opt.max_iter == 0) throw InputError("max_iter must be positive");
    GridFunction u = setup_grid_function(p, opt);
    const DirectionSet dirs = build_direction_set(p.n, opt.richness);
    const DiscreteOperator op(u.grid, dirs, opt.stencil_radius);

    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (u.mask[i] == NodeKind::Interior) {
            if (!op.stencil_fits(u.mask, i))
                throw InputError("stencil exits the grid or the domain closure at an interior node");
            nodes.push_back(i);
        }
    if (nodes.empty()) throw InputError("grid has no interior nodes; increase grid points");

    const std::size_t d = u.grid.dim();
    std::vector<double> pos(nodes.size() * d);
    for (std::size_t k = 0; k < nodes.size(); ++k)
        u.grid.position(nodes[k], std::span<double>(pos.data() + k * d, d));

    SolveReport rep;
    rep.tau_max = 1.0 / op.max_center();
    rep.tau = opt.tau_factor * rep.tau_max;
    rep.directions = dirs.size();
    rep.interior_nodes = nodes.size();
    rep.boundary_nodes = static_cast<std::size_t>(std::count(u.mask.begin(), u.mask.end(), NodeKind::Boundary));

    const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(nodes.size())));
    std::vector<double> next = u.values;
    std::vector<double> best = u.values;
    std::vector<double> chunk_res(threads, 0.0);

    auto sweep_chunk = [&](unsigned c) {
        const std::size_t lo = nodes.size() * c / threads, hi = nodes.size() * (c + 1) / threads;
        double worst = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            const std::size_t i = nodes[k];
            const double ui = u.values[i];
            const double fv = p.f(std::span<const double>(pos.data() + k * d, d), ui);
            const double r = op.min_operator(u.values, i) - detail::rhs_root(fv, p.n);
            if (!std::isfinite(r)) {
                worst = std::numeric_limits<double>::quiet_NaN();
                next[i] = ui;
                continue;
            }
            if (!std::isnan(worst)) worst = std::max(worst, std::abs(r));
            next[i] = ui + rep.tau * r;
        }
        chunk_res[c] = worst;
    };

    double best_res = std::numeric_limits<double>::infinity();
    std::size_t growth = 0;
    for (std::size_t it = 0;; ++it) {
        if (threads == 1) {
            sweep_chunk(0);
        } else {
            std::vector<std::jthread> pool;
            for (unsigned c = 1; c < threads; ++c) pool.emplace_back(sweep_chunk, c);
            sweep_chunk(0);
        }
        double res = 0.0;
        for (double r : chunk_res) res = std::isnan(r) || std::isnan(res) ? std::numeric_limits<double>::quiet_NaN()
                                                                         : std::max(res, r);
        if (!std::isfinite(res)) throw NumericalError("solver residual became non-finite");
        rep.residual_history.push_back(res);
        if (res < best_res) {
            best_res = res;
            best = u.values;
        }
        if (res <= opt.tol) {
            rep.converged = true;
            rep.iterations = it;
            break;
        }
        if (it + 1 >= opt.max_iter) {
            rep.iterations = opt.max_iter;
            break;
        }
        if (rep.residual_history.size() >= 2 && res > rep.residual_history[rep.residual_history.size() - 2]) {
            if (++growth >= 50) throw NumericalError("solver unstable: residual grew for 50 consecutive sweeps");
        } else {
            growth = 0;
        }
        std::swap(u.values, next);
    }
    if (!rep.converged) u.values = best;
    rep.residual = best_res;

    if (p.exact) {
        double err = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k)
            err = std::max(err, std::abs(u.values[nodes[k]] - p.exact(std::span<const double>(pos.data() + k * d, d))));
        rep.linf_error = err;
    }
    return {std::move(u), std::move(rep)};
}

struct ComparisonResult {
    bool ordered = true;
    double max_violation = 0.0;      // max over interior of u - v (may be negative)
    std::optional<std::size_t> witness;  // worst node when not ordered
};

/// Discrete comparison: checks u <= v + tol on all interior nodes, after
/// verifying R(u, .) >= -tol (subsolution) and R(v, .) <= tol (supersolution).
inline ComparisonResult comparison_check(const GridFunction& u, const GridFunction& v, const DiscreteOperator& op,
                                         const RhsFunction& f, double tol) {
    if (!u.grid.same_geometry(v.grid) || u.mask != v.mask || !u.grid.same_geometry(op.grid))
        throw InputError("comparison_check: grid functions live on different grids");
    ComparisonResult out;
    out.max_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u.mask[i] != NodeKind::Interior) continue;
        if (bellman_residual(u, op, f, i) < -tol)
            throw InputError("comparison_check: u is not a discrete subsolution at node " + std::to_string(i));
        if (bellman_residual(v, op, f, i) > tol)
            throw InputError("comparison_check: v is not a discrete supersolution at node " + std::to_string(i));
        const double diff = u.values[i] - v.values[i];
        if (diff > out.max_violation) {
            out.max_violation = diff;
            if (diff > tol) out.witness = i;
        }
    }
    out.ordered = !(out.max_violation > tol);
    if (out.ordered) out.witness.reset();
    return out;
}

}  // namespace qma
