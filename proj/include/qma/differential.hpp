#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qma/error.hpp"
#include "qma/hyperhermitian.hpp"
#include "qma/quaternion.hpp"

namespace qma {

/// Real-valued field on H^n, evaluated in real coordinates x in R^{4n}.
/// The optional analytic Hessian returns the 4n x 4n matrix d^2u / dx_s dx_t.
struct ScalarField {
    std::size_t n = 1;
    std::function<double(std::span<const double>)> value;
    std::function<Eigen::MatrixXd(std::span<const double>)> hessian;

    double operator()(std::span<const double> x) const { return value(x); }
    double operator()(const QPoint& q) const {
        const Eigen::VectorXd x = real_embed_point(q);
        return value(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    }
};

/// u(x) = 1/2 x^T A x + b^T x + c with its exact Hessian A (A is symmetrized).
inline ScalarField quadratic_field(Eigen::MatrixXd a, Eigen::VectorXd b, double c = 0.0) {
    if (a.rows() != a.cols() || a.rows() % 4 != 0 || b.size() != a.rows())
        throw InputError("quadratic_field: A must be 4n x 4n and b of length 4n");
    a = 0.5 * (a + a.transpose());
    ScalarField f;
    f.n = static_cast<std::size_t>(a.rows() / 4);
    f.value = [a, b, c](std::span<const double> x) {
        const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
        return 0.5 * v.dot(a * v) + b.dot(v) + c;
    };
    f.hessian = [a](std::span<const double>) { return a; };
    return f;
}

/// scale * |q|^2.
inline ScalarField norm_squared_field(std::size_t n, double scale = 1.0) {
    const auto d = static_cast<Eigen::Index>(4 * n);
    return quadratic_field(2.0 * scale * Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d));
}

/// Default central-difference step 1e-4 (1 + |q|).
inline double default_fd_step(const Eigen::VectorXd& x) { return 1e-4 * (1.0 + x.norm()); }

namespace detail {

inline double eval_checked(const ScalarField& u, const Eigen::VectorXd& x) {
    const double v = u.value(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    if (std::isnan(v)) {
        std::ostringstream os;
        os << "field evaluation returned NaN at x = (" << x.transpose() << ")";
        throw NumericalError(os.str());
    }
    return v;
}

}  // namespace detail

/// Real Hessian d^2u / dx_s dx_t: analytic when the field provides one,
/// otherwise central differences with step h (h <= 0 selects the default).
inline Eigen::MatrixXd real_hessian(const ScalarField& u, const QPoint& q, double h = 0.0) {
    if (q.size() != u.n) throw InputError("point dimension does not match field dimension");
    const Eigen::VectorXd x = real_embed_point(q);
    if (u.hessian) {
        Eigen::MatrixXd a = u.hessian(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
        if (!a.allFinite()) throw NumericalError("analytic Hessian is not finite");
        return 0.5 * (a + a.transpose());
    }
    if (h <= 0.0) h = default_fd_step(x);
    const Eigen::Index d = x.size();
    Eigen::MatrixXd hess(d, d);
    const double u0 = detail::eval_checked(u, x);
    Eigen::VectorXd y = x;
    for (Eigen::Index s = 0; s < d; ++s) {
        y(s) = x(s) + h;
        const double up = detail::eval_checked(u, y);
        y(s) = x(s) - h;
        const double um = detail::eval_checked(u, y);
        y(s) = x(s);
        hess(s, s) = (up - 2.0 * u0 + um) / (h * h);
        for (Eigen::Index t = s + 1; t < d; ++t) {
            double acc = 0.0;
            for (int ss = -1; ss <= 1; ss += 2)
                for (int tt = -1; tt <= 1; tt += 2) {
                    y(s) = x(s) + ss * h;
                    y(t) = x(t) + tt * h;
                    acc += ss * tt * detail::eval_checked(u, y);
                }
            y(s) = x(s);
            y(t) = x(t);
            hess(s, t) = hess(t, s) = acc / (4.0 * h * h);
        }
    }
    return hess;
}

namespace detail {

template <bool LeftUnitOnRow>
QMatrix assemble_hessian(const Eigen::Ref<const Eigen::MatrixXd>& d2) {
    if (d2.rows() != d2.cols() || d2.rows() % 4 != 0) throw InputError("real Hessian must be 4n x 4n");
    const std::size_t n = static_cast<std::size_t>(d2.rows() / 4);
    QMatrix h(n);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t r = 0; r < n; ++r) {
            Quaternion acc;
            for (int s = 0; s < 4; ++s)
                for (int t = 0; t < 4; ++t) {
                    const Quaternion w = LeftUnitOnRow ? Quaternion::unit(s) * Quaternion::unit(t).conj()
                                                       : Quaternion::unit(t) * Quaternion::unit(s).conj();
                    acc += w * d2(static_cast<Eigen::Index>(4 * p) + s, static_cast<Eigen::Index>(4 * r) + t);
                }
            h(p, r) = acc;
        }
    return h;
}

}  // namespace detail

/// Quaternionic Hessian from the real Hessian:
///   Q_pr = sum_{s,t} e_s conj(e_t) d^2u / dx_{4p+s} dx_{4r+t},
/// i.e. dbar_{q_p} (units on the left) applied to d_{q_r} u (units on the right).
/// For every direction v, v* Q v is the Laplacian of u along the right line
/// q + v lambda, so Q >= 0 exactly when u is plurisubharmonic; |q|^2 maps to 8 Id.
inline QMatrix quaternionic_hessian_from_real(const Eigen::Ref<const Eigen::MatrixXd>& d2) {
    return detail::assemble_hessian<true>(d2);
}

/// The opposite composition d_{q_p} dbar_{q_r} u. It equals the transpose of
/// quaternionic_hessian_from_real; it is hyperhermitian, but its Moore
/// determinant agrees with that of Q only for n <= 2.
inline QMatrix transposed_hessian_from_real(const Eigen::Ref<const Eigen::MatrixXd>& d2) {
    return detail::assemble_hessian<false>(d2);
}

namespace detail {

inline HyperhermitianMatrix checked_hyperhermitian(const QMatrix& h) {
    const double scale = h.max_abs();
    const QMatrix asym = h - h.conj_transpose();
    double diag_im = 0.0;
    for (std::size_t r = 0; r < h.size(); ++r)
        diag_im = std::max(diag_im, Quaternion(0.0, h(r, r).i, h(r, r).j, h(r, r).k).norm());
    if (std::max(asym.max_abs(), diag_im) > 1e-6 * (1.0 + scale))
        throw NumericalError("quaternionic Hessian is not hyperhermitian: insufficient smoothness");
    return HyperhermitianMatrix::symmetrized(h);
}

}  // namespace detail

/// Quaternionic Hessian at q, symmetrized to be exactly hyperhermitian.
inline HyperhermitianMatrix quaternionic_hessian(const ScalarField& u, const QPoint& q, double h = 0.0) {
    return detail::checked_hyperhermitian(quaternionic_hessian_from_real(real_hessian(u, q, h)));
}

inline HyperhermitianMatrix transposed_quaternionic_hessian(const ScalarField& u, const QPoint& q, double h = 0.0) {
    return detail::checked_hyperhermitian(transposed_hessian_from_real(real_hessian(u, q, h)));
}

/// Quaternionic Monge-Ampere operator det(u)(q).
inline double ma_det(const ScalarField& u, const QPoint& q, double h = 0.0) {
    return moore_det(quaternionic_hessian(u, q, h));
}

struct DeltaRoutes {
    double quaternionic = 0.0;  // 1/2 Re Tr(a H)
    double real = 0.0;          // 1/2 Tr(a^R D^2 u)
};

inline DeltaRoutes delta_a_routes(const Eigen::Ref<const Eigen::MatrixXd>& d2, const HyperhermitianMatrix& a) {
    const HyperhermitianMatrix hess = detail::checked_hyperhermitian(quaternionic_hessian_from_real(d2));
    if (hess.size() != a.size()) throw InputError("coefficient matrix dimension does not match field");
    return {0.5 * re_trace_product(a, hess), 0.5 * (real_embed_matrix(a).cwiseProduct(d2.transpose())).sum()};
}

/// Constant-coefficient operator Delta_a u = 1/2 Re Tr(a Q) with Q the quaternionic Hessian.
///
/// Both the quaternionic trace and the real trace Tr(a^R D^2 u) are evaluated;
/// a disagreement beyond 1e-8 (relative) is reported as a numerical error.
inline double delta_a(const ScalarField& u, const HyperhermitianMatrix& a, const QPoint& q, double h = 0.0) {
    if (!is_psd(a, 1e-12 * std::max(1.0, a.matrix().max_abs())))
        throw InputError("delta_a: coefficient matrix must be positive semidefinite");
    const Eigen::MatrixXd d2 = real_hessian(u, q, h);
    const DeltaRoutes r = delta_a_routes(d2, a);
    if (std::abs(r.quaternionic - r.real) > 1e-8 * (1.0 + std::abs(r.quaternionic) + std::abs(r.real))) {
        std::ostringstream os;
        os << "delta_a routes disagree: quaternionic " << r.quaternionic << " vs real " << r.real;
        throw NumericalError(os.str());
    }
    return r.quaternionic;
}

struct PshCheckResult {
    bool plurisubharmonic = true;
    double min_eigenvalue = std::numeric_limits<double>::infinity();
    std::optional<QPoint> witness;  // worst sample when the check fails
};

/// Plurisubharmonicity of a C^2 field, sampled: the quaternionic Hessian must be
/// non-negative definite (min eigenvalue >= -tol) at every sample point.
inline PshCheckResult psh_check(const ScalarField& u, const std::vector<QPoint>& samples, double tol, double h = 0.0) {
    PshCheckResult out;
    for (const auto& q : samples) {
        const auto spec = q_eigenvalues(quaternionic_hessian(u, q, h));
        const double lo = spec.values.empty() ? 0.0 : spec.values.front();
        if (lo < out.min_eigenvalue) {
            out.min_eigenvalue = lo;
            if (lo < -tol) out.witness = q;
        }
    }
    out.plurisubharmonic = out.min_eigenvalue >= -tol;
    if (out.plurisubharmonic) out.witness.reset();
    return out;
}

struct DetInequality {
    double lhs = 0.0;  // det(u)^{1/n}
    double rhs = 0.0;  // 4 det_R(D^2 u)^{1/(4n)}
};

/// Both sides of det(u)^{1/n} >= 4 det_R(D^2_x u)^{1/(4n)} for a C^2 PSH field.
inline DetInequality det_inequality_gap(const ScalarField& u, const QPoint& q, double h = 0.0) {
    const Eigen::MatrixXd d2 = real_hessian(u, q, h);
    const HyperhermitianMatrix hess = detail::checked_hyperhermitian(quaternionic_hessian_from_real(d2));
    const double scale = std::max(1.0, d2.cwiseAbs().maxCoeff());
    if (!is_psd(hess, 1e-10 * scale))
        throw InputError("det_inequality_gap: field is not plurisubharmonic at the point");
    const double n = static_cast<double>(u.n);
    double det_q = moore_det(hess);
    double det_r = d2.determinant();
    if (det_r < -1e-12 * std::pow(scale, 4 * n))
        throw NumericalError("negative real Hessian determinant for a plurisubharmonic field");
    det_q = std::max(det_q, 0.0);
    det_r = std::max(det_r, 0.0);
    return {std::pow(det_q, 1.0 / n), 4.0 * std::pow(det_r, 1.0 / (4.0 * n))};
}

}  // namespace qma
