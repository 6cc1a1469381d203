#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace qma {

/// Element of the quaternion algebra, stored as re + i*i + j*j + k*k.
///
/// Component order (1, i, j, k) is the single convention used by every real
/// embedding in the library: coordinate x_{4p+m} of a point in H^n is
/// component m of its p-th quaternion.
struct Quaternion {
    double re = 0.0;
    double i = 0.0;
    double j = 0.0;
    double k = 0.0;

    constexpr Quaternion() = default;
    constexpr Quaternion(double r) : re(r) {}  // NOLINT(google-explicit-constructor)
    constexpr Quaternion(double r, double a, double b, double c) : re(r), i(a), j(b), k(c) {}

    static constexpr Quaternion unit(int m) {
        switch (m) {
            case 0: return {1, 0, 0, 0};
            case 1: return {0, 1, 0, 0};
            case 2: return {0, 0, 1, 0};
            case 3: return {0, 0, 0, 1};
            default: throw std::out_of_range("quaternion unit index");
        }
    }

    constexpr double operator[](int m) const {
        switch (m) {
            case 0: return re;
            case 1: return i;
            case 2: return j;
            case 3: return k;
            default: throw std::out_of_range("quaternion component index");
        }
    }
    constexpr double& operator[](int m) {
        switch (m) {
            case 0: return re;
            case 1: return i;
            case 2: return j;
            case 3: return k;
            default: throw std::out_of_range("quaternion component index");
        }
    }

    constexpr Quaternion conj() const { return {re, -i, -j, -k}; }
    constexpr double norm2() const { return re * re + i * i + j * j + k * k; }
    double norm() const { return std::sqrt(norm2()); }
    constexpr bool is_real(double tol = 0.0) const {
        return (i < 0 ? -i : i) <= tol && (j < 0 ? -j : j) <= tol && (k < 0 ? -k : k) <= tol;
    }

    Quaternion inverse() const {
        const double n2 = norm2();
        if (n2 == 0.0) throw std::domain_error("inverse of zero quaternion");
        const Quaternion c = conj();
        return {c.re / n2, c.i / n2, c.j / n2, c.k / n2};
    }

    constexpr Quaternion& operator+=(const Quaternion& o) {
        re += o.re; i += o.i; j += o.j; k += o.k;
        return *this;
    }
    constexpr Quaternion& operator-=(const Quaternion& o) {
        re -= o.re; i -= o.i; j -= o.j; k -= o.k;
        return *this;
    }
    constexpr Quaternion& operator*=(double s) {
        re *= s; i *= s; j *= s; k *= s;
        return *this;
    }

    friend constexpr bool operator==(const Quaternion&, const Quaternion&) = default;
};

constexpr Quaternion operator+(Quaternion a, const Quaternion& b) { return a += b; }
constexpr Quaternion operator-(Quaternion a, const Quaternion& b) { return a -= b; }
constexpr Quaternion operator-(const Quaternion& a) { return {-a.re, -a.i, -a.j, -a.k}; }
constexpr Quaternion operator*(Quaternion a, double s) { return a *= s; }
constexpr Quaternion operator*(double s, Quaternion a) { return a *= s; }

/// Hamilton product: i^2 = j^2 = k^2 = ijk = -1.
constexpr Quaternion qmul(const Quaternion& a, const Quaternion& b) {
    return {a.re * b.re - a.i * b.i - a.j * b.j - a.k * b.k,
            a.re * b.i + a.i * b.re + a.j * b.k - a.k * b.j,
            a.re * b.j - a.i * b.k + a.j * b.re + a.k * b.i,
            a.re * b.k + a.i * b.j - a.j * b.i + a.k * b.re};
}

constexpr Quaternion operator*(const Quaternion& a, const Quaternion& b) { return qmul(a, b); }

inline std::ostream& operator<<(std::ostream& os, const Quaternion& q) {
    return os << '(' << q.re << ", " << q.i << ", " << q.j << ", " << q.k << ')';
}

/// 4x4 real matrix L(a) with L(a) * embed(b) = embed(a * b).
inline Eigen::Matrix4d left_mult_matrix(const Quaternion& a) {
    Eigen::Matrix4d m;
    // column t is a * e_t
    for (int t = 0; t < 4; ++t) {
        const Quaternion col = a * Quaternion::unit(t);
        for (int s = 0; s < 4; ++s) m(s, t) = col[s];
    }
    return m;
}

/// A point of H^n.
using QPoint = std::vector<Quaternion>;

/// (q_0, ..., q_{n-1}) -> (x_0, ..., x_{4n-1}).
inline Eigen::VectorXd real_embed_point(std::span<const Quaternion> q) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(4 * q.size()));
    for (std::size_t p = 0; p < q.size(); ++p)
        for (int m = 0; m < 4; ++m) x(static_cast<Eigen::Index>(4 * p) + m) = q[p][m];
    return x;
}

inline QPoint real_unembed_point(const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() % 4 != 0) throw std::invalid_argument("real vector length must be a multiple of 4");
    QPoint q(static_cast<std::size_t>(x.size() / 4));
    for (std::size_t p = 0; p < q.size(); ++p)
        for (int m = 0; m < 4; ++m) q[p][m] = x(static_cast<Eigen::Index>(4 * p) + m);
    return q;
}

inline QPoint real_unembed_point(std::span<const double> x) {
    return real_unembed_point(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
}

}  // namespace qma
