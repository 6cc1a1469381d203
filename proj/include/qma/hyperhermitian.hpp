#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qma/error.hpp"
#include "qma/quaternion.hpp"

namespace qma {

/// Dense square quaternionic matrix, row-major.
class QMatrix {
public:
    QMatrix() = default;
    explicit QMatrix(std::size_t n) : n_(n), data_(n * n) {}

    static QMatrix identity(std::size_t n) {
        QMatrix m(n);
        for (std::size_t r = 0; r < n; ++r) m(r, r) = 1.0;
        return m;
    }

    static QMatrix diagonal(const std::vector<double>& d) {
        QMatrix m(d.size());
        for (std::size_t r = 0; r < d.size(); ++r) m(r, r) = d[r];
        return m;
    }

    std::size_t size() const { return n_; }
    Quaternion& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
    const Quaternion& operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }

    QMatrix conj_transpose() const {
        QMatrix t(n_);
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t c = 0; c < n_; ++c) t(c, r) = (*this)(r, c).conj();
        return t;
    }

    QMatrix transpose() const {
        QMatrix t(n_);
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t c = 0; c < n_; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    /// Largest entry modulus.
    double max_abs() const {
        double m = 0.0;
        for (const auto& q : data_) m = std::max(m, q.norm());
        return m;
    }

    QMatrix& operator+=(const QMatrix& o) {
        check_same(o);
        for (std::size_t a = 0; a < data_.size(); ++a) data_[a] += o.data_[a];
        return *this;
    }
    QMatrix& operator-=(const QMatrix& o) {
        check_same(o);
        for (std::size_t a = 0; a < data_.size(); ++a) data_[a] -= o.data_[a];
        return *this;
    }
    QMatrix& operator*=(double s) {
        for (auto& q : data_) q *= s;
        return *this;
    }

    friend QMatrix operator+(QMatrix a, const QMatrix& b) { return a += b; }
    friend QMatrix operator-(QMatrix a, const QMatrix& b) { return a -= b; }
    friend QMatrix operator*(QMatrix a, double s) { return a *= s; }
    friend QMatrix operator*(double s, QMatrix a) { return a *= s; }

    friend QMatrix operator*(const QMatrix& a, const QMatrix& b) {
        a.check_same(b);
        QMatrix c(a.n_);
        for (std::size_t r = 0; r < a.n_; ++r)
            for (std::size_t k = 0; k < a.n_; ++k) {
                const Quaternion& ark = a(r, k);
                for (std::size_t col = 0; col < a.n_; ++col) c(r, col) += ark * b(k, col);
            }
        return c;
    }

    friend std::vector<Quaternion> operator*(const QMatrix& a, const std::vector<Quaternion>& q) {
        if (q.size() != a.n_) throw std::invalid_argument("matrix-vector dimension mismatch");
        std::vector<Quaternion> out(a.n_);
        for (std::size_t r = 0; r < a.n_; ++r)
            for (std::size_t c = 0; c < a.n_; ++c) out[r] += a(r, c) * q[c];
        return out;
    }

    friend bool operator==(const QMatrix&, const QMatrix&) = default;

private:
    void check_same(const QMatrix& o) const {
        if (o.n_ != n_) throw std::invalid_argument("quaternionic matrix dimension mismatch");
    }

    std::size_t n_ = 0;
    std::vector<Quaternion> data_;
};

/// 4n x 4n real matrix whose (p, r) block is L(X_pr); satisfies (Xq)^R = X^R q^R.
inline Eigen::MatrixXd real_embed(const QMatrix& x) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd m(4 * n, 4 * n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            m.block<4, 4>(4 * r, 4 * c) =
                left_mult_matrix(x(static_cast<std::size_t>(r), static_cast<std::size_t>(c)));
    return m;
}

/// Inverse of real_embed on its image. Off-image input is projected blockwise
/// (each 4x4 block is averaged onto the nearest left-multiplication matrix).
inline QMatrix real_unembed(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    if (m.rows() != m.cols() || m.rows() % 4 != 0)
        throw InputError("real embedding must be square with size a multiple of 4");
    const std::size_t n = static_cast<std::size_t>(m.rows() / 4);
    QMatrix x(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const Eigen::Matrix4d blk = m.block<4, 4>(4 * static_cast<Eigen::Index>(r),
                                                      4 * static_cast<Eigen::Index>(c));
            // <L(e_s), blk> / 4 recovers component s of the quaternion.
            Quaternion q;
            for (int s = 0; s < 4; ++s) q[s] = (left_mult_matrix(Quaternion::unit(s)).cwiseProduct(blk)).sum() / 4.0;
            x(r, c) = q;
        }
    return x;
}

/// Square quaternionic matrix with a_{jk} = conj(a_{kj}); real diagonal.
class HyperhermitianMatrix {
public:
    static constexpr double kSymmetryTolerance = 1e-10;

    HyperhermitianMatrix() = default;

    /// Validates and then symmetrizes exactly: entries are replaced by the
    /// average of X and X*, which removes rounding-level asymmetry.
    explicit HyperhermitianMatrix(const QMatrix& x, double tol = kSymmetryTolerance) : m_(x.size()) {
        const std::size_t n = x.size();
        const double scale = std::max(1.0, x.max_abs());
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = r; c < n; ++c) {
                const Quaternion diff = x(r, c) - x(c, r).conj();
                if (diff.norm() > tol * scale) {
                    std::ostringstream os;
                    os << "matrix is not hyperhermitian at (" << r << ", " << c << "): asymmetry " << diff.norm();
                    throw InputError(os.str());
                }
                const Quaternion avg = 0.5 * (x(r, c) + x(c, r).conj());
                m_(r, c) = avg;
                m_(c, r) = avg.conj();
            }
        for (std::size_t r = 0; r < n; ++r) m_(r, r) = m_(r, r).re;
    }

    /// Symmetrizes without validation; for assembled data whose asymmetry is rounding noise.
    static HyperhermitianMatrix symmetrized(const QMatrix& x) {
        return HyperhermitianMatrix(0.5 * (x + x.conj_transpose()), std::numeric_limits<double>::infinity());
    }

    static HyperhermitianMatrix identity(std::size_t n) { return HyperhermitianMatrix(QMatrix::identity(n)); }
    static HyperhermitianMatrix diagonal(const std::vector<double>& d) {
        return HyperhermitianMatrix(QMatrix::diagonal(d));
    }

    std::size_t size() const { return m_.size(); }
    const Quaternion& operator()(std::size_t r, std::size_t c) const { return m_(r, c); }
    const QMatrix& matrix() const { return m_; }

    friend HyperhermitianMatrix operator+(const HyperhermitianMatrix& a, const HyperhermitianMatrix& b) {
        return symmetrized(a.m_ + b.m_);
    }
    friend HyperhermitianMatrix operator-(const HyperhermitianMatrix& a, const HyperhermitianMatrix& b) {
        return symmetrized(a.m_ - b.m_);
    }
    friend HyperhermitianMatrix operator*(double s, const HyperhermitianMatrix& a) { return symmetrized(s * a.m_); }
    friend HyperhermitianMatrix operator*(const HyperhermitianMatrix& a, double s) { return s * a; }

    /// U X U* for any square U (a congruence keeps the hyperhermitian property).
    HyperhermitianMatrix congruence(const QMatrix& u) const { return symmetrized(u * m_ * u.conj_transpose()); }

    /// Symmetric permutation: result(r, c) = X(perm[r], perm[c]).
    HyperhermitianMatrix permuted(const std::vector<std::size_t>& perm) const {
        QMatrix p(size());
        for (std::size_t r = 0; r < size(); ++r)
            for (std::size_t c = 0; c < size(); ++c) p(r, c) = m_(perm[r], perm[c]);
        return HyperhermitianMatrix(p);
    }

private:
    QMatrix m_;
};

inline Eigen::MatrixXd real_embed_matrix(const HyperhermitianMatrix& x) {
    Eigen::MatrixXd m = real_embed(x.matrix());
    // symmetric up to rounding by construction; make it exact
    return 0.5 * (m + m.transpose());
}

/// Re Tr(A B) for quaternionic matrices.
inline double re_trace_product(const QMatrix& a, const QMatrix& b) {
    if (a.size() != b.size()) throw std::invalid_argument("trace product dimension mismatch");
    double s = 0.0;
    for (std::size_t r = 0; r < a.size(); ++r)
        for (std::size_t c = 0; c < a.size(); ++c) s += (a(r, c) * b(c, r)).re;
    return s;
}

inline double re_trace_product(const HyperhermitianMatrix& a, const HyperhermitianMatrix& b) {
    return re_trace_product(a.matrix(), b.matrix());
}

/// Quaternionic eigenvalues, ascending.
struct QEigenSpectrum {
    std::vector<double> values;
};

/// Eigenvalues of X^R are the quaternionic eigenvalues, each repeated four
/// times. Grouping is positional on the sorted real spectrum; a degenerate
/// cluster straddling a group boundary yields the same product either way.
inline QEigenSpectrum q_eigenvalues(const HyperhermitianMatrix& x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(real_embed_matrix(x), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double scale = 1.0 + ev.cwiseAbs().maxCoeff();
    QEigenSpectrum out;
    out.values.reserve(n);
    for (std::size_t g = 0; g < n; ++g) {
        const auto base = static_cast<Eigen::Index>(4 * g);
        const double lo = ev(base);
        const double hi = ev(base + 3);
        if (hi - lo > 1e-8 * scale) {
            std::ostringstream os;
            os << "eigenvalue quadruple " << g << " has spread " << (hi - lo) << " (degenerate grouping)";
            throw NumericalError(os.str());
        }
        out.values.push_back(ev.segment<4>(base).mean());
    }
    return out;
}

namespace detail {

inline double schur_det(QMatrix a) {
    double det = 1.0;
    std::size_t n = a.size();
    const double zero_pivot = 1e-12;
    while (n > 1) {
        std::size_t p = 0;
        for (std::size_t r = 1; r < n; ++r)
            if (std::abs(a(r, r).re) > std::abs(a(p, p).re)) p = r;
        if (std::abs(a(p, p).re) < zero_pivot) throw NumericalError("all diagonal pivots vanish");
        if (p != 0) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(0, c), a(p, c));
            for (std::size_t r = 0; r < n; ++r) std::swap(a(r, 0), a(r, p));
        }
        const double pivot = a(0, 0).re;
        QMatrix s(n - 1);
        for (std::size_t r = 1; r < n; ++r)
            for (std::size_t c = 1; c < n; ++c) s(r - 1, c - 1) = a(r, c) - a(r, 0) * a(0, c) * (1.0 / pivot);
        // Schur complement of a hyperhermitian matrix is hyperhermitian; clear rounding.
        for (std::size_t r = 0; r + 1 < n; ++r) s(r, r) = s(r, r).re;
        det *= pivot;
        a = std::move(s);
        --n;
    }
    return det * a(0, 0).re;
}

}  // namespace detail

/// Moore determinant by Schur-complement recursion, det A = a_11 det(A / a_11).
/// Independent of the eigenvalue path; restricted to n <= 4.
inline double moore_det_oracle(const HyperhermitianMatrix& x) {
    if (x.size() == 0) return 1.0;
    if (x.size() > 4) throw InputError("moore_det_oracle supports n <= 4");
    try {
        return detail::schur_det(x.matrix());
    } catch (const NumericalError&) {
        // Every diagonal entry vanished somewhere in the recursion: det(X + eps Id)
        // is a polynomial in eps, extrapolate linearly from eps and 2 eps.
        const double eps = 1e-8 * std::max(1.0, x.matrix().max_abs());
        const QMatrix id = QMatrix::identity(x.size());
        const double d1 = detail::schur_det(x.matrix() + eps * id);
        const double d2 = detail::schur_det(x.matrix() + 2.0 * eps * id);
        return 2.0 * d1 - d2;
    }
}

/// Moore determinant as the product of quaternionic eigenvalues. Falls back
/// to the Schur oracle when eigenvalue grouping is degenerate and n <= 4.
inline double moore_det(const HyperhermitianMatrix& x) {
    try {
        double p = 1.0;
        for (double v : q_eigenvalues(x).values) p *= v;
        return p;
    } catch (const NumericalError&) {
        if (x.size() <= 4) return moore_det_oracle(x);
        throw;
    }
}

inline bool is_psd(const HyperhermitianMatrix& x, double tol) {
    if (x.size() == 0) return true;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(real_embed_matrix(x), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0) >= -tol;
}

struct InfTraceResult {
    double value = 0.0;
    HyperhermitianMatrix minimizer;
};

/// (det X)^{1/n} = (1/n) inf { Re Tr(a X) : a > 0, det a >= 1 }, attained at
/// a* = (det X)^{1/n} X^{-1}. X^{-1} is computed in the real embedding.
inline InfTraceResult inf_trace_value(const HyperhermitianMatrix& x) {
    const std::size_t n = x.size();
    if (n == 0) throw InputError("inf_trace_value of an empty matrix");
    const Eigen::MatrixXd xr = real_embed_matrix(x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xr);
    const double lmin = es.eigenvalues()(0);
    const double lmax = es.eigenvalues()(es.eigenvalues().size() - 1);
    if (!(lmin > 1e-14 * std::max(1.0, std::abs(lmax))))
        throw InputError("inf_trace_value requires a positive definite matrix");
    const Eigen::MatrixXd inv =
        es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    const double root = std::pow(moore_det(x), 1.0 / static_cast<double>(n));
    return {root, root * HyperhermitianMatrix::symmetrized(real_unembed(inv))};
}

/// Plain-text matrix format: first line n, then n^2 lines "row col x0 x1 x2 x3"
/// with zero-based row/col. Every entry must appear exactly once.
inline HyperhermitianMatrix read_matrix(std::istream& in) {
    long long n = 0;
    if (!(in >> n) || n <= 0) throw InputError("matrix file: first line must be a positive dimension n");
    const auto un = static_cast<std::size_t>(n);
    QMatrix m(un);
    std::vector<char> seen(un * un, 0);
    for (std::size_t e = 0; e < un * un; ++e) {
        long long r = 0, c = 0;
        Quaternion q;
        if (!(in >> r >> c >> q.re >> q.i >> q.j >> q.k))
            throw InputError("matrix file: expected " + std::to_string(un * un) + " entry lines, got " +
                             std::to_string(e));
        if (r < 0 || c < 0 || r >= n || c >= n)
            throw InputError("matrix file: index out of range (" + std::to_string(r) + ", " + std::to_string(c) + ")");
        const std::size_t slot = static_cast<std::size_t>(r) * un + static_cast<std::size_t>(c);
        if (seen[slot]) throw InputError("matrix file: duplicate entry (" + std::to_string(r) + ", " + std::to_string(c) + ")");
        seen[slot] = 1;
        m(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = q;
    }
    return HyperhermitianMatrix(m);
}

inline HyperhermitianMatrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open matrix file: " + path);
    return read_matrix(in);
}

inline void write_matrix(std::ostream& out, const HyperhermitianMatrix& x) {
    out.precision(17);
    out << x.size() << '\n';
    for (std::size_t r = 0; r < x.size(); ++r)
        for (std::size_t c = 0; c < x.size(); ++c) {
            const Quaternion& q = x(r, c);
            out << r << ' ' << c << ' ' << q.re << ' ' << q.i << ' ' << q.j << ' ' << q.k << '\n';
        }
}

}  // namespace qma
