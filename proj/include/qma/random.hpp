#pragma once

#include <cmath>
#include <cstddef>
#include <random>

#include "qma/hyperhermitian.hpp"
#include "qma/quaternion.hpp"

namespace qma {

/// Generators for randomized suites. All take the engine by reference so a
/// single seed determines an entire run.
using Rng = std::mt19937_64;

inline Quaternion random_quaternion(Rng& rng, double sigma = 1.0) {
    std::normal_distribution<double> d(0.0, sigma);
    return {d(rng), d(rng), d(rng), d(rng)};
}

inline Quaternion random_unit_quaternion(Rng& rng) {
    Quaternion q;
    do { q = random_quaternion(rng); } while (q.norm2() < 1e-12);
    return q * (1.0 / q.norm());
}

inline QPoint random_point(Rng& rng, std::size_t n, double sigma = 1.0) {
    QPoint q(n);
    for (auto& e : q) e = random_quaternion(rng, sigma);
    return q;
}

inline QMatrix random_qmatrix(Rng& rng, std::size_t n, double sigma = 1.0) {
    QMatrix m(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) m(r, c) = random_quaternion(rng, sigma);
    return m;
}

/// Hyperhermitian matrix with Gaussian entries (generally indefinite).
inline HyperhermitianMatrix random_hyperhermitian(Rng& rng, std::size_t n) {
    const QMatrix b = random_qmatrix(rng, n);
    return HyperhermitianMatrix::symmetrized(b + b.conj_transpose());
}

/// B B* with B having `rank` Gaussian columns; PSD, and PD when rank == n
/// (almost surely).
inline HyperhermitianMatrix random_psd(Rng& rng, std::size_t n, std::size_t rank) {
    QMatrix b(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < rank && c < n; ++c) b(r, c) = random_quaternion(rng);
    return HyperhermitianMatrix::symmetrized(b * b.conj_transpose());
}

/// Positive definite with a spectrum bounded away from zero.
inline HyperhermitianMatrix random_pd(Rng& rng, std::size_t n, double floor = 0.1) {
    return random_psd(rng, n, n) + floor * HyperhermitianMatrix::identity(n);
}

/// Rescales a positive definite matrix to Moore determinant 1.
inline HyperhermitianMatrix normalize_det(const HyperhermitianMatrix& a) {
    return std::pow(moore_det(a), -1.0 / static_cast<double>(a.size())) * a;
}

}  // namespace qma
