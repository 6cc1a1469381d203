#include <gtest/gtest.h>

#include <sstream>

#include "qma/hyperhermitian.hpp"
#include "qma/random.hpp"

namespace {

using qma::HyperhermitianMatrix;
using qma::QMatrix;
using qma::Quaternion;

const Quaternion kI{0, 1, 0, 0};
const Quaternion kJ{0, 0, 1, 0};
const Quaternion kK{0, 0, 0, 1};

HyperhermitianMatrix two_by_two(double a, Quaternion off, double b) {
    QMatrix m(2);
    m(0, 0) = a;
    m(0, 1) = off;
    m(1, 0) = off.conj();
    m(1, 1) = b;
    return HyperhermitianMatrix(m);
}

TEST(Hyperhermitian, RejectsAsymmetricInput) {
    QMatrix m(2);
    m(0, 1) = kI;
    m(1, 0) = kI;  // should be -i
    EXPECT_THROW(HyperhermitianMatrix{m}, qma::InputError);
    QMatrix d(1);
    d(0, 0) = Quaternion(1, 1e-3, 0, 0);  // non-real diagonal
    EXPECT_THROW(HyperhermitianMatrix{d}, qma::InputError);
}

TEST(RealEmbedMatrix, IdentityAndBlocks) {
    for (std::size_t n = 1; n <= 3; ++n)
        EXPECT_TRUE(qma::real_embed_matrix(HyperhermitianMatrix::identity(n)).isApprox(
            Eigen::MatrixXd::Identity(4 * n, 4 * n)));

    const HyperhermitianMatrix x = two_by_two(0, kJ, 0);
    const Eigen::MatrixXd xr = qma::real_embed_matrix(x);
    EXPECT_TRUE((xr.block<4, 4>(0, 4).isApprox(qma::left_mult_matrix(kJ))));
    EXPECT_TRUE((xr.block<4, 4>(4, 0).isApprox(qma::left_mult_matrix(-kJ))));
    EXPECT_TRUE(xr.isApprox(xr.transpose()));

    qma::Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const qma::QPoint q = qma::random_point(rng, 2);
        const Eigen::VectorXd lhs = qma::real_embed_point(x.matrix() * q);
        const Eigen::VectorXd rhs = xr * qma::real_embed_point(q);
        EXPECT_LT((lhs - rhs).norm(), 1e-12);
    }
}

TEST(RealEmbedMatrix, HandEvaluatedProduct) {
    // X = [[0, i], [-i, 0]], q = (1, k): Xq = (i k, -i) = (-j, -i).
    const HyperhermitianMatrix x = two_by_two(0, kI, 0);
    const qma::QPoint q{Quaternion(1.0), kK};
    Eigen::VectorXd expect(8);
    expect << 0, 0, -1, 0, 0, -1, 0, 0;
    EXPECT_LT((qma::real_embed_matrix(x) * qma::real_embed_point(q) - expect).norm(), 1e-15);
}

TEST(RealEmbedMatrix, PositiveMapsToPositiveSemidefinite) {
    qma::Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = qma::random_psd(rng, 3, 2);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(qma::real_embed_matrix(a));
        EXPECT_GE(es.eigenvalues()(0), -1e-10);
    }
}

TEST(RealUnembed, InvertsEmbedding) {
    qma::Rng rng(10);
    const QMatrix m = qma::random_qmatrix(rng, 3);
    const QMatrix back = qma::real_unembed(qma::real_embed(m));
    EXPECT_LT((back - m).max_abs(), 1e-14);
}

TEST(QEigenvalues, Examples) {
    const auto d = qma::q_eigenvalues(HyperhermitianMatrix::diagonal({3.0, 2.0}));
    ASSERT_EQ(d.values.size(), 2u);
    EXPECT_NEAR(d.values[0], 2.0, 1e-12);
    EXPECT_NEAR(d.values[1], 3.0, 1e-12);

    const auto e = qma::q_eigenvalues(two_by_two(1, kJ, 1));
    EXPECT_NEAR(e.values[0], 0.0, 1e-12);
    EXPECT_NEAR(e.values[1], 2.0, 1e-12);
}

TEST(QEigenvalues, SumIsRealTrace) {
    qma::Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + trial % 4;
        const auto x = qma::random_hyperhermitian(rng, n);
        double tr = 0.0;
        for (std::size_t r = 0; r < n; ++r) tr += x(r, r).re;
        double sum = 0.0;
        for (double v : qma::q_eigenvalues(x).values) sum += v;
        EXPECT_NEAR(sum, tr, 1e-10 * (1 + std::abs(tr)));
    }
}

TEST(MooreDet, Examples) {
    for (std::size_t n = 1; n <= 5; ++n) EXPECT_NEAR(qma::moore_det(HyperhermitianMatrix::identity(n)), 1.0, 1e-13);
    // Schur: 2 (3 - (-i)(1/2)(i)) = 2 (5/2)
    EXPECT_NEAR(qma::moore_det(two_by_two(2, kI, 3)), 5.0, 1e-12);
    EXPECT_NEAR(qma::moore_det_oracle(two_by_two(2, kI, 3)), 5.0, 1e-12);
    EXPECT_NEAR(qma::moore_det(two_by_two(1, kJ, 1)), 0.0, 1e-12);
    EXPECT_NEAR(qma::moore_det(HyperhermitianMatrix::diagonal({-1.0, 2.0, 3.0})), -6.0, 1e-12);
}

TEST(MooreDetOracle, BaseCasesAndPivoting) {
    EXPECT_DOUBLE_EQ(qma::moore_det_oracle(HyperhermitianMatrix::diagonal({-3.0})), -3.0);
    EXPECT_NEAR(qma::moore_det_oracle(two_by_two(1, kJ, 1)), 0.0, 1e-15);
    // zero leading pivot: [[0, 1], [1, 2]] has det -1
    EXPECT_NEAR(qma::moore_det_oracle(two_by_two(0, Quaternion(1.0), 2)), -1.0, 1e-14);
    // all diagonal entries vanish: perturbation + extrapolation, exact det -|j|^2 = -1
    EXPECT_NEAR(qma::moore_det_oracle(two_by_two(0, kJ, 0)), -1.0, 1e-9);
    EXPECT_THROW(qma::moore_det_oracle(HyperhermitianMatrix::identity(5)), qma::InputError);
}

TEST(MooreDet, OracleAgreementRandomPd3) {
    qma::Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = qma::random_pd(rng, 3);
        const double a = qma::moore_det(x), b = qma::moore_det_oracle(x);
        EXPECT_NEAR(a, b, 1e-9 * std::max(std::abs(a), std::abs(b)));
    }
}

TEST(MooreDet, PermutationInvariant) {
    qma::Rng rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = qma::random_hyperhermitian(rng, 3);
        const double d = qma::moore_det(x);
        const double dp = qma::moore_det(x.permuted({2, 0, 1}));
        EXPECT_NEAR(d, dp, 1e-9 * (1 + std::abs(d)));
    }
}

TEST(MooreDet, RealDeterminantIsFourthPower) {
    qma::Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = qma::random_pd(rng, 1 + trial % 3);
        const double d = qma::moore_det(x);
        const double dr = qma::real_embed_matrix(x).determinant();
        EXPECT_NEAR(dr, std::pow(d, 4), 1e-8 * std::pow(d, 4));
    }
}

TEST(MooreDet, NearDegenerateClusterProduct) {
    // Nearly equal quaternionic eigenvalues: positional grouping of the cluster
    // must still give the product.
    const auto x = HyperhermitianMatrix::diagonal({1.0, 1.0 + 1e-13, 2.0});
    EXPECT_NEAR(qma::moore_det(x), 2.0, 1e-11);
    const QMatrix u = QMatrix::identity(3);
    EXPECT_NEAR(qma::moore_det(x.congruence(u)), 2.0, 1e-11);
}

TEST(IsPsd, Examples) {
    EXPECT_TRUE(qma::is_psd(HyperhermitianMatrix::identity(2), 0.0));
    EXPECT_FALSE(qma::is_psd(HyperhermitianMatrix::diagonal({1.0, -1.0}), 1e-12));
    EXPECT_TRUE(qma::is_psd(two_by_two(1, kJ, 1), 1e-12));  // eigenvalues 0, 2
    EXPECT_TRUE(qma::is_psd(8.0 * HyperhermitianMatrix::identity(3), 0.0));
}

TEST(InfTrace, Examples) {
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto r = qma::inf_trace_value(HyperhermitianMatrix::identity(n));
        EXPECT_NEAR(r.value, 1.0, 1e-12);
        EXPECT_LT((r.minimizer.matrix() - QMatrix::identity(n)).max_abs(), 1e-12);
    }
    const auto x = HyperhermitianMatrix::diagonal({1.0, 4.0});
    const auto r = qma::inf_trace_value(x);
    EXPECT_NEAR(r.value, 2.0, 1e-12);
    EXPECT_NEAR(r.minimizer(0, 0).re, 2.0, 1e-12);
    EXPECT_NEAR(r.minimizer(1, 1).re, 0.5, 1e-12);
    EXPECT_NEAR(0.5 * qma::re_trace_product(r.minimizer, x), 2.0, 1e-12);
}

TEST(InfTrace, RejectsSingularOrIndefinite) {
    EXPECT_THROW(qma::inf_trace_value(HyperhermitianMatrix::diagonal({1.0, 0.0})), qma::InputError);
    EXPECT_THROW(qma::inf_trace_value(HyperhermitianMatrix::diagonal({1.0, -2.0})), qma::InputError);
}

TEST(InfTrace, MinimizerAndSampledLowerBound) {
    qma::Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + trial % 3;
        const auto x = qma::random_pd(rng, n);
        const auto r = qma::inf_trace_value(x);
        EXPECT_NEAR(qma::moore_det(r.minimizer), 1.0, 1e-9);
        EXPECT_NEAR(qma::re_trace_product(r.minimizer, x) / static_cast<double>(n), r.value, 1e-9 * (1 + r.value));
        for (int s = 0; s < 50; ++s) {
            const auto a = qma::normalize_det(qma::random_pd(rng, n, 0.05));
            EXPECT_GE(qma::re_trace_product(a, x) / static_cast<double>(n), r.value - 1e-9);
        }
    }
}

TEST(MatrixFile, ParseAndErrors) {
    std::istringstream good("2\n0 0 2 0 0 0\n0 1 0 1 0 0\n1 0 0 -1 0 0\n1 1 3 0 0 0\n");
    EXPECT_NEAR(qma::moore_det(qma::read_matrix(good)), 5.0, 1e-12);

    std::istringstream dup("1\n0 0 1 0 0 0\n");
    EXPECT_NO_THROW(qma::read_matrix(dup));
    std::istringstream missing("2\n0 0 1 0 0 0\n");
    EXPECT_THROW(qma::read_matrix(missing), qma::InputError);
    std::istringstream repeated("2\n0 0 1 0 0 0\n0 0 1 0 0 0\n0 1 0 0 0 0\n1 0 0 0 0 0\n");
    EXPECT_THROW(qma::read_matrix(repeated), qma::InputError);
    std::istringstream asym("2\n0 0 1 0 0 0\n0 1 0 1 0 0\n1 0 0 1 0 0\n1 1 1 0 0 0\n");
    EXPECT_THROW(qma::read_matrix(asym), qma::InputError);

    std::ostringstream out;
    const auto x = two_by_two(2, Quaternion(0.1, 0.2, 0.3, 0.4), 5);
    qma::write_matrix(out, x);
    std::istringstream back(out.str());
    EXPECT_EQ(qma::read_matrix(back).matrix(), x.matrix());
}

TEST(DetProperties, SuperadditivityAndConcavitySmallSample) {
    qma::Rng rng(41);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 3;
        const auto a = qma::random_psd(rng, n, 1 + trial % n);
        const auto b = qma::random_psd(rng, n, n);
        EXPECT_GE(qma::moore_det(a + b), qma::moore_det(a) + qma::moore_det(b) - 1e-9);
        const auto pa = qma::random_pd(rng, n), pb = qma::random_pd(rng, n);
        const double t = unit(rng), inv = 1.0 / static_cast<double>(n);
        EXPECT_GE(std::pow(qma::moore_det(t * pa + (1 - t) * pb), inv),
                  t * std::pow(qma::moore_det(pa), inv) + (1 - t) * std::pow(qma::moore_det(pb), inv) - 1e-9);
    }
}

}  // namespace
