#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "boundshift/kernel.hpp"

using namespace boundshift;

TEST(Kernel, ZeroDistanceGivesVariance) {
    for (auto fam : {KernelFamily::Matern32, KernelFamily::SquaredExponential})
        EXPECT_DOUBLE_EQ(kernel_eval({2.5, 0.7, fam}, 0.0), 2.5);
}

TEST(Kernel, Matern32HandValue) {
    const double expected = (1.0 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0));
    EXPECT_NEAR(kernel_eval({1.0, 1.0, KernelFamily::Matern32}, 1.0), expected, 1e-15);
    EXPECT_NEAR(expected, 0.48335, 1e-5);
}

TEST(Kernel, SquaredExponentialSimulationParameters) {
    EXPECT_NEAR(kernel_eval({0.01, 5.0, KernelFamily::SquaredExponential}, 5.0), 0.01 * std::exp(-0.5), 1e-17);
}

TEST(Kernel, MonotoneNonincreasing) {
    for (auto fam : {KernelFamily::Matern32, KernelFamily::SquaredExponential}) {
        double prev = kernel_eval({1.3, 2.0, fam}, 0.0);
        for (double d = 0.01; d < 30.0; d += 0.01) {
            const double v = kernel_eval({1.3, 2.0, fam}, d);
            EXPECT_LE(v, prev);
            prev = v;
        }
    }
}

TEST(Kernel, LogLengthscaleDerivativeMatchesFiniteDifference) {
    for (auto fam : {KernelFamily::Matern32, KernelFamily::SquaredExponential})
        for (double d : {0.0, 0.3, 1.0, 4.0}) {
            const double ell = 1.7, h = 1e-6;
            const double up = kernel_eval({0.8, ell * std::exp(h), fam}, d);
            const double dn = kernel_eval({0.8, ell * std::exp(-h), fam}, d);
            EXPECT_NEAR(kernel_dlog_lengthscale({0.8, ell, fam}, d), (up - dn) / (2 * h), 1e-8);
        }
}

TEST(Kernel, InvalidParamsThrow) {
    EXPECT_THROW((KernelParams{0.0, 1.0}.validate()), std::invalid_argument);
    EXPECT_THROW((KernelParams{1.0, -1.0}.validate()), std::invalid_argument);
    EXPECT_THROW(kernel_eval({1.0, 1.0}, -0.1), std::invalid_argument);
}

TEST(CovMatrix, SinglePoint) {
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
    const CovMatrix c = cov_matrix({3.0, 1.0}, x, 1e-6);
    ASSERT_EQ(c.entries.rows(), 1);
    EXPECT_DOUBLE_EQ(c.entries(0, 0), 3.0 + 1e-6);
}

TEST(CovMatrix, CorrelationFormHasUnitDiagonalPlusJitter) {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(6, 0.0, 5.0);
    const CovMatrix c = cov_matrix({1.0, 2.0}, x, 1e-8);
    for (Eigen::Index i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(c.entries(i, i), 1.0 + 1e-8);
}

TEST(CovMatrix, MatchesElementwiseLoop) {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(3, 0.0, 2.0);
    const KernelParams p{1.5, 0.9, KernelFamily::Matern32};
    const CovMatrix c = cov_matrix(p, x, x, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(c.entries(i, j), kernel_eval(p, std::abs(x[i] - x[j])));
    EXPECT_TRUE(c.entries.isApprox(c.entries.transpose()));
}

TEST(CovMatrix, CrossCovarianceShape) {
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, 0.0, 3.0), y = Eigen::VectorXd::LinSpaced(2, 0.5, 1.5);
    const Eigen::MatrixXd k = cross_covariance({1.0, 1.0}, x, y);
    EXPECT_EQ(k.rows(), 4);
    EXPECT_EQ(k.cols(), 2);
    EXPECT_DOUBLE_EQ(k(1, 0), kernel_eval({1.0, 1.0}, 0.5));
}

TEST(CovMatrix, SymmetricPsdForDistinctInputs) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-10, 10);
    Eigen::VectorXd x(40);
    for (auto& v : x) v = U(rng);
    for (auto fam : {KernelFamily::Matern32, KernelFamily::SquaredExponential}) {
        const KernelParams p{2.0, 3.0, fam};
        const CovMatrix c = cov_matrix(p, x, x, 1e-10 * p.variance);
        EXPECT_TRUE(c.entries.isApprox(c.entries.transpose(), 0.0));
        EXPECT_NO_THROW(chol_factor(c));
    }
}

TEST(Cholesky, IdentityFactor) {
    CovMatrix m{Eigen::MatrixXd::Identity(4, 4), 0.0, 1.0};
    EXPECT_TRUE(chol_factor(m).lower().isApprox(Eigen::MatrixXd::Identity(4, 4)));
}

TEST(Cholesky, HandTwoByTwo) {
    Eigen::MatrixXd a(2, 2);
    a << 4, 2, 2, 3;
    const CholeskyFactor f = chol_factor({a, 0.0, 1.0});
    EXPECT_NEAR(f.lower()(0, 0), 2.0, 1e-15);
    EXPECT_NEAR(f.lower()(0, 1), 0.0, 1e-15);
    EXPECT_NEAR(f.lower()(1, 0), 1.0, 1e-15);
    EXPECT_NEAR(f.lower()(1, 1), std::sqrt(2.0), 1e-15);
}

TEST(Cholesky, ReconstructionSolveAndLogDet) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> N;
    for (int n = 2; n <= 6; ++n) {
        Eigen::MatrixXd b(n, n);
        for (auto& v : b.reshaped()) v = N(rng);
        const Eigen::MatrixXd a = b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
        const CholeskyFactor f = chol_factor({a, 0.0, 1.0});
        EXPECT_LT((f.lower() * f.lower().transpose() - a).norm(), 1e-8);
        EXPECT_NEAR(f.log_determinant(), std::log(a.determinant()), 1e-6 * std::abs(std::log(a.determinant())) + 1e-12);
        Eigen::VectorXd rhs(n);
        for (auto& v : rhs) v = N(rng);
        EXPECT_LT((a * f.solve(rhs) - rhs).norm(), 1e-9);
        EXPECT_LT((f.inverse() * a - Eigen::MatrixXd::Identity(n, n)).norm(), 1e-9);
    }
}

TEST(Cholesky, JitterLadderRescuesDuplicateInputs) {
    Eigen::VectorXd x(4);
    x << 0.0, 1.0, 1.0, 2.0;
    // Duplicate rows make the zero-jitter matrix singular.
    CovMatrix c = cov_matrix({1.0, 5.0, KernelFamily::SquaredExponential}, x, 0.0);
    Diagnostics diag;
    const CholeskyFactor f = chol_factor(c, &diag);
    EXPECT_GT(f.extra_jitter(), 0.0);
    EXPECT_LE(f.extra_jitter(), 1e-4);
    EXPECT_FALSE(diag.empty());
}

TEST(Cholesky, IndefiniteMatrixThrowsWithPivot) {
    Eigen::MatrixXd a(3, 3);
    a << 1, 0, 0, 0, -1, 0, 0, 0, 1;
    try {
        chol_factor({a, 0.0, 1.0});
        FAIL() << "expected FactorizationError";
    } catch (const FactorizationError& e) {
        EXPECT_EQ(e.pivot(), 1u);
        EXPECT_LT(e.pivot_value(), 0.0);
    }
}

TEST(Cholesky, FirstFailingPivotOnPositiveDefinite) {
    const auto [pivot, value] = first_failing_pivot(Eigen::MatrixXd::Identity(3, 3));
    EXPECT_EQ(pivot, 3u);
    EXPECT_TRUE(std::isinf(value));
}
