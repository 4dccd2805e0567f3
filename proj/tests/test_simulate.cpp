#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "boundshift/simulate.hpp"

using namespace boundshift;

namespace {

// Textbook recursive Cox-de Boor definition, half-open spans.
double cox_de_boor(const Eigen::VectorXd& t, int j, int k, double x) {
    if (k == 0) return (t[j] <= x && x < t[j + 1]) ? 1.0 : 0.0;
    double left = 0.0, right = 0.0;
    if (t[j + k] > t[j]) left = (x - t[j]) / (t[j + k] - t[j]) * cox_de_boor(t, j, k - 1, x);
    if (t[j + k + 1] > t[j + 1]) right = (t[j + k + 1] - x) / (t[j + k + 1] - t[j + 1]) * cox_de_boor(t, j + 1, k - 1, x);
    return left + right;
}

double oracle_eval(const SplineBoundary& b, double x) {
    double s = b.offset;
    for (Eigen::Index j = 0; j < b.basis_count(); ++j) s += b.coefficients[j] * cox_de_boor(b.knots, int(j), b.degree, x);
    return s;
}

}  // namespace

TEST(Spline, ReferenceKnotVector) {
    const SplineBoundary b = SplineBoundary::reference();
    ASSERT_EQ(b.knots.size(), 20);
    EXPECT_EQ(b.basis_count(), 16);
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(b.knots[i], -20.0);
        EXPECT_EQ(b.knots[19 - i], 60.0);
    }
    // 12 equispaced interior breakpoints: 13 spans of 80/13.
    for (int i = 4; i < 16; ++i) EXPECT_NEAR(b.knots[i], -20.0 + 80.0 * (i - 3) / 13.0, 1e-12);
    EXPECT_EQ(b.offset, 15.0);
    const std::vector<double> beta{0, -1, -1, -1, -2, -2, -2, -2.5, -1, -2, -2, -3, -3, 1, -1, -3};
    for (int j = 0; j < 16; ++j) EXPECT_EQ(b.coefficients[j], beta[j]);
}

TEST(Spline, ZeroCoefficientsGiveOffset) {
    const SplineBoundary b = SplineBoundary::clamped_uniform(-20, 60, 12, Eigen::VectorXd::Zero(16), 15.0);
    for (double x = -20; x <= 60; x += 3.3) EXPECT_EQ(bspline_eval(b, x), 15.0);
}

TEST(Spline, PartitionOfUnity) {
    const SplineBoundary b = SplineBoundary::clamped_uniform(-20, 60, 12, Eigen::VectorXd::Ones(16), 0.0);
    for (int i = 0; i <= 1000; ++i) {
        const double x = -20.0 + 80.0 * i / 1000.0;
        const Eigen::VectorXd v = bspline_basis(b, x);
        EXPECT_NEAR(v.sum(), 1.0, 1e-12) << x;
        EXPECT_GE(v.minCoeff(), 0.0);
        EXPECT_LE(int((v.array() > 0).count()), 4);
    }
}

TEST(Spline, MatchesRecursiveOracle) {
    const SplineBoundary b = SplineBoundary::reference();
    for (int i = 0; i < 20; ++i) {
        const double x = -19.5 + 79.0 * i / 19.0;
        EXPECT_NEAR(bspline_eval(b, x), oracle_eval(b, x), 1e-9) << x;
    }
}

TEST(Spline, EndpointsAndDomain) {
    const SplineBoundary b = SplineBoundary::reference();
    EXPECT_NEAR(bspline_eval(b, -20.0), 15.0 + 0.0, 1e-12);  // clamped: value is beta_0 + C0
    EXPECT_NEAR(bspline_eval(b, 60.0), 15.0 - 3.0, 1e-12);
    EXPECT_THROW(bspline_eval(b, 60.5), std::out_of_range);
    EXPECT_THROW(bspline_eval(b, -21.0), std::out_of_range);
}

TEST(Spline, PerturbationIsLocalToSupport) {
    const SplineBoundary b = SplineBoundary::reference();
    const SplineBoundary p = perturbed_boundary(b, 13, 5.0);
    const auto [lo, hi] = b.support(13);
    EXPECT_EQ(lo, b.knots[13]);
    EXPECT_EQ(hi, b.knots[17]);
    for (int i = 0; i <= 800; ++i) {
        const double x = -20.0 + i / 10.0;
        const double d = bspline_eval(p, x) - bspline_eval(b, x);
        if (x <= lo || x >= hi)
            EXPECT_EQ(d, 0.0) << x;
        else
            EXPECT_GT(d, 0.0) << x;
    }
    const SplineBoundary same = perturbed_boundary(b, 13, b.coefficients[13]);
    EXPECT_EQ(bspline_eval(same, 33.3), bspline_eval(b, 33.3));
    EXPECT_THROW(perturbed_boundary(b, 16, 1.0), std::out_of_range);
    EXPECT_THROW(perturbed_boundary(b, -1, 1.0), std::out_of_range);
}

TEST(Spline, PerturbationSequence) {
    const auto v = default_perturbation_values();
    ASSERT_EQ(v.size(), 9u);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_DOUBLE_EQ(v[i], 1.0 + 0.5 * double(i));
}

TEST(Realization, VanishingNoiseReturnsMean) {
    const SplineBoundary b = SplineBoundary::reference();
    SimErrorConfig err = default_error_config(200);
    err.kernel.variance = 1e-12;
    const Eigen::VectorXd r = draw_realization(b, err, 1);
    EXPECT_LT((r - bspline_eval(b, err.grid)).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Realization, DeterministicInSeed) {
    const SplineBoundary b = SplineBoundary::reference();
    const SimErrorConfig err = default_error_config(100);
    EXPECT_EQ(draw_realization(b, err, 7), draw_realization(b, err, 7));
    EXPECT_NE(draw_realization(b, err, 7), draw_realization(b, err, 8));
}

TEST(Realization, VarianceAndLagFiveCorrelation) {
    const SplineBoundary b = SplineBoundary::reference();
    SimErrorConfig err;
    err.grid = Eigen::VectorXd::LinSpaced(61, 0.0, 60.0);  // unit spacing
    const SimulationHarness h(b, err);
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd draws = h.realizations(b, 5000, rng);
    const Eigen::MatrixXd e = draws.colwise() - bspline_eval(b, err.grid);
    const Eigen::Index i = 30, j = 35;
    const double mi = e.row(i).mean(), mj = e.row(j).mean();
    const double vi = (e.row(i).array() - mi).square().sum() / 4999.0;
    const double vj = (e.row(j).array() - mj).square().sum() / 4999.0;
    const double cij = ((e.row(i).array() - mi) * (e.row(j).array() - mj)).sum() / 4999.0;
    EXPECT_NEAR(vi, 0.01, 0.001);
    EXPECT_NEAR(cij / std::sqrt(vi * vj), std::exp(-0.5), 0.05);
}

TEST(Harness, NullIterationIsDeterministicAndWellFormed) {
    const SimulationHarness h(SplineBoundary::reference(), default_error_config(100));
    const EnvelopeTestResult a = h.null_iteration(200, 0.05, 11);
    const EnvelopeTestResult b = h.null_iteration(200, 0.05, 11);
    EXPECT_EQ(a.p_value, b.p_value);
    EXPECT_EQ(a.r_sim.size(), 200u);
    EXPECT_EQ(a.grid.size(), 100);
    EXPECT_EQ(a.rejected(), a.p_value < 0.05);
}

TEST(Harness, AlternativesShareNullEnsemble) {
    const SplineBoundary b = SplineBoundary::reference();
    const SimulationHarness h(b, default_error_config(100));
    const std::vector<SplineBoundary> alts{perturbed_boundary(b, 13, 1.0), perturbed_boundary(b, 13, 5.0)};
    const auto res = h.alternative_iteration(200, 0.05, alts, 12);
    ASSERT_EQ(res.size(), 2u);
    EXPECT_EQ(res[0].r_sim, res[1].r_sim);
    EXPECT_GT(res[1].r_obs, res[0].r_obs);
}

TEST(Studies, SmallSizeStudyIsReproducible) {
    StudySettings s{100, 40, 200, 0.05};
    const StudyReport a = run_size_study(s, 5), b = run_size_study(s, 5);
    ASSERT_EQ(a.p_values.size(), 40u);
    EXPECT_EQ(a.p_values, b.p_values);
    const double rate = std::count_if(a.p_values.begin(), a.p_values.end(), [](double p) { return p < 0.05; }) / 40.0;
    EXPECT_EQ(a.rejection_rate, rate);
    EXPECT_TRUE(std::isnan(a.perturbation));
    StudyOptions two_threads;
    two_threads.threads = 2;
    EXPECT_EQ(run_size_study(s, 5, two_threads).p_values, a.p_values);
}

TEST(Studies, SmallPowerStudyHasOneReportPerValue) {
    StudySettings s{200, 30, 200, 0.05};
    const auto reports = run_power_study(s, default_perturbation_values(), 6);
    ASSERT_EQ(reports.size(), 9u);
    EXPECT_EQ(reports.front().perturbation, 1.0);
    EXPECT_EQ(reports.back().perturbation, 5.0);
    EXPECT_GE(reports.back().rejection_rate, reports.front().rejection_rate);
    EXPECT_GT(reports.back().rejection_rate, 0.5);
}
