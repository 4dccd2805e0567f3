#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "boundshift/boundary_points.hpp"
#include "boundshift/diagnostics.hpp"
#include "boundshift/hetgp.hpp"

namespace boundshift {

// Pointwise standard deviations below this are treated as degenerate: the
// grid point is excluded from every MAD maximum and flagged.
inline constexpr double kSigmaFloor = 1e-10;

struct NullEnsemble {
    Eigen::VectorXd grid;
    Eigen::MatrixXd curves;          // m x M, one null difference curve per column
    Eigen::VectorXd mu_en;           // pointwise mean
    Eigen::VectorXd sigma_en;        // pointwise sample sd (M - 1), floored
    std::vector<bool> degenerate;    // sigma below kSigmaFloor
    std::vector<double> simulated_mad;  // R_i for every curve

    Eigen::Index size() const { return curves.cols(); }
};

// Computes mu_en, sigma_en and R_i from the curves. Requires M >= 2.
NullEnsemble make_null_ensemble(Eigen::VectorXd grid, Eigen::MatrixXd curves);

// Null ensemble from disjoint pairs of predictive draws: T_i = f_{2i} - f_{2i+1}.
// Each pair has its own random stream derived from `seed`.
NullEnsemble build_null_ensemble(const PredictiveDistribution& pred, std::size_t M, std::uint64_t seed,
                                 Diagnostics* diag = nullptr);
NullEnsemble build_null_ensemble(const HetGpModel& model, const Eigen::VectorXd& grid,
                                 const BasisVector& target_basis, std::size_t M, std::uint64_t seed,
                                 PredictiveFlavor flavor = PredictiveFlavor::Latent,
                                 Diagnostics* diag = nullptr);

double mad_statistic(const Eigen::VectorXd& curve, const NullEnsemble& ensemble);

// Proportion of simulated statistics at least as large as the observed one.
double p_value(double r_obs, const std::vector<double>& r_sim);

struct EnvelopeBounds {
    double r_alpha = 0.0;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

// r_alpha = R_(M - floor(alpha M)) of the ascending simulated statistics.
std::size_t critical_order_index(std::size_t M, double alpha);
double critical_value(const std::vector<double>& r_sim, double alpha);
EnvelopeBounds envelope_bounds(const NullEnsemble& ensemble, double alpha);

struct EnvelopeTestResult {
    Eigen::VectorXd grid;
    Eigen::VectorXd t_obs;
    Eigen::VectorXd mu_en;
    Eigen::VectorXd sigma_en;
    double r_obs = 0.0;
    std::vector<double> r_sim;
    double p_value = 1.0;
    double alpha = 0.05;
    double r_alpha = 0.0;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::vector<bool> exceed_mask;
    std::vector<bool> degenerate;

    bool rejected() const { return p_value < alpha; }
    std::size_t exceed_count() const;
};

EnvelopeTestResult run_envelope_test(const Eigen::VectorXd& t_obs, const NullEnsemble& ensemble, double alpha);

// Case 1: T_obs = mean(pred_a) - mean(pred_b) on a shared grid, null ensemble
// from the latent predictive distribution of model_a.
EnvelopeTestResult test_case1(const HetGpModel& model_a, const PredictiveDistribution& pred_a,
                              const PredictiveDistribution& pred_b, std::size_t M, double alpha,
                              std::uint64_t seed, PredictiveFlavor ensemble_flavor = PredictiveFlavor::Latent,
                              Diagnostics* diag = nullptr);

// Case 2: T_obs(x) = mean(pred_a_at_obs)(x) - y_t(x) at the observed
// longitudes. `observed` is sorted by (longitude, latitude), which must match
// the grid of pred_a_at_obs (see observation_grid).
EnvelopeTestResult test_case2(const HetGpModel& model_a, const PredictiveDistribution& pred_a_at_obs,
                              const BoundaryPointSet& observed, std::size_t M, double alpha, std::uint64_t seed,
                              PredictiveFlavor ensemble_flavor = PredictiveFlavor::Latent,
                              Diagnostics* diag = nullptr);

// Observed points sorted by (longitude, latitude); duplicate longitudes stay.
BoundaryPointSet sorted_observations(const BoundaryPointSet& observed);
Eigen::VectorXd observation_grid(const BoundaryPointSet& sorted);

// Fraction of points whose deviation from the predicted mean lies inside the
// envelope at the nearest grid longitude, i.e. mean(x) - y in [lower, upper].
double coverage_proportion(const EnvelopeTestResult& result, const BoundaryPointSet& points,
                           const PredictiveDistribution& pred);

}  // namespace boundshift
