#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "boundshift/diagnostics.hpp"
#include "boundshift/kernel.hpp"
#include "boundshift/optimizer.hpp"
#include "boundshift/temporal_basis.hpp"

namespace boundshift {

struct TrainingRecord {
    double year = 0.0;
    double longitude = 0.0;
    double latitude = 0.0;
};

// Boundary points pooled over one or more years, with the temporal design row
// of every record. Records are kept in canonical (longitude, latitude, year)
// order so that fits do not depend on input order.
struct TrainingSet {
    std::vector<TrainingRecord> records;
    Eigen::MatrixXd design;

    // Validates (>= 5 records, >= 2 distinct longitudes, finite values) and
    // builds the design matrix. Throws std::invalid_argument.
    static TrainingSet build(std::vector<TrainingRecord> records, const TemporalDesignConfig& config);

    std::size_t size() const { return records.size(); }
    Eigen::VectorXd longitudes() const;
    Eigen::VectorXd latitudes() const;
    double longitude_range() const;
    double mean_year() const;
};

struct HetGpConfig {
    TemporalDesignConfig temporal;

    double var_floor = 1e-8;
    double relative_loglik_tol = 1e-5;
    int max_outer_iterations = 20;

    // Multi-start lengthscales as fractions of the training longitude range.
    std::vector<double> start_fractions{0.1, 0.3, 1.0};
    double lengthscale_lower_fraction = 0.01;
    double lengthscale_upper_fraction = 10.0;
    double kappa_g_lower = 1e-6;
    double kappa_g_upper = 1e2;
    double g_mean_lower = -20.0;
    double g_mean_upper = 5.0;
    // Homoskedastic pilot: Lambda = ratio * I with the ratio optimized here.
    double nugget_ratio_lower = 1e-6;
    double nugget_ratio_upper = 1e2;

    // Weight kept on the previous pilot ratios when they are refreshed
    // between outer iterations; 0 replaces them outright.
    double refresh_damping = 0.5;

    // Temporal regression coefficients estimated elsewhere, typically over a
    // whole study period. Estimated from the training set when unset.
    std::optional<Eigen::VectorXd> fixed_beta;

    QuasiNewtonOptions optimizer;
};

// Variance of log(chi^2_1); the observation noise of log squared residuals.
inline constexpr double kLogChiSquareVariance = 4.934802200544679;  // pi^2 / 2
// E[log chi^2_1] = digamma(1/2) + log 2.
inline constexpr double kLogChiSquareMean = -1.2703628454614782;

// Posterior mean of the log noise-ratio GP (log lambda) at the training inputs,
// smoothing `pilot_z` with a GP of covariance theta_g, constant mean g_mean and
// per-point observation variance kLogChiSquareVariance.
class LogVarianceSmoother {
public:
    LogVarianceSmoother() = default;
    LogVarianceSmoother(const Eigen::VectorXd& inputs, const KernelParams& theta_g, double g_mean,
                        const Eigen::VectorXd& pilot_z, Diagnostics* diag = nullptr);

    const Eigen::VectorXd& fitted() const { return fitted_; }
    // Posterior mean at new inputs.
    Eigen::VectorXd predict(const Eigen::VectorXd& inputs, const Eigen::VectorXd& at) const;
    const CholeskyFactor& factor() const { return factor_; }
    const Eigen::VectorXd& weights() const { return weights_; }

private:
    KernelParams theta_g_;
    double g_mean_ = 0.0;
    CholeskyFactor factor_;
    Eigen::VectorXd weights_;
    Eigen::VectorXd fitted_;
};

struct HetGpModel {
    TemporalDesignConfig temporal;
    Eigen::VectorXd beta;
    KernelParams theta_f;  // variance holds kappa_f_sq
    KernelParams theta_g;
    double g_mean = 0.0;
    double kappa_f_sq = 0.0;
    Eigen::VectorXd lambda;
    Eigen::VectorXd pilot_z;
    TrainingSet training;

    double log_likelihood = 0.0;
    bool converged = true;
    int outer_iterations = 0;
    std::vector<std::string> warnings;

    // Derived state, rebuilt by refresh().
    CholeskyFactor factor;          // of C_f + Lambda
    Eigen::VectorXd residuals;      // y - R beta
    Eigen::VectorXd alpha;          // (C_f + Lambda)^{-1} residuals
    LogVarianceSmoother smoother;

    // Recompute factor, residuals, alpha and the smoother from the stored
    // hyperparameters. Used after deserialization.
    void refresh(Diagnostics* diag = nullptr);

    // sigma^2(x) = kappa_f_sq * exp(log lambda(x)).
    Eigen::VectorXd noise_variance(const Eigen::VectorXd& at) const;
    // Log of sigma^2(x): the fitted log-variance surface.
    Eigen::VectorXd log_variance(const Eigen::VectorXd& at) const;
};

enum class PredictiveFlavor { Latent, Noisy };

struct PredictiveDistribution {
    Eigen::VectorXd grid;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    PredictiveFlavor flavor = PredictiveFlavor::Latent;
    bool extrapolated = false;
};

Eigen::VectorXd estimate_beta(const TrainingSet& training);

double profile_kappa(const Eigen::VectorXd& residuals, const CholeskyFactor& factor,
                     Diagnostics* diag = nullptr);

// Builds Lambda = exp(smoothed pilot_z), profiles kappa_f_sq and returns
// -(n/2) log 2pi - (n/2) log kappa - 1/2 log|C_f + Lambda| - n/2.
// Returns -inf if the covariance cannot be factorized.
double conditional_loglik(double lengthscale_f, const KernelParams& theta_g, double g_mean,
                          const Eigen::VectorXd& pilot_z, const TrainingSet& training);
double conditional_loglik(double lengthscale_f, const KernelParams& theta_g, double g_mean,
                          const Eigen::VectorXd& pilot_z, const TrainingSet& training,
                          const Eigen::VectorXd& residuals);

// Same objective with the analytic gradient with respect to
// (log l_f, log l_g, log kappa_g^2, g_mean), written into `grad`.
double conditional_loglik_with_gradient(const Eigen::VectorXd& log_params, const Eigen::VectorXd& pilot_z,
                                        const Eigen::VectorXd& inputs, const Eigen::VectorXd& residuals,
                                        Eigen::VectorXd* grad);

// Log marginal likelihood of the bias-corrected pilot ratios under the
// log-variance GP, N(pilot_z - c; m 1, K_g + (pi^2/2) I), with m profiled at
// its GLS estimate. Same parameter layout as above; only the l_g and kappa_g
// gradient entries are non-zero.
double log_variance_evidence(const Eigen::VectorXd& log_params, const Eigen::VectorXd& pilot_z,
                             const Eigen::VectorXd& inputs, Eigen::VectorXd* grad);

// Conditions a model on `training` at fixed hyperparameters (no optimization).
HetGpModel assemble_model(const TrainingSet& training, const TemporalDesignConfig& temporal,
                          const Eigen::VectorXd& beta, double lengthscale_f, const KernelParams& theta_g,
                          double g_mean, const Eigen::VectorXd& pilot_z, Diagnostics* diag = nullptr);

// Outer loop: homoskedastic pilot, leverage-corrected log noise ratios, then
// repeatedly (a) theta_g by the evidence of the ratios with g_mean at its GLS
// value, (b) l_f by conditional_loglik, (c) damped refresh of the ratios,
// until the relative log-likelihood change drops below the tolerance.
HetGpModel fit(const TrainingSet& training, const HetGpConfig& config, Diagnostics* diag = nullptr);

PredictiveDistribution predict(const HetGpModel& model, const Eigen::VectorXd& grid,
                               const BasisVector& target_basis, PredictiveFlavor flavor,
                               Diagnostics* diag = nullptr);

// Draws from the latent (default) or noisy predictive distribution; columns
// are draws. Deterministic in `seed`.
Eigen::MatrixXd sample_latent(const HetGpModel& model, const Eigen::VectorXd& grid,
                              const BasisVector& target_basis, std::size_t count, std::uint64_t seed,
                              PredictiveFlavor flavor = PredictiveFlavor::Latent,
                              Diagnostics* diag = nullptr);

Eigen::MatrixXd sample_predictive(const PredictiveDistribution& pred, std::size_t count, std::uint64_t seed,
                                  Diagnostics* diag = nullptr);

// m equally spaced points over [lo, hi].
Eigen::VectorXd linspace(double lo, double hi, Eigen::Index m);

}  // namespace boundshift
