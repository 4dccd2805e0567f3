#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "boundshift/envelope.hpp"
#include "boundshift/kernel.hpp"
#include "boundshift/sampling.hpp"

namespace boundshift {

/// Cubic B-spline ground-truth boundary f0(x) = sum_j beta_j B_{j,3}(x) + C0 on
/// a clamped knot vector: each domain end repeated degree + 1 times around
/// equally spaced interior breakpoints.
struct SplineBoundary {
    int degree = 3;
    Eigen::VectorXd knots;         // full clamped knot vector
    Eigen::VectorXd coefficients;
    double offset = 0.0;
    double x_min = 0.0;
    double x_max = 1.0;

    static SplineBoundary clamped_uniform(double x_min, double x_max, int interior_breakpoints,
                                          Eigen::VectorXd coefficients, double offset, int degree = 3);
    // 12 interior breakpoints over [-20, 60], the 16 reference coefficients
    // and C0 = 15.
    static SplineBoundary reference(double x_min = -20.0, double x_max = 60.0);

    Eigen::Index basis_count() const { return knots.size() - degree - 1; }
    // Closed support [t_j, t_{j+degree+1}] of basis j.
    std::pair<double, double> support(Eigen::Index j) const;
};

// All basis values at x via the Cox-de Boor recursion. The right end of the
// domain is assigned to the last non-empty knot span.
Eigen::VectorXd bspline_basis(const SplineBoundary& boundary, double x);
double bspline_eval(const SplineBoundary& boundary, double x);
Eigen::VectorXd bspline_eval(const SplineBoundary& boundary, const Eigen::VectorXd& xs);

SplineBoundary perturbed_boundary(const SplineBoundary& boundary, Eigen::Index index, double value);

struct SimErrorConfig {
    KernelParams kernel{0.01, 5.0, KernelFamily::SquaredExponential};
    Eigen::VectorXd grid;
};

Eigen::VectorXd draw_realization(const SplineBoundary& boundary, const SimErrorConfig& err, std::uint64_t seed);

/// Shared machinery for the size and power studies: one factorization of the
/// error covariance on the grid, reused by every iteration.
class SimulationHarness {
public:
    SimulationHarness(SplineBoundary boundary, SimErrorConfig err);

    const Eigen::VectorXd& grid() const { return err_.grid; }
    const SplineBoundary& boundary() const { return boundary_; }
    const GaussianSampler& error_sampler() const { return sampler_; }

    // f0 + eps on the grid; columns are realizations.
    Eigen::MatrixXd realizations(const SplineBoundary& mean_boundary, std::size_t count,
                                 std::mt19937_64& rng) const;

    // M null difference curves f_{r_k} - f_{s_k} from 2M independent
    // realizations of the reference boundary.
    NullEnsemble null_ensemble(std::size_t M, std::mt19937_64& rng) const;

    // One size-study iteration: null ensemble plus one observed null difference.
    EnvelopeTestResult null_iteration(std::size_t M, double alpha, std::uint64_t seed) const;

    // One power-study iteration. A single null ensemble and a single null
    // realization f_r are shared by every alternative; alternative k pairs
    // f_{a_k} + eps_a with f_r (common random numbers across the sweep).
    std::vector<EnvelopeTestResult> alternative_iteration(std::size_t M, double alpha,
                                                          const std::vector<SplineBoundary>& alternatives,
                                                          std::uint64_t seed) const;

private:
    SplineBoundary boundary_;
    SimErrorConfig err_;
    Eigen::VectorXd f0_;
    GaussianSampler sampler_;
};

struct StudySettings {
    std::size_t n_locations = 200;
    std::size_t n_sim = 200;
    std::size_t ensemble_size = 2500;
    double alpha = 0.05;
};

struct StudyReport {
    StudySettings settings;
    // NaN for size studies; the perturbed coefficient value for power studies.
    double perturbation = std::numeric_limits<double>::quiet_NaN();
    double rejection_rate = 0.0;
    std::vector<double> p_values;
};

struct StudyOptions {
    double x_min = -20.0;
    double x_max = 60.0;
    Eigen::Index perturbed_index = 13;
    unsigned threads = 1;
};

// Evenly spaced simulation grid over the domain.
SimErrorConfig default_error_config(std::size_t n_locations, double x_min = -20.0, double x_max = 60.0);

StudyReport run_size_study(const StudySettings& settings, std::uint64_t seed, const StudyOptions& options = {});

std::vector<StudyReport> run_power_study(const StudySettings& settings, const std::vector<double>& perturbation_values,
                                         std::uint64_t seed, const StudyOptions& options = {});

// 1.0, 1.5, ..., 5.0
std::vector<double> default_perturbation_values();

}  // namespace boundshift
