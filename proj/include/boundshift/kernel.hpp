#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "boundshift/diagnostics.hpp"

namespace boundshift {

enum class KernelFamily { Matern32, SquaredExponential };

struct KernelParams {
    double variance = 1.0;
    double lengthscale = 1.0;
    KernelFamily family = KernelFamily::Matern32;

    void validate() const;
};

double kernel_eval(const KernelParams& params, double distance);

// Derivative of kernel_eval with respect to log(lengthscale).
double kernel_dlog_lengthscale(const KernelParams& params, double distance);

/// Symmetric covariance matrix with the diagonal jitter already applied.
struct CovMatrix {
    Eigen::MatrixXd entries;
    double jitter = 0.0;
    // Reference variance for the jitter escalation ladder.
    double scale = 1.0;
};

/// Cross-covariance between xs and ys. When both spans alias the same data the
/// result is square and `jitter` is added on the diagonal.
Eigen::MatrixXd cross_covariance(const KernelParams& params, const Eigen::VectorXd& xs,
                                 const Eigen::VectorXd& ys);

CovMatrix cov_matrix(const KernelParams& params, const Eigen::VectorXd& xs, double jitter);
CovMatrix cov_matrix(const KernelParams& params, const Eigen::VectorXd& xs,
                     const Eigen::VectorXd& ys, double jitter);

/// Default diagonal stabilization: 1e-8 times the process variance.
double default_jitter(const KernelParams& params);

class FactorizationError : public std::runtime_error {
public:
    FactorizationError(std::size_t pivot, double value, double jitter);
    std::size_t pivot() const { return pivot_; }
    double pivot_value() const { return value_; }

private:
    std::size_t pivot_;
    double value_;
};

/// Lower Cholesky factor L with L L^T = entries + extra_jitter * I.
class CholeskyFactor {
public:
    CholeskyFactor() = default;
    explicit CholeskyFactor(Eigen::MatrixXd lower, double extra_jitter = 0.0);

    const Eigen::MatrixXd& lower() const { return lower_; }
    Eigen::Index size() const { return lower_.rows(); }
    double extra_jitter() const { return extra_jitter_; }

    double log_determinant() const;
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
    // L^{-1} b
    Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& b) const;
    Eigen::MatrixXd inverse() const;

private:
    Eigen::MatrixXd lower_;
    double extra_jitter_ = 0.0;
};

/// Cholesky with the jitter ladder: on failure extra diagonal jitter starting
/// at 1e-8*scale is added and multiplied by 10 up to 1e-4*scale, each step
/// logged to `diag`. Throws FactorizationError if every rung fails.
CholeskyFactor chol_factor(const CovMatrix& m, Diagnostics* diag = nullptr);

/// Index and value of the first non-positive pivot of an unblocked Cholesky,
/// or {size, +inf} when the matrix is positive definite.
std::pair<std::size_t, double> first_failing_pivot(const Eigen::MatrixXd& m);

}  // namespace boundshift
