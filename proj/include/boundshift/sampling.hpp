#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "boundshift/diagnostics.hpp"

namespace boundshift {

// Multivariate normal sampler x = mean + F z with F F^T ~= cov.
//
// Two factorizations are offered. The Cholesky route (with the jitter ladder
// and a fallback to eigenvalue clipping) is used for predictive distributions.
// The truncated eigen route keeps only eigenpairs above a relative tolerance;
// squared-exponential covariances on dense grids have tiny numerical rank, so
// this makes Monte Carlo studies cheap without changing the distribution
// beyond the discarded spectrum.
class GaussianSampler {
public:
    static GaussianSampler cholesky(Eigen::VectorXd mean, const Eigen::MatrixXd& cov,
                                    Diagnostics* diag = nullptr);
    static GaussianSampler truncated_eigen(Eigen::VectorXd mean, const Eigen::MatrixXd& cov,
                                           double relative_tol = 1e-12);

    Eigen::Index dimension() const { return mean_.size(); }
    Eigen::Index rank() const { return factor_.cols(); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& factor() const { return factor_; }

    // Columns are independent draws. Normals are consumed column by column.
    Eigen::MatrixXd draw(std::size_t count, std::mt19937_64& rng) const;
    Eigen::MatrixXd draw(std::size_t count, std::uint64_t seed) const;

    // Standard normal coefficient block of shape rank x count.
    Eigen::MatrixXd standard_normals(std::size_t count, std::mt19937_64& rng) const;
    // F z, without the mean.
    Eigen::MatrixXd colour(const Eigen::MatrixXd& z) const { return factor_ * z; }

private:
    GaussianSampler(Eigen::VectorXd mean, Eigen::MatrixXd factor)
        : mean_(std::move(mean)), factor_(std::move(factor)) {}

    Eigen::VectorXd mean_;
    Eigen::MatrixXd factor_;
};

// Eigenvalue clipping: V max(D, floor) V^T factor for a symmetric matrix.
Eigen::MatrixXd clipped_eigen_factor(const Eigen::MatrixXd& cov, double floor);

}  // namespace boundshift
