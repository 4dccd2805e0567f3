#include "boundshift/sampling.hpp"

#include <sstream>

#include <Eigen/Eigenvalues>

#include "boundshift/kernel.hpp"

namespace boundshift {

Eigen::MatrixXd clipped_eigen_factor(const Eigen::MatrixXd& cov, double floor) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cov + cov.transpose()));
    Eigen::VectorXd vals = es.eigenvalues().cwiseMax(floor);
    return es.eigenvectors() * vals.cwiseSqrt().asDiagonal();
}

GaussianSampler GaussianSampler::cholesky(Eigen::VectorXd mean, const Eigen::MatrixXd& cov, Diagnostics* diag) {
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
        throw std::invalid_argument("sampler covariance does not match the mean");
    const double scale = std::max(cov.diagonal().maxCoeff(), 1e-300);
    try {
        CholeskyFactor f = chol_factor(CovMatrix{cov, 0.0, scale}, diag);
        return GaussianSampler(std::move(mean), f.lower());
    } catch (const FactorizationError& e) {
        std::ostringstream os;
        os << "predictive covariance not positive definite (" << e.what() << "); clipping eigenvalues at 1e-10";
        warn(diag, os.str());
        return GaussianSampler(std::move(mean), clipped_eigen_factor(cov, 1e-10));
    }
}

GaussianSampler GaussianSampler::truncated_eigen(Eigen::VectorXd mean, const Eigen::MatrixXd& cov,
                                                 double relative_tol) {
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
        throw std::invalid_argument("sampler covariance does not match the mean");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cov + cov.transpose()));
    const Eigen::VectorXd& vals = es.eigenvalues();  // ascending
    const double cutoff = relative_tol * vals.maxCoeff();
    Eigen::Index first = 0;
    while (first < vals.size() && vals[first] <= cutoff) ++first;
    const Eigen::Index rank = vals.size() - first;
    Eigen::MatrixXd factor = es.eigenvectors().rightCols(rank) * vals.tail(rank).cwiseSqrt().asDiagonal();
    return GaussianSampler(std::move(mean), std::move(factor));
}

Eigen::MatrixXd GaussianSampler::standard_normals(std::size_t count, std::mt19937_64& rng) const {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd z(rank(), static_cast<Eigen::Index>(count));
    for (Eigen::Index c = 0; c < z.cols(); ++c)
        for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, c) = normal(rng);
    return z;
}

Eigen::MatrixXd GaussianSampler::draw(std::size_t count, std::mt19937_64& rng) const {
    Eigen::MatrixXd x = colour(standard_normals(count, rng));
    x.colwise() += mean_;
    return x;
}

Eigen::MatrixXd GaussianSampler::draw(std::size_t count, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    return draw(count, rng);
}

}  // namespace boundshift
