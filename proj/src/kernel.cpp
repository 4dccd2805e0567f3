#include "boundshift/kernel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>

namespace boundshift {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

std::string pivot_message(std::size_t pivot, double value, double jitter) {
    std::ostringstream os;
    os << "Cholesky factorization failed at pivot " << pivot << " (value " << value
       << ") after jitter escalation to " << jitter;
    return os.str();
}

}  // namespace

void KernelParams::validate() const {
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw std::invalid_argument("kernel variance must be positive");
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
        throw std::invalid_argument("kernel lengthscale must be positive");
}

double kernel_eval(const KernelParams& params, double distance) {
    if (distance < 0.0) throw std::invalid_argument("kernel distance must be nonnegative");
    switch (params.family) {
    case KernelFamily::Matern32: {
        const double a = kSqrt3 * distance / params.lengthscale;
        return params.variance * (1.0 + a) * std::exp(-a);
    }
    case KernelFamily::SquaredExponential: {
        const double u = distance / params.lengthscale;
        return params.variance * std::exp(-0.5 * u * u);
    }
    }
    return 0.0;
}

double kernel_dlog_lengthscale(const KernelParams& params, double distance) {
    switch (params.family) {
    case KernelFamily::Matern32: {
        const double a = kSqrt3 * distance / params.lengthscale;
        return params.variance * a * a * std::exp(-a);
    }
    case KernelFamily::SquaredExponential: {
        const double u2 = (distance / params.lengthscale) * (distance / params.lengthscale);
        return params.variance * u2 * std::exp(-0.5 * u2);
    }
    }
    return 0.0;
}

Eigen::MatrixXd cross_covariance(const KernelParams& params, const Eigen::VectorXd& xs,
                                 const Eigen::VectorXd& ys) {
    if (xs.size() == 0 || ys.size() == 0) throw std::invalid_argument("covariance inputs must be non-empty");
    params.validate();
    Eigen::MatrixXd k(xs.size(), ys.size());
    for (Eigen::Index j = 0; j < ys.size(); ++j)
        for (Eigen::Index i = 0; i < xs.size(); ++i) k(i, j) = kernel_eval(params, std::abs(xs[i] - ys[j]));
    return k;
}

CovMatrix cov_matrix(const KernelParams& params, const Eigen::VectorXd& xs, double jitter) {
    if (jitter < 0.0) throw std::invalid_argument("jitter must be nonnegative");
    if (xs.size() == 0) throw std::invalid_argument("covariance inputs must be non-empty");
    params.validate();
    const Eigen::Index n = xs.size();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        k(j, j) = params.variance + jitter;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double v = kernel_eval(params, std::abs(xs[i] - xs[j]));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return CovMatrix{std::move(k), jitter, params.variance};
}

CovMatrix cov_matrix(const KernelParams& params, const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                     double jitter) {
    if (xs.size() == ys.size() && xs == ys) return cov_matrix(params, xs, jitter);
    return CovMatrix{cross_covariance(params, xs, ys), 0.0, params.variance};
}

double default_jitter(const KernelParams& params) { return 1e-8 * params.variance; }

FactorizationError::FactorizationError(std::size_t pivot, double value, double jitter)
    : std::runtime_error(pivot_message(pivot, value, jitter)), pivot_(pivot), value_(value) {}

CholeskyFactor::CholeskyFactor(Eigen::MatrixXd lower, double extra_jitter)
    : lower_(std::move(lower)), extra_jitter_(extra_jitter) {}

double CholeskyFactor::log_determinant() const {
    return 2.0 * lower_.diagonal().array().log().sum();
}

Eigen::VectorXd CholeskyFactor::solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd y = lower_.triangularView<Eigen::Lower>().solve(b);
    return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd CholeskyFactor::solve(const Eigen::MatrixXd& b) const {
    Eigen::MatrixXd y = lower_.triangularView<Eigen::Lower>().solve(b);
    return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd CholeskyFactor::solve_lower(const Eigen::MatrixXd& b) const {
    return lower_.triangularView<Eigen::Lower>().solve(b);
}

Eigen::MatrixXd CholeskyFactor::inverse() const {
    const Eigen::Index n = size();
    Eigen::MatrixXd linv = solve_lower(Eigen::MatrixXd::Identity(n, n));
    return linv.transpose() * linv;
}

std::pair<std::size_t, double> first_failing_pivot(const Eigen::MatrixXd& m) {
    const Eigen::Index n = m.rows();
    Eigen::MatrixXd a = m;
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) return {static_cast<std::size_t>(j), d};
        const double ljj = std::sqrt(d);
        a(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / ljj;
        }
    }
    return {static_cast<std::size_t>(n), std::numeric_limits<double>::infinity()};
}

CholeskyFactor chol_factor(const CovMatrix& m, Diagnostics* diag) {
    if (m.entries.rows() != m.entries.cols()) throw std::invalid_argument("chol_factor needs a square matrix");
    if (m.entries.rows() == 0) throw std::invalid_argument("chol_factor of an empty matrix");

    Eigen::LLT<Eigen::MatrixXd> llt(m.entries);
    if (llt.info() == Eigen::Success) return CholeskyFactor(llt.matrixL());

    const double scale = m.scale > 0.0 ? m.scale : 1.0;
    const double ceiling = 1e-4 * scale * (1.0 + 1e-12);
    double level = m.jitter > 0.0 ? 10.0 * m.jitter : 1e-8 * scale;
    double last_extra = 0.0;
    const Eigen::Index n = m.entries.rows();
    while (level <= ceiling) {
        last_extra = level - m.jitter;
        Eigen::MatrixXd trial = m.entries;
        trial.diagonal().array() += last_extra;
        llt.compute(trial);
        std::ostringstream os;
        os << "jitter escalated to " << level << " (scale " << scale << ") for " << n << "x" << n
           << " covariance";
        warn(diag, os.str());
        if (llt.info() == Eigen::Success) return CholeskyFactor(llt.matrixL(), last_extra);
        level *= 10.0;
    }

    Eigen::MatrixXd trial = m.entries;
    trial.diagonal().array() += last_extra;
    const auto [pivot, value] = first_failing_pivot(trial);
    throw FactorizationError(pivot, value, m.jitter + last_extra);
}

}  // namespace boundshift
