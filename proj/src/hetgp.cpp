#include "boundshift/hetgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/QR>

#include "boundshift/sampling.hpp"

namespace boundshift {

namespace {

constexpr double kKappaFloor = 1e-12;
constexpr double kLog2Pi = 1.8378770664093453;

KernelParams correlation(double lengthscale) { return KernelParams{1.0, lengthscale, KernelFamily::Matern32}; }

// d C / d log(lengthscale) for the unit-variance Matern 3/2 correlation.
Eigen::MatrixXd correlation_dlog_lengthscale(const KernelParams& params, const Eigen::VectorXd& x) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        d(j, j) = 0.0;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double v = kernel_dlog_lengthscale(params, std::abs(x[i] - x[j]));
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

// Marginal-likelihood pieces shared by the objective and model assembly.
struct Profile {
    CholeskyFactor factor;
    Eigen::VectorXd alpha;
    double kappa_sq = 0.0;
    double loglik = -std::numeric_limits<double>::infinity();
};

Profile profile_likelihood(const CovMatrix& sigma, const Eigen::VectorXd& residuals, Diagnostics* diag) {
    Profile p;
    p.factor = chol_factor(sigma, diag);
    p.alpha = p.factor.solve(residuals);
    const double n = static_cast<double>(residuals.size());
    p.kappa_sq = std::max(residuals.dot(p.alpha) / n, kKappaFloor);
    p.loglik = -0.5 * n * kLog2Pi - 0.5 * n * std::log(p.kappa_sq) - 0.5 * p.factor.log_determinant() - 0.5 * n;
    return p;
}

CovMatrix observation_covariance(const Eigen::VectorXd& x, double lengthscale_f, const Eigen::VectorXd& lambda) {
    const KernelParams corr = correlation(lengthscale_f);
    CovMatrix c = cov_matrix(corr, x, default_jitter(corr));
    c.entries.diagonal() += lambda;
    return c;
}

// Homoskedastic pilot objective over (log l_f, log tau) with Lambda = tau I.
double pilot_objective(const Eigen::VectorXd& p, const Eigen::VectorXd& x, const Eigen::VectorXd& r,
                       Eigen::VectorXd* grad) {
    const double lf = std::exp(p[0]);
    const double tau = std::exp(p[1]);
    const Eigen::Index n = x.size();
    Profile prof;
    try {
        prof = profile_likelihood(observation_covariance(x, lf, Eigen::VectorXd::Constant(n, tau)), r, nullptr);
    } catch (const FactorizationError&) {
        return -std::numeric_limits<double>::infinity();
    }
    if (grad) {
        const Eigen::MatrixXd w = prof.factor.inverse();
        const Eigen::MatrixXd q = prof.alpha * prof.alpha.transpose() / prof.kappa_sq - w;
        const Eigen::MatrixXd dc = correlation_dlog_lengthscale(correlation(lf), x);
        grad->resize(2);
        (*grad)[0] = 0.5 * q.cwiseProduct(dc).sum();
        (*grad)[1] = 0.5 * tau * q.trace();
    }
    return prof.loglik;
}

// Leverage-corrected log noise ratios. Under the model alpha = Sigma^{-1} r has
// covariance kappa Sigma^{-1}, so lambda_i alpha_i^2 / [Sigma^{-1}]_ii is
// distributed as kappa lambda_i chi^2_1 and the chi^2 log-mean correction is
// exact.
Eigen::VectorXd pilot_log_ratios(const CholeskyFactor& factor, const Eigen::VectorXd& alpha,
                                 const Eigen::VectorXd& lambda, double kappa_sq, double var_floor) {
    const Eigen::Index n = alpha.size();
    const Eigen::MatrixXd linv = factor.solve_lower(Eigen::MatrixXd::Identity(n, n));
    const Eigen::VectorXd w_diag = linv.colwise().squaredNorm().transpose();
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double scaled = lambda[i] * alpha[i] * alpha[i] / w_diag[i];
        z[i] = std::log(std::max(scaled, var_floor)) - std::log(kappa_sq);
    }
    return z;
}

// GLS estimate of the constant mean of the bias-corrected pilot ratios.
double log_variance_gls_mean(const Eigen::VectorXd& x, const KernelParams& theta_g, const Eigen::VectorXd& pilot_z) {
    CovMatrix a_cov = cov_matrix(theta_g, x, 0.0);
    a_cov.entries.diagonal().array() += kLogChiSquareVariance;
    a_cov.scale = theta_g.variance + kLogChiSquareVariance;
    CholeskyFactor a = chol_factor(a_cov, nullptr);
    const Eigen::VectorXd ainv_one = a.solve(Eigen::VectorXd(Eigen::VectorXd::Ones(x.size())));
    return ainv_one.dot((pilot_z.array() - kLogChiSquareMean).matrix()) / ainv_one.sum();
}

}  // namespace

// --- TrainingSet -------------------------------------------------------------

TrainingSet TrainingSet::build(std::vector<TrainingRecord> records, const TemporalDesignConfig& config) {
    config.validate();
    for (const auto& r : records)
        if (!std::isfinite(r.year) || !std::isfinite(r.longitude) || !std::isfinite(r.latitude))
            throw std::invalid_argument("training records must be finite");
    if (records.size() < 5)
        throw std::invalid_argument("training set needs at least 5 records, got " + std::to_string(records.size()));
    std::sort(records.begin(), records.end(), [](const TrainingRecord& a, const TrainingRecord& b) {
        if (a.longitude != b.longitude) return a.longitude < b.longitude;
        if (a.latitude != b.latitude) return a.latitude < b.latitude;
        return a.year < b.year;
    });
    if (records.front().longitude == records.back().longitude)
        throw std::invalid_argument("training set needs at least 2 distinct longitudes");

    TrainingSet set;
    set.records = std::move(records);
    set.design.resize(static_cast<Eigen::Index>(set.records.size()), static_cast<Eigen::Index>(config.dimension()));
    std::map<double, BasisVector> cache;
    for (std::size_t i = 0; i < set.records.size(); ++i) {
        const double year = set.records[i].year;
        auto it = cache.find(year);
        if (it == cache.end()) it = cache.emplace(year, basis_at_year(config, year)).first;
        set.design.row(static_cast<Eigen::Index>(i)) = it->second.transpose();
    }
    return set;
}

Eigen::VectorXd TrainingSet::longitudes() const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) x[static_cast<Eigen::Index>(i)] = records[i].longitude;
    return x;
}

Eigen::VectorXd TrainingSet::latitudes() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) y[static_cast<Eigen::Index>(i)] = records[i].latitude;
    return y;
}

double TrainingSet::longitude_range() const {
    if (records.empty()) return 0.0;
    return records.back().longitude - records.front().longitude;
}

double TrainingSet::mean_year() const {
    double s = 0.0;
    for (const auto& r : records) s += r.year;
    return records.empty() ? 0.0 : s / static_cast<double>(records.size());
}

// --- log-variance smoother -----------------------------------------------------

LogVarianceSmoother::LogVarianceSmoother(const Eigen::VectorXd& inputs, const KernelParams& theta_g, double g_mean,
                                         const Eigen::VectorXd& pilot_z, Diagnostics* diag)
    : theta_g_(theta_g), g_mean_(g_mean) {
    if (pilot_z.size() != inputs.size()) throw std::invalid_argument("pilot_z length does not match the inputs");
    CovMatrix a = cov_matrix(theta_g, inputs, 0.0);
    a.entries.diagonal().array() += kLogChiSquareVariance;
    a.scale = theta_g.variance + kLogChiSquareVariance;
    factor_ = chol_factor(a, diag);
    const Eigen::VectorXd centred = (pilot_z.array() - kLogChiSquareMean - g_mean).matrix();
    weights_ = factor_.solve(centred);
    // g = z' - s^2 A^{-1} (z' - m) avoids a second kernel product.
    fitted_ = (pilot_z.array() - kLogChiSquareMean).matrix() - kLogChiSquareVariance * weights_;
}

Eigen::VectorXd LogVarianceSmoother::predict(const Eigen::VectorXd& inputs, const Eigen::VectorXd& at) const {
    const Eigen::MatrixXd k = cross_covariance(theta_g_, at, inputs);
    return (k * weights_).array() + g_mean_;
}

// --- model ---------------------------------------------------------------------

void HetGpModel::refresh(Diagnostics* diag) {
    const Eigen::VectorXd x = training.longitudes();
    residuals = training.latitudes() - training.design * beta;
    smoother = LogVarianceSmoother(x, theta_g, g_mean, pilot_z, diag);
    lambda = smoother.fitted().array().exp();
    Profile prof = profile_likelihood(observation_covariance(x, theta_f.lengthscale, lambda), residuals, diag);
    factor = std::move(prof.factor);
    alpha = std::move(prof.alpha);
    kappa_f_sq = prof.kappa_sq;
    theta_f.variance = kappa_f_sq;
    log_likelihood = prof.loglik;
}

Eigen::VectorXd HetGpModel::log_variance(const Eigen::VectorXd& at) const {
    return (smoother.predict(training.longitudes(), at).array() + std::log(kappa_f_sq)).matrix();
}

Eigen::VectorXd HetGpModel::noise_variance(const Eigen::VectorXd& at) const {
    return log_variance(at).array().exp();
}

// --- estimation ------------------------------------------------------------------

Eigen::VectorXd estimate_beta(const TrainingSet& training) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(training.design);
    return cod.solve(training.latitudes());
}

double profile_kappa(const Eigen::VectorXd& residuals, const CholeskyFactor& factor, Diagnostics* diag) {
    if (residuals.size() != factor.size()) throw std::invalid_argument("residual length does not match the factor");
    const Eigen::VectorXd w = factor.solve_lower(residuals);
    const double k = w.squaredNorm() / static_cast<double>(residuals.size());
    if (!(k > 0.0)) {
        warn(diag, "zero residual vector: profiled process variance floored at 1e-12 (perfect fit)");
        return kKappaFloor;
    }
    return std::max(k, kKappaFloor);
}

double conditional_loglik_with_gradient(const Eigen::VectorXd& log_params, const Eigen::VectorXd& pilot_z,
                                        const Eigen::VectorXd& x, const Eigen::VectorXd& residuals,
                                        Eigen::VectorXd* grad) {
    const double lf = std::exp(log_params[0]);
    const KernelParams theta_g{std::exp(log_params[2]), std::exp(log_params[1]), KernelFamily::Matern32};
    const double g_mean = log_params[3];

    LogVarianceSmoother smoother;
    Profile prof;
    Eigen::VectorXd lambda;
    try {
        smoother = LogVarianceSmoother(x, theta_g, g_mean, pilot_z, nullptr);
        lambda = smoother.fitted().array().exp();
        if (!lambda.allFinite()) return -std::numeric_limits<double>::infinity();
        prof = profile_likelihood(observation_covariance(x, lf, lambda), residuals, nullptr);
    } catch (const FactorizationError&) {
        return -std::numeric_limits<double>::infinity();
    }
    if (!grad) return prof.loglik;

    const Eigen::MatrixXd w = prof.factor.inverse();
    const Eigen::MatrixXd q = prof.alpha * prof.alpha.transpose() / prof.kappa_sq - w;
    grad->resize(4);
    (*grad)[0] = 0.5 * q.cwiseProduct(correlation_dlog_lengthscale(correlation(lf), x)).sum();

    // dL/dg_i for the diagonal entries lambda_i = exp(g_i).
    const Eigen::VectorXd dl_dg = 0.5 * q.diagonal().cwiseProduct(lambda);
    // dg/dp = s^2 A^{-1} (dK_g w) for kernel parameters, s^2 A^{-1} 1 for the mean.
    const CholeskyFactor& a = smoother.factor();
    const Eigen::VectorXd u = a.solve(dl_dg) * kLogChiSquareVariance;  // s^2 A^{-1} dL/dg (A symmetric)
    const Eigen::MatrixXd dkg_dl = correlation_dlog_lengthscale(theta_g, x);
    const Eigen::MatrixXd kg = cross_covariance(theta_g, x, x);
    (*grad)[1] = u.dot(dkg_dl * smoother.weights());
    (*grad)[2] = u.dot(kg * smoother.weights());
    (*grad)[3] = u.sum();
    return prof.loglik;
}

double log_variance_evidence(const Eigen::VectorXd& log_params, const Eigen::VectorXd& pilot_z,
                             const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const KernelParams theta_g{std::exp(log_params[2]), std::exp(log_params[1]), KernelFamily::Matern32};
    const Eigen::Index n = x.size();
    CovMatrix a_cov = cov_matrix(theta_g, x, 0.0);
    a_cov.entries.diagonal().array() += kLogChiSquareVariance;
    a_cov.scale = theta_g.variance + kLogChiSquareVariance;
    CholeskyFactor a;
    try {
        a = chol_factor(a_cov, nullptr);
    } catch (const FactorizationError&) {
        return -std::numeric_limits<double>::infinity();
    }
    // Constant mean profiled at its GLS estimate, so the value does not
    // depend on the overall level of pilot_z.
    const Eigen::VectorXd zc = (pilot_z.array() - kLogChiSquareMean).matrix();
    const Eigen::VectorXd ainv_one = a.solve(Eigen::VectorXd(Eigen::VectorXd::Ones(n)));
    const double m_hat = ainv_one.dot(zc) / ainv_one.sum();
    const Eigen::VectorXd centred = (zc.array() - m_hat).matrix();
    const Eigen::VectorXd w = a.solve(centred);
    const double value = -0.5 * centred.dot(w) - 0.5 * a.log_determinant() - 0.5 * static_cast<double>(n) * kLog2Pi;
    if (grad) {
        const Eigen::MatrixXd q = w * w.transpose() - a.inverse();
        grad->resize(4);
        (*grad)[0] = 0.0;
        (*grad)[1] = 0.5 * q.cwiseProduct(correlation_dlog_lengthscale(theta_g, x)).sum();
        (*grad)[2] = 0.5 * q.cwiseProduct(cross_covariance(theta_g, x, x)).sum();
        (*grad)[3] = 0.0;
    }
    return value;
}

double conditional_loglik(double lengthscale_f, const KernelParams& theta_g, double g_mean,
                          const Eigen::VectorXd& pilot_z, const TrainingSet& training,
                          const Eigen::VectorXd& residuals) {
    Eigen::VectorXd p(4);
    p << std::log(lengthscale_f), std::log(theta_g.lengthscale), std::log(theta_g.variance), g_mean;
    return conditional_loglik_with_gradient(p, pilot_z, training.longitudes(), residuals, nullptr);
}

double conditional_loglik(double lengthscale_f, const KernelParams& theta_g, double g_mean,
                          const Eigen::VectorXd& pilot_z, const TrainingSet& training) {
    const Eigen::VectorXd r = training.latitudes() - training.design * estimate_beta(training);
    return conditional_loglik(lengthscale_f, theta_g, g_mean, pilot_z, training, r);
}

HetGpModel assemble_model(const TrainingSet& training, const TemporalDesignConfig& temporal,
                          const Eigen::VectorXd& beta, double lengthscale_f, const KernelParams& theta_g,
                          double g_mean, const Eigen::VectorXd& pilot_z, Diagnostics* diag) {
    HetGpModel m;
    m.temporal = temporal;
    m.training = training;
    m.beta = beta;
    m.theta_f = KernelParams{1.0, lengthscale_f, KernelFamily::Matern32};
    m.theta_g = theta_g;
    m.theta_g.family = KernelFamily::Matern32;
    m.g_mean = g_mean;
    m.pilot_z = pilot_z;
    m.refresh(diag);
    return m;
}

HetGpModel fit(const TrainingSet& training, const HetGpConfig& config, Diagnostics* diag) {
    Diagnostics local;
    const Eigen::VectorXd x = training.longitudes();
    const Eigen::VectorXd y = training.latitudes();
    const Eigen::Index n = x.size();
    const double range = training.longitude_range();
    if (config.fixed_beta && config.fixed_beta->size() != training.design.cols())
        throw std::invalid_argument("fixed_beta has " + std::to_string(config.fixed_beta->size()) +
                                    " entries but the temporal design has " + std::to_string(training.design.cols()));
    const Eigen::VectorXd beta = config.fixed_beta ? *config.fixed_beta : estimate_beta(training);
    const Eigen::VectorXd r = y - training.design * beta;

    auto finish = [&](HetGpModel m) {
        for (auto& w : local.warnings()) {
            m.warnings.push_back(w);
            warn(diag, w);
        }
        return m;
    };

    const double y_scale = std::max(1.0, y.cwiseAbs().maxCoeff());
    if (r.cwiseAbs().maxCoeff() <= 1e-12 * y_scale) {
        local.warn("degenerate training set: latitudes fully explained by the temporal mean; returning a flat model");
        const double g0 = std::log(config.var_floor / kKappaFloor);
        HetGpModel m = assemble_model(training, config.temporal, beta, 0.3 * range,
                                      KernelParams{config.kappa_g_lower, 0.3 * range, KernelFamily::Matern32}, g0,
                                      Eigen::VectorXd::Constant(n, g0 + kLogChiSquareMean), &local);
        m.converged = true;
        return finish(std::move(m));
    }

    const double log_l_lo = std::log(config.lengthscale_lower_fraction * range);
    const double log_l_hi = std::log(config.lengthscale_upper_fraction * range);
    bool optimizer_converged = true;

    // (i) homoskedastic pilot
    BoxBounds pilot_bounds{Eigen::Vector2d(log_l_lo, std::log(config.nugget_ratio_lower)),
                           Eigen::Vector2d(log_l_hi, std::log(config.nugget_ratio_upper))};
    Objective pilot_obj = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        const double v = pilot_objective(p, x, r, &g);
        g = -g;
        return -v;
    };
    QuasiNewtonResult pilot_best;
    pilot_best.value = std::numeric_limits<double>::infinity();
    for (double frac : config.start_fractions) {
        QuasiNewtonResult res =
            minimize_bounded(pilot_obj, Eigen::Vector2d(std::log(frac * range), std::log(0.1)), pilot_bounds,
                             config.optimizer);
        if (res.value < pilot_best.value) pilot_best = res;
    }
    if (!std::isfinite(pilot_best.value)) throw std::runtime_error("homoskedastic pilot fit failed at every start");

    const double pilot_lf = std::exp(pilot_best.x[0]);
    const double pilot_tau = std::exp(pilot_best.x[1]);
    Profile pilot = profile_likelihood(observation_covariance(x, pilot_lf, Eigen::VectorXd::Constant(n, pilot_tau)),
                                       r, &local);
    // (ii) pilot log noise ratios
    Eigen::VectorXd pilot_z = pilot_log_ratios(pilot.factor, pilot.alpha, Eigen::VectorXd::Constant(n, pilot_tau),
                                               pilot.kappa_sq, config.var_floor);

    Eigen::VectorXd lower(4), upper(4);
    lower << log_l_lo, log_l_lo, std::log(config.kappa_g_lower), config.g_mean_lower;
    upper << log_l_hi, log_l_hi, std::log(config.kappa_g_upper), config.g_mean_upper;
    const BoxBounds bounds{lower, upper};

    // Stage objectives over (log l_f, log l_g, log kappa_g^2, g_mean); stages
    // fix the coordinates they do not own through degenerate bounds.
    Objective evidence_obj = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        const double v = log_variance_evidence(p, pilot_z, x, &g);
        g = -g;
        return -v;
    };
    Objective conditional_obj = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        const double v = conditional_loglik_with_gradient(p, pilot_z, x, r, &g);
        g = -g;
        return -v;
    };
    auto fix = [&](const Eigen::VectorXd& at, std::initializer_list<int> fixed) {
        BoxBounds b = bounds;
        for (int k : fixed) b.lower[k] = b.upper[k] = at[k];
        return b;
    };

    Eigen::VectorXd params;
    double previous = std::numeric_limits<double>::quiet_NaN();
    HetGpModel model;
    bool outer_converged = false;
    int outer = 0;
    for (outer = 1; outer <= config.max_outer_iterations; ++outer) {
        std::vector<Eigen::VectorXd> starts;
        if (params.size() == 0) {
            for (double frac : config.start_fractions) {
                Eigen::VectorXd s(4);
                s << std::log(frac * range), std::log(frac * range), 0.0, 0.0;
                starts.push_back(s.cwiseMax(lower).cwiseMin(upper));
            }
        } else {
            starts.push_back(params);
        }

        // (iii) log-variance hyperparameters from the evidence of pilot_z, then
        // the mean-process lengthscale from the conditional likelihood.
        double best_score = std::numeric_limits<double>::infinity();
        bool stage_converged = true;
        for (const auto& start : starts) {
            const QuasiNewtonResult noise = minimize_bounded(evidence_obj, start, fix(start, {0, 3}), config.optimizer);
            if (!std::isfinite(noise.value)) continue;
            Eigen::VectorXd p = noise.x;
            const KernelParams theta_g{std::exp(p[2]), std::exp(p[1]), KernelFamily::Matern32};
            p[3] = std::clamp(log_variance_gls_mean(x, theta_g, pilot_z), config.g_mean_lower, config.g_mean_upper);
            const QuasiNewtonResult mean = minimize_bounded(conditional_obj, p, fix(p, {1, 2, 3}), config.optimizer);
            if (!std::isfinite(mean.value)) continue;
            const double score = noise.value + mean.value;
            if (score < best_score) {
                best_score = score;
                params = mean.x;
                stage_converged = noise.converged && mean.converged;
            }
        }
        if (!std::isfinite(best_score))
            throw std::runtime_error("heteroskedastic likelihood could not be evaluated at any start");
        optimizer_converged = stage_converged;

        model = assemble_model(training, config.temporal, beta, std::exp(params[0]),
                               KernelParams{std::exp(params[2]), std::exp(params[1]), KernelFamily::Matern32}, params[3],
                               pilot_z, &local);
        const double current = model.log_likelihood;
        if (outer > 1 && std::abs(current - previous) < config.relative_loglik_tol * std::max(1.0, std::abs(previous))) {
            outer_converged = true;
            break;
        }
        previous = current;
        if (outer == config.max_outer_iterations) break;

        // (iv) refresh the pilot ratios from the current fit, damped
        const Eigen::VectorXd fresh =
            pilot_log_ratios(model.factor, model.alpha, model.lambda, model.kappa_f_sq, config.var_floor);
        pilot_z = config.refresh_damping * pilot_z + (1.0 - config.refresh_damping) * fresh;
    }

    // The heteroskedastic model nests the homoskedastic pilot (constant log
    // ratio, minimal kappa_g). If refinement ends below that nested optimum
    // the pilot is returned in heteroskedastic form.
    const double log_tau = std::log(pilot_tau);
    HetGpModel nested = assemble_model(
        training, config.temporal, beta, pilot_lf,
        KernelParams{config.kappa_g_lower, std::exp(params[1]), KernelFamily::Matern32}, log_tau,
        Eigen::VectorXd::Constant(n, log_tau + kLogChiSquareMean), &local);
    if (std::isfinite(nested.log_likelihood) && nested.log_likelihood > model.log_likelihood) {
        local.warn("heteroskedastic refinement did not improve on the homoskedastic pilot; returning the pilot");
        model = std::move(nested);
    }

    model.outer_iterations = std::min(outer, config.max_outer_iterations);
    model.converged = outer_converged && optimizer_converged;
    if (!optimizer_converged) local.warn("quasi-Newton optimizer hit its iteration limit; returning the best iterate");
    if (!outer_converged) {
        std::ostringstream os;
        os << "noise refinement did not reach relative log-likelihood change " << config.relative_loglik_tol
           << " within " << config.max_outer_iterations << " outer iterations";
        local.warn(os.str());
    }
    return finish(std::move(model));
}

// --- prediction ------------------------------------------------------------------

Eigen::VectorXd linspace(double lo, double hi, Eigen::Index m) {
    if (m <= 0) throw std::invalid_argument("linspace needs a positive size");
    if (m == 1) return Eigen::VectorXd::Constant(1, lo);
    Eigen::VectorXd v(m);
    for (Eigen::Index i = 0; i < m; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
    return v;
}

PredictiveDistribution predict(const HetGpModel& model, const Eigen::VectorXd& grid, const BasisVector& target_basis,
                               PredictiveFlavor flavor, Diagnostics* diag) {
    if (grid.size() == 0) throw std::invalid_argument("prediction grid is empty");
    if (target_basis.size() != model.beta.size())
        throw std::invalid_argument("target basis length does not match the regression coefficients");

    PredictiveDistribution pred;
    pred.grid = grid;
    pred.flavor = flavor;

    const Eigen::VectorXd x = model.training.longitudes();
    const double lo = x.minCoeff(), hi = x.maxCoeff();
    const double slack = 0.1 * (hi - lo);
    if (grid.minCoeff() < lo - slack || grid.maxCoeff() > hi + slack) {
        pred.extrapolated = true;
        std::ostringstream os;
        os << "prediction grid [" << grid.minCoeff() << ", " << grid.maxCoeff()
           << "] extends more than 10% beyond the training range [" << lo << ", " << hi << "]";
        warn(diag, os.str());
    }

    const KernelParams corr = correlation(model.theta_f.lengthscale);
    const Eigen::MatrixXd c_star = cross_covariance(corr, x, grid);
    pred.mean = c_star.transpose() * model.alpha;
    const Eigen::MatrixXd v = model.factor.solve_lower(c_star);
    Eigen::MatrixXd cov = cross_covariance(corr, grid, grid);
    cov.noalias() -= v.transpose() * v;
    cov *= model.kappa_f_sq;
    pred.cov = 0.5 * (cov + cov.transpose());

    if (flavor == PredictiveFlavor::Noisy) {
        pred.mean.array() += target_basis.dot(model.beta);
        const Eigen::VectorXd lambda_star = model.smoother.predict(x, grid).array().exp();
        pred.cov.diagonal() += model.kappa_f_sq * lambda_star;
    }
    return pred;
}

Eigen::MatrixXd sample_predictive(const PredictiveDistribution& pred, std::size_t count, std::uint64_t seed,
                                  Diagnostics* diag) {
    if (count < 1) throw std::invalid_argument("sample count must be at least 1");
    return GaussianSampler::cholesky(pred.mean, pred.cov, diag).draw(count, seed);
}

Eigen::MatrixXd sample_latent(const HetGpModel& model, const Eigen::VectorXd& grid, const BasisVector& target_basis,
                              std::size_t count, std::uint64_t seed, PredictiveFlavor flavor, Diagnostics* diag) {
    if (count < 1) throw std::invalid_argument("sample count must be at least 1");
    return sample_predictive(predict(model, grid, target_basis, flavor, diag), count, seed, diag);
}

}  // namespace boundshift
