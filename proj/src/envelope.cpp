#include "boundshift/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "boundshift/parallel.hpp"
#include "boundshift/sampling.hpp"

namespace boundshift {

namespace {

constexpr std::uint64_t kPairStream = 0x7061697273ULL;

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

void check_same_grid(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw std::invalid_argument("predictive grids differ in length");
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > 1e-9 * std::max(1.0, std::abs(a[i])))
            throw std::invalid_argument("predictive grids differ at index " + std::to_string(i));
}

// Predictive distribution used for the ensemble draws. Only the covariance
// matters because pair differences cancel the mean.
PredictiveDistribution ensemble_source(const HetGpModel& model, const PredictiveDistribution& pred,
                                       PredictiveFlavor flavor, Diagnostics* diag) {
    if (pred.flavor == flavor) return pred;
    return predict(model, pred.grid, Eigen::VectorXd::Zero(model.beta.size()), flavor, diag);
}

}  // namespace

NullEnsemble make_null_ensemble(Eigen::VectorXd grid, Eigen::MatrixXd curves) {
    if (curves.cols() < 2) throw std::invalid_argument("a null ensemble needs at least 2 curves");
    if (curves.rows() != grid.size()) throw std::invalid_argument("ensemble curves do not match the grid");
    NullEnsemble e;
    e.grid = std::move(grid);
    e.curves = std::move(curves);
    const double M = static_cast<double>(e.curves.cols());
    e.mu_en = e.curves.rowwise().mean();
    const Eigen::MatrixXd centred = e.curves.colwise() - e.mu_en;
    e.sigma_en = (centred.rowwise().squaredNorm() / (M - 1.0)).cwiseSqrt();
    e.degenerate.assign(static_cast<std::size_t>(e.grid.size()), false);
    for (Eigen::Index i = 0; i < e.sigma_en.size(); ++i) {
        if (!(e.sigma_en[i] >= kSigmaFloor)) {
            e.degenerate[static_cast<std::size_t>(i)] = true;
            e.sigma_en[i] = kSigmaFloor;
        }
    }
    e.simulated_mad.resize(static_cast<std::size_t>(e.curves.cols()));
    for (Eigen::Index c = 0; c < e.curves.cols(); ++c)
        e.simulated_mad[static_cast<std::size_t>(c)] = mad_statistic(e.curves.col(c), e);
    return e;
}

NullEnsemble build_null_ensemble(const PredictiveDistribution& pred, std::size_t M, std::uint64_t seed,
                                 Diagnostics* diag) {
    if (M < 2) throw std::invalid_argument("ensemble size M must be at least 2");
    const GaussianSampler sampler = GaussianSampler::cholesky(pred.mean, pred.cov, diag);
    // Pair i uses draws 2i and 2i+1 from its own stream; F z_a - F z_b = F (z_a - z_b).
    Eigen::MatrixXd zdiff(sampler.rank(), static_cast<Eigen::Index>(M));
    for (std::size_t i = 0; i < M; ++i) {
        std::mt19937_64 rng(derive_seed(seed, kPairStream, i));
        const Eigen::MatrixXd z = sampler.standard_normals(2, rng);
        zdiff.col(static_cast<Eigen::Index>(i)) = z.col(0) - z.col(1);
    }
    return make_null_ensemble(pred.grid, sampler.colour(zdiff));
}

NullEnsemble build_null_ensemble(const HetGpModel& model, const Eigen::VectorXd& grid,
                                 const BasisVector& target_basis, std::size_t M, std::uint64_t seed,
                                 PredictiveFlavor flavor, Diagnostics* diag) {
    return build_null_ensemble(predict(model, grid, target_basis, flavor, diag), M, seed, diag);
}

double mad_statistic(const Eigen::VectorXd& curve, const NullEnsemble& ensemble) {
    if (curve.size() != ensemble.mu_en.size()) throw std::invalid_argument("curve length does not match the ensemble grid");
    double r = 0.0;
    for (Eigen::Index i = 0; i < curve.size(); ++i) {
        if (ensemble.degenerate[static_cast<std::size_t>(i)]) continue;
        r = std::max(r, std::abs(curve[i] - ensemble.mu_en[i]) / ensemble.sigma_en[i]);
    }
    return r;
}

double p_value(double r_obs, const std::vector<double>& r_sim) {
    if (r_sim.empty()) throw std::invalid_argument("p_value needs at least one simulated statistic");
    const auto count = std::count_if(r_sim.begin(), r_sim.end(), [&](double r) { return r >= r_obs; });
    return static_cast<double>(count) / static_cast<double>(r_sim.size());
}

std::size_t critical_order_index(std::size_t M, double alpha) {
    check_alpha(alpha);
    // The relative nudge keeps products such as 0.29 * 100 from rounding below an integer.
    const double am = alpha * static_cast<double>(M) * (1.0 + 1e-12);
    const auto k = static_cast<std::size_t>(std::floor(am));
    if (k < 1) throw std::invalid_argument("alpha * M must be at least 1");
    return M - k;
}

double critical_value(const std::vector<double>& r_sim, double alpha) {
    const std::size_t idx = critical_order_index(r_sim.size(), alpha);
    std::vector<double> sorted = r_sim;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx - 1), sorted.end());
    return sorted[idx - 1];
}

EnvelopeBounds envelope_bounds(const NullEnsemble& ensemble, double alpha) {
    EnvelopeBounds b;
    b.r_alpha = critical_value(ensemble.simulated_mad, alpha);
    const Eigen::Index m = ensemble.mu_en.size();
    b.lower.resize(m);
    b.upper.resize(m);
    // Scalar loop: vectorized fused multiply-adds would round differently from
    // mu +- r * sigma evaluated in plain double arithmetic.
    for (Eigen::Index i = 0; i < m; ++i) {
        const double half_width = b.r_alpha * ensemble.sigma_en[i];
        b.lower[i] = ensemble.mu_en[i] - half_width;
        b.upper[i] = ensemble.mu_en[i] + half_width;
    }
    return b;
}

std::size_t EnvelopeTestResult::exceed_count() const {
    return static_cast<std::size_t>(std::count(exceed_mask.begin(), exceed_mask.end(), true));
}

EnvelopeTestResult run_envelope_test(const Eigen::VectorXd& t_obs, const NullEnsemble& ensemble, double alpha) {
    EnvelopeBounds bounds = envelope_bounds(ensemble, alpha);
    EnvelopeTestResult res;
    res.grid = ensemble.grid;
    res.t_obs = t_obs;
    res.mu_en = ensemble.mu_en;
    res.sigma_en = ensemble.sigma_en;
    res.r_obs = mad_statistic(t_obs, ensemble);
    res.r_sim = ensemble.simulated_mad;
    res.p_value = p_value(res.r_obs, res.r_sim);
    res.alpha = alpha;
    res.r_alpha = bounds.r_alpha;
    res.lower = std::move(bounds.lower);
    res.upper = std::move(bounds.upper);
    res.degenerate = ensemble.degenerate;
    res.exceed_mask.assign(static_cast<std::size_t>(t_obs.size()), false);
    for (Eigen::Index i = 0; i < t_obs.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (res.degenerate[k]) continue;
        res.exceed_mask[k] = std::abs(t_obs[i] - res.mu_en[i]) > res.r_alpha * res.sigma_en[i];
    }
    return res;
}

EnvelopeTestResult test_case1(const HetGpModel& model_a, const PredictiveDistribution& pred_a,
                              const PredictiveDistribution& pred_b, std::size_t M, double alpha, std::uint64_t seed,
                              PredictiveFlavor ensemble_flavor, Diagnostics* diag) {
    check_alpha(alpha);
    check_same_grid(pred_a.grid, pred_b.grid);
    const Eigen::VectorXd t_obs = pred_a.mean - pred_b.mean;
    const NullEnsemble ensemble =
        build_null_ensemble(ensemble_source(model_a, pred_a, ensemble_flavor, diag), M, seed, diag);
    return run_envelope_test(t_obs, ensemble, alpha);
}

BoundaryPointSet sorted_observations(const BoundaryPointSet& observed) {
    BoundaryPointSet s = observed;
    std::sort(s.points.begin(), s.points.end());
    return s;
}

Eigen::VectorXd observation_grid(const BoundaryPointSet& sorted) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(sorted.points.size()));
    for (std::size_t i = 0; i < sorted.points.size(); ++i) g[static_cast<Eigen::Index>(i)] = sorted.points[i].longitude;
    return g;
}

EnvelopeTestResult test_case2(const HetGpModel& model_a, const PredictiveDistribution& pred_a_at_obs,
                              const BoundaryPointSet& observed, std::size_t M, double alpha, std::uint64_t seed,
                              PredictiveFlavor ensemble_flavor, Diagnostics* diag) {
    check_alpha(alpha);
    if (observed.points.empty()) throw std::invalid_argument("case 2 needs at least one observed boundary point");
    const BoundaryPointSet sorted = sorted_observations(observed);
    check_same_grid(pred_a_at_obs.grid, observation_grid(sorted));
    Eigen::VectorXd t_obs = pred_a_at_obs.mean;
    for (std::size_t i = 0; i < sorted.points.size(); ++i) t_obs[static_cast<Eigen::Index>(i)] -= sorted.points[i].latitude;
    const NullEnsemble ensemble =
        build_null_ensemble(ensemble_source(model_a, pred_a_at_obs, ensemble_flavor, diag), M, seed, diag);
    return run_envelope_test(t_obs, ensemble, alpha);
}

double coverage_proportion(const EnvelopeTestResult& result, const BoundaryPointSet& points,
                           const PredictiveDistribution& pred) {
    if (points.points.empty()) return 0.0;
    check_same_grid(result.grid, pred.grid);
    const Eigen::VectorXd& g = result.grid;
    std::size_t covered = 0;
    for (const auto& p : points.points) {
        Eigen::Index j = 0;
        (g.array() - p.longitude).abs().minCoeff(&j);
        const double dev = pred.mean[j] - p.latitude;
        if (dev >= result.lower[j] && dev <= result.upper[j]) ++covered;
    }
    return static_cast<double>(covered) / static_cast<double>(points.points.size());
}

}  // namespace boundshift
