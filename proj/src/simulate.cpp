#include "boundshift/simulate.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "boundshift/hetgp.hpp"
#include "boundshift/parallel.hpp"

namespace boundshift {

namespace {

constexpr std::uint64_t kSizeStream = 0x73697a65ULL;
constexpr std::uint64_t kPowerStream = 0x706f776572ULL;

// The 16-vector of reference coefficients and the boundary offset.
const double kReferenceCoefficients[16] = {0, -1, -1, -1, -2, -2, -2, -2.5, -1, -2, -2, -3, -3, 1, -1, -3};
constexpr double kReferenceOffset = 15.0;

}  // namespace

SplineBoundary SplineBoundary::clamped_uniform(double x_min, double x_max, int interior_breakpoints,
                                               Eigen::VectorXd coefficients, double offset, int degree) {
    if (!(x_max > x_min)) throw std::invalid_argument("spline domain must have x_max > x_min");
    if (degree < 0 || interior_breakpoints < 0) throw std::invalid_argument("invalid spline degree or breakpoints");
    SplineBoundary b;
    b.degree = degree;
    b.x_min = x_min;
    b.x_max = x_max;
    b.offset = offset;
    const int total = 2 * (degree + 1) + interior_breakpoints;
    b.knots.resize(total);
    for (int i = 0; i <= degree; ++i) {
        b.knots[i] = x_min;
        b.knots[total - 1 - i] = x_max;
    }
    const double step = (x_max - x_min) / static_cast<double>(interior_breakpoints + 1);
    for (int i = 1; i <= interior_breakpoints; ++i) b.knots[degree + i] = x_min + i * step;
    if (coefficients.size() != b.basis_count())
        throw std::invalid_argument("expected " + std::to_string(b.basis_count()) + " spline coefficients, got " +
                                    std::to_string(coefficients.size()));
    b.coefficients = std::move(coefficients);
    return b;
}

SplineBoundary SplineBoundary::reference(double x_min, double x_max) {
    Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(kReferenceCoefficients, 16);
    return clamped_uniform(x_min, x_max, 12, c, kReferenceOffset, 3);
}

std::pair<double, double> SplineBoundary::support(Eigen::Index j) const {
    if (j < 0 || j >= basis_count()) throw std::out_of_range("basis index out of range");
    return {knots[j], knots[j + degree + 1]};
}

Eigen::VectorXd bspline_basis(const SplineBoundary& boundary, double x) {
    if (!(x >= boundary.x_min && x <= boundary.x_max))
        throw std::out_of_range("x = " + std::to_string(x) + " lies outside the spline domain");
    const Eigen::VectorXd& t = boundary.knots;
    const Eigen::Index spans = t.size() - 1;

    // Degree 0, half-open spans; x_max goes to the last non-empty span.
    Eigen::VectorXd b = Eigen::VectorXd::Zero(spans);
    Eigen::Index last_nonempty = 0;
    for (Eigen::Index i = 0; i < spans; ++i)
        if (t[i] < t[i + 1]) last_nonempty = i;
    if (x == boundary.x_max) {
        b[last_nonempty] = 1.0;
    } else {
        for (Eigen::Index i = 0; i < spans; ++i)
            if (t[i] <= x && x < t[i + 1]) b[i] = 1.0;
    }

    for (int k = 1; k <= boundary.degree; ++k) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(spans - k);
        for (Eigen::Index i = 0; i < spans - k; ++i) {
            double v = 0.0;
            const double d1 = t[i + k] - t[i];
            const double d2 = t[i + k + 1] - t[i + 1];
            if (d1 > 0.0) v += (x - t[i]) / d1 * b[i];
            if (d2 > 0.0) v += (t[i + k + 1] - x) / d2 * b[i + 1];
            next[i] = v;
        }
        b = std::move(next);
    }
    return b;
}

double bspline_eval(const SplineBoundary& boundary, double x) {
    return bspline_basis(boundary, x).dot(boundary.coefficients) + boundary.offset;
}

Eigen::VectorXd bspline_eval(const SplineBoundary& boundary, const Eigen::VectorXd& xs) {
    Eigen::VectorXd out(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) out[i] = bspline_eval(boundary, xs[i]);
    return out;
}

SplineBoundary perturbed_boundary(const SplineBoundary& boundary, Eigen::Index index, double value) {
    if (index < 0 || index >= boundary.coefficients.size())
        throw std::out_of_range("coefficient index " + std::to_string(index) + " out of range");
    SplineBoundary b = boundary;
    b.coefficients[index] = value;
    return b;
}

Eigen::VectorXd draw_realization(const SplineBoundary& boundary, const SimErrorConfig& err, std::uint64_t seed) {
    const Eigen::VectorXd f0 = bspline_eval(boundary, err.grid);
    const GaussianSampler sampler =
        GaussianSampler::truncated_eigen(f0, cross_covariance(err.kernel, err.grid, err.grid));
    return sampler.draw(1, seed).col(0);
}

SimulationHarness::SimulationHarness(SplineBoundary boundary, SimErrorConfig err)
    : boundary_(std::move(boundary)),
      err_(std::move(err)),
      f0_(bspline_eval(boundary_, err_.grid)),
      sampler_(GaussianSampler::truncated_eigen(Eigen::VectorXd::Zero(err_.grid.size()),
                                                cross_covariance(err_.kernel, err_.grid, err_.grid))) {}

Eigen::MatrixXd SimulationHarness::realizations(const SplineBoundary& mean_boundary, std::size_t count,
                                                std::mt19937_64& rng) const {
    Eigen::MatrixXd f = sampler_.colour(sampler_.standard_normals(count, rng));
    f.colwise() += bspline_eval(mean_boundary, err_.grid);
    return f;
}

NullEnsemble SimulationHarness::null_ensemble(std::size_t M, std::mt19937_64& rng) const {
    const Eigen::MatrixXd zr = sampler_.standard_normals(M, rng);
    const Eigen::MatrixXd zs = sampler_.standard_normals(M, rng);
    // f0 cancels in every difference.
    return make_null_ensemble(err_.grid, sampler_.colour(zr - zs));
}

EnvelopeTestResult SimulationHarness::null_iteration(std::size_t M, double alpha, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    const NullEnsemble ens = null_ensemble(M, rng);
    const Eigen::MatrixXd z = sampler_.standard_normals(2, rng);
    const Eigen::VectorXd t_obs = sampler_.colour(z.col(0) - z.col(1));
    return run_envelope_test(t_obs, ens, alpha);
}

std::vector<EnvelopeTestResult> SimulationHarness::alternative_iteration(
    std::size_t M, double alpha, const std::vector<SplineBoundary>& alternatives, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    const NullEnsemble ens = null_ensemble(M, rng);
    const Eigen::MatrixXd z = sampler_.standard_normals(2, rng);
    const Eigen::VectorXd eps = sampler_.colour(z.col(0) - z.col(1));  // eps_a - eps_r
    std::vector<EnvelopeTestResult> out;
    out.reserve(alternatives.size());
    for (const auto& alt : alternatives) {
        const Eigen::VectorXd t_obs = bspline_eval(alt, err_.grid) - f0_ + eps;
        out.push_back(run_envelope_test(t_obs, ens, alpha));
    }
    return out;
}

SimErrorConfig default_error_config(std::size_t n_locations, double x_min, double x_max) {
    if (n_locations < 2) throw std::invalid_argument("simulation grid needs at least 2 locations");
    SimErrorConfig err;
    err.grid = linspace(x_min, x_max, static_cast<Eigen::Index>(n_locations));
    return err;
}

namespace {

void check_settings(const StudySettings& s) {
    if (s.n_locations < 2 || s.n_sim < 1 || s.ensemble_size < 2)
        throw std::invalid_argument("study settings must be positive (n >= 2, N_sim >= 1, M >= 2)");
    if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

double rejection_rate(const std::vector<double>& p, double alpha) {
    std::size_t k = 0;
    for (double v : p) k += v < alpha ? 1 : 0;
    return static_cast<double>(k) / static_cast<double>(p.size());
}

}  // namespace

StudyReport run_size_study(const StudySettings& settings, std::uint64_t seed, const StudyOptions& options) {
    check_settings(settings);
    const SimulationHarness harness(SplineBoundary::reference(options.x_min, options.x_max),
                                    default_error_config(settings.n_locations, options.x_min, options.x_max));
    StudyReport report;
    report.settings = settings;
    report.p_values.assign(settings.n_sim, 1.0);
    parallel_for(settings.n_sim, options.threads, [&](std::size_t i) {
        report.p_values[i] =
            harness.null_iteration(settings.ensemble_size, settings.alpha, derive_seed(seed, kSizeStream, i)).p_value;
    });
    report.rejection_rate = rejection_rate(report.p_values, settings.alpha);
    return report;
}

std::vector<StudyReport> run_power_study(const StudySettings& settings, const std::vector<double>& perturbation_values,
                                         std::uint64_t seed, const StudyOptions& options) {
    check_settings(settings);
    if (perturbation_values.empty()) throw std::invalid_argument("power study needs at least one perturbation value");
    const SplineBoundary reference = SplineBoundary::reference(options.x_min, options.x_max);
    const SimulationHarness harness(reference,
                                    default_error_config(settings.n_locations, options.x_min, options.x_max));
    std::vector<SplineBoundary> alternatives;
    for (double v : perturbation_values) alternatives.push_back(perturbed_boundary(reference, options.perturbed_index, v));

    std::vector<std::vector<double>> p(perturbation_values.size(), std::vector<double>(settings.n_sim, 1.0));
    parallel_for(settings.n_sim, options.threads, [&](std::size_t i) {
        const auto results = harness.alternative_iteration(settings.ensemble_size, settings.alpha, alternatives,
                                                           derive_seed(seed, kPowerStream, i));
        for (std::size_t k = 0; k < results.size(); ++k) p[k][i] = results[k].p_value;
    });

    std::vector<StudyReport> reports;
    for (std::size_t k = 0; k < perturbation_values.size(); ++k) {
        StudyReport r;
        r.settings = settings;
        r.perturbation = perturbation_values[k];
        r.p_values = std::move(p[k]);
        r.rejection_rate = rejection_rate(r.p_values, settings.alpha);
        reports.push_back(std::move(r));
    }
    return reports;
}

std::vector<double> default_perturbation_values() {
    std::vector<double> v;
    for (int i = 0; i <= 8; ++i) v.push_back(1.0 + 0.5 * i);
    return v;
}

}  // namespace boundshift
