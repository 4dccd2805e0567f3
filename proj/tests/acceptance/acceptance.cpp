// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset. Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "boundshift/canny.hpp"
#include "boundshift/climate.hpp"
#include "boundshift/envelope.hpp"
#include "boundshift/hetgp.hpp"
#include "boundshift/io.hpp"
#include "boundshift/parallel.hpp"
#include "boundshift/simulate.hpp"
#include "commands.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace boundshift;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20250101;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

double rate(const StudyReport& r) { return r.rejection_rate; }

// --- 1. empirical size ----------------------------------------------------------

Outcome size_calibration() {
    Outcome o{true, ""};
    for (std::size_t n : {200u, 500u, 1000u, 1500u}) {
        const StudyReport r = run_size_study({n, 500, 2500, 0.05}, derive_seed(kSeed, n, 500));
        const bool ok = r.rejection_rate >= 0.03 && r.rejection_rate <= 0.08;
        o.pass = o.pass && ok;
        o.detail += "n=" + std::to_string(n) + ":" + fmt(100 * r.rejection_rate) + "% ";
    }
    o.detail += "(band 3-8%)";
    return o;
}

// --- 2. power curve ---------------------------------------------------------------

Outcome power_curve() {
    const std::size_t n_sim = 500;
    const auto reports = run_power_study({1000, n_sim, 2500, 0.05}, default_perturbation_values(), derive_seed(kSeed, 1000, n_sim));
    Outcome o;
    const double first = rate(reports.front()), last = rate(reports.back());
    bool monotone = true;
    for (std::size_t k = 0; k + 1 < reports.size(); ++k) {
        const double a = rate(reports[k]), b = rate(reports[k + 1]);
        const double se = std::sqrt((a * (1 - a) + b * (1 - b)) / double(n_sim));
        if (b < a - 2.0 * se) monotone = false;
    }
    o.pass = first >= 0.03 && first <= 0.08 && last > 0.9 && monotone;
    for (const auto& r : reports) o.detail += fmt(r.perturbation, 2) + ":" + fmt(rate(r), 3) + " ";
    o.detail += monotone ? "(monotone within 2 SE)" : "(NOT monotone within 2 SE)";
    return o;
}

// --- 3. localization ----------------------------------------------------------------

Outcome localization() {
    const SplineBoundary base = SplineBoundary::reference();
    const SimulationHarness h(base, default_error_config(1000));
    const auto [lo, hi] = base.support(13);
    const std::vector<double> values{3.0, 4.0, 5.0};
    std::vector<SplineBoundary> alts;
    for (double v : values) alts.push_back(perturbed_boundary(base, 13, v));
    std::vector<std::size_t> inside(values.size(), 0), total(values.size(), 0);
    for (int it = 0; it < 100; ++it) {
        const auto res = h.alternative_iteration(2500, 0.05, alts, derive_seed(kSeed, 3, it));
        for (std::size_t k = 0; k < res.size(); ++k)
            for (Eigen::Index i = 0; i < res[k].grid.size(); ++i) {
                if (!res[k].exceed_mask[i]) continue;
                ++total[k];
                inside[k] += res[k].grid[i] >= lo && res[k].grid[i] <= hi;
            }
    }
    Outcome o{true, "support [" + fmt(lo) + ", " + fmt(hi) + "] "};
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double frac = total[k] ? double(inside[k]) / double(total[k]) : 0.0;
        o.pass = o.pass && total[k] > 0 && frac >= 0.9;
        o.detail += "beta13=" + fmt(values[k], 2) + ":" + fmt(100 * frac) + "% of " + std::to_string(total[k]) + " ";
    }
    return o;
}

// --- 4. null containment ------------------------------------------------------------

Outcome null_containment() {
    const SimulationHarness h(SplineBoundary::reference(), default_error_config(1000));
    int contained = 0;
    const int runs = 200;
    for (int it = 0; it < runs; ++it) contained += h.null_iteration(2500, 0.05, derive_seed(kSeed, 4, it)).exceed_count() == 0;
    const double p = double(contained) / runs;
    const double se = std::sqrt(0.95 * 0.05 / runs);
    return {p >= 0.95, std::to_string(contained) + "/" + std::to_string(runs) + " inside (" + fmt(100 * p) +
                           "%, required >= 95%, binomial SE at nominal " + fmt(100 * se, 2) + "%)"};
}

// --- 5. likelihood oracle -------------------------------------------------------------

Outcome likelihood_oracle() {
    std::mt19937_64 rng(kSeed + 5);
    std::uniform_real_distribution<double> U(0, 1);
    TemporalDesignConfig design;
    design.periods = {3.0, 7.0};
    design.harmonics = {1};
    design.center_year = 1990.0;
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 5 + static_cast<int>(U(rng) * 36);  // 5..40
        const Eigen::VectorXd x = testing_support::uniform_points(n, -20, 60, rng);
        const Eigen::VectorXd y = testing_support::gp_draw({1.0 + 3.0 * U(rng), 5.0 + 10.0 * U(rng)}, x, rng);
        std::vector<TrainingRecord> recs;
        for (int i = 0; i < n; ++i) recs.push_back({1988.0 + i % 4, x[i], 15.0 + y[i]});
        const TrainingSet s = TrainingSet::build(recs, design);
        Eigen::VectorXd z(n);
        for (auto& v : z) v = -5 + 3 * U(rng);
        const double lf = 1 + 20 * U(rng), lg = 2 + 30 * U(rng), kg = 0.05 + 2 * U(rng), m = -4 + 2 * U(rng);
        const double got = conditional_loglik(lf, {kg, lg}, m, z, s);
        const Eigen::VectorXd beta = s.design.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(s.latitudes());
        const double oracle = testing_support::dense_loglik(lf, lg, kg, m, z, s.longitudes(), s.latitudes() - s.design * beta);
        worst = std::max(worst, std::abs(got - oracle) / std::abs(oracle));
    }
    return {worst <= 1e-6, "50 instances, worst relative error " + fmt(worst, 3)};
}

// --- 6. p-value and envelope oracle ----------------------------------------------------

Outcome envelope_oracle() {
    std::mt19937_64 rng(kSeed + 6);
    std::normal_distribution<double> N;
    std::uniform_int_distribution<int> Msize(2, 50), msize(1, 30);
    const std::vector<double> alphas{0.05, 0.1, 0.2, 0.5};
    int mismatches = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const int M = Msize(rng), m = msize(rng);
        Eigen::MatrixXd curves(m, M);
        for (auto& v : curves.reshaped()) v = N(rng);
        const NullEnsemble e = make_null_ensemble(Eigen::VectorXd::LinSpaced(m, 0, 1), curves);
        double alpha = alphas[rep % alphas.size()];
        if (alpha * M < 1.0) alpha = 0.5;  // at least one statistic beyond the envelope

        // Brute-force p-value: count simulated statistics at least as large.
        const double r_obs = std::abs(N(rng)) * 2.0;
        int ge = 0;
        for (double r : e.simulated_mad) ge += r >= r_obs;
        if (p_value(r_obs, e.simulated_mad) != double(ge) / M) ++mismatches;
        // Ties: an observed value equal to a simulated one.
        const double tie = e.simulated_mad[rep % M];
        ge = 0;
        for (double r : e.simulated_mad) ge += r >= tie;
        if (p_value(tie, e.simulated_mad) != double(ge) / M) ++mismatches;

        // Brute-force critical value: sort ascending and take the order statistic
        // with exactly floor(alpha M) values strictly above it (absent ties).
        std::vector<double> sorted = e.simulated_mad;
        std::sort(sorted.begin(), sorted.end());
        const int k = static_cast<int>(std::floor(alpha * M + 1e-9));
        const double r_alpha = sorted[static_cast<std::size_t>(M - k - 1)];
        const EnvelopeBounds b = envelope_bounds(e, alpha);
        if (b.r_alpha != r_alpha) ++mismatches;
        for (int i = 0; i < m; ++i) {
            if (b.lower[i] != e.mu_en[i] - r_alpha * e.sigma_en[i]) ++mismatches;
            if (b.upper[i] != e.mu_en[i] + r_alpha * e.sigma_en[i]) ++mismatches;
        }
        int above = 0;
        for (double r : e.simulated_mad) above += r > r_alpha;
        if (above != k) ++mismatches;
    }
    return {mismatches == 0, "100 ensembles (M <= 50), " + std::to_string(mismatches) + " mismatches"};
}

// --- 7. GP predictive calibration --------------------------------------------------------

Outcome gp_calibration() {
    TemporalDesignConfig design;
    design.periods = {10.0};
    design.harmonics = {1};
    design.center_year = 2000.0;
    const KernelParams kf{1.0, 10.0, KernelFamily::Matern32}, kg{1.0, 15.0, KernelFamily::Matern32};
    const int n = 200, held = 200, reps = 100;
    double coverage_sum = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        std::mt19937_64 rng(derive_seed(kSeed, 7, rep));
        std::normal_distribution<double> N;
        const Eigen::VectorXd x = testing_support::uniform_points(n + held, 0.0, 60.0, rng);
        const Eigen::VectorXd f = testing_support::gp_draw(kf, x, rng);
        const Eigen::VectorXd g = (testing_support::gp_draw(kg, x, rng).array() - 2.0).matrix();
        Eigen::VectorXd y(n + held);
        for (int i = 0; i < n + held; ++i) y[i] = 10.0 + f[i] + std::exp(0.5 * g[i]) * N(rng);
        std::vector<TrainingRecord> recs;
        for (int i = 0; i < n; ++i) recs.push_back({2000.0, x[i], y[i]});
        HetGpConfig cfg;
        cfg.temporal = design;
        const HetGpModel model = fit(TrainingSet::build(recs, design), cfg);
        const PredictiveDistribution p =
            predict(model, x.tail(held), basis_at_year(design, 2000.0), PredictiveFlavor::Noisy);
        int covered = 0;
        for (int i = 0; i < held; ++i) covered += std::abs(y[n + i] - p.mean[i]) <= 1.959964 * std::sqrt(p.cov(i, i));
        coverage_sum += double(covered) / held;
    }
    const double c = coverage_sum / reps;
    return {std::abs(c - 0.95) <= 0.03, "mean held-out coverage " + fmt(100 * c) + "% over 100 replications (target 95 +- 3%)"};
}

// --- 8. B-spline ---------------------------------------------------------------------------

double cox_de_boor(const Eigen::VectorXd& t, int j, int k, double x) {
    if (k == 0) return (t[j] <= x && x < t[j + 1]) ? 1.0 : 0.0;
    double left = 0.0, right = 0.0;
    if (t[j + k] > t[j]) left = (x - t[j]) / (t[j + k] - t[j]) * cox_de_boor(t, j, k - 1, x);
    if (t[j + k + 1] > t[j + 1]) right = (t[j + k + 1] - x) / (t[j + k + 1] - t[j + 1]) * cox_de_boor(t, j + 1, k - 1, x);
    return left + right;
}

Outcome bspline() {
    const SplineBoundary b = SplineBoundary::reference();
    double pu = 0.0, oracle = 0.0;
    for (int i = 1; i <= 1000; ++i) {
        const double x = -20.0 + 80.0 * i / 1001.0;
        pu = std::max(pu, std::abs(bspline_basis(b, x).sum() - 1.0));
        double s = b.offset;
        for (Eigen::Index j = 0; j < b.basis_count(); ++j) s += b.coefficients[j] * cox_de_boor(b.knots, int(j), b.degree, x);
        oracle = std::max(oracle, std::abs(bspline_eval(b, x) - s));
    }
    return {pu <= 1e-12 && oracle <= 1e-9,
            "partition of unity max error " + fmt(pu, 3) + ", recursion oracle max error " + fmt(oracle, 3)};
}

// --- 9. pipeline fixtures ---------------------------------------------------------------------

Outcome pipeline_fixtures() {
    struct Fixture {
        double t, pw, p;
        DryClass expected;  // from R = 2.3 T - 0.64 P_W + 41 worked by hand
    };
    const std::vector<Fixture> cells{
        {25, 30, 30, DryClass::Arid},      // R = 79.3
        {25, 30, 50, DryClass::SemiArid},
        {25, 30, 100, DryClass::NonArid},
        {10, 0, 31, DryClass::Arid},       // R = 64
        {10, 0, 33, DryClass::SemiArid},
        {10, 0, 64.5, DryClass::NonArid},
        {0, 50, 4, DryClass::Arid},        // R = 9
        {0, 50, 8, DryClass::SemiArid},
        {0, 50, 9.5, DryClass::NonArid},
        {-20, 100, 0, DryClass::NonArid},  // R = -69
    };
    int label_errors = 0;
    for (const auto& c : cells) {
        AnnualClimateCell a;
        a.t_c = c.t;
        a.pw_pct = c.pw;
        a.p_mm = c.p;
        label_errors += ktc_classify(a) != c.expected;
    }

    const ClassGrid step = testing_support::make_grid(10, 10, [](int r, int) { return r < 5 ? DryClass::Arid : DryClass::SemiArid; });
    const BoundaryPointSet edge = canny_extract(step, BoundaryInterface::Primary);
    int edge_errors = edge.points.empty() ? 1 : 0;
    for (const auto& p : edge.points) edge_errors += std::abs(p.latitude - 4.5) > 1.0;

    // Filters on a quarter-disc raster spanning both sides of the default cut lines.
    const ClassGrid disc = testing_support::make_grid(
        40, 40,
        [](int r, int c) {
            const double d = std::hypot(r + 0.5, c + 0.5);
            return d < 15 ? DryClass::Arid : (d < 30 ? DryClass::SemiArid : DryClass::NonArid);
        },
        10.0, -5.0, 1.0);
    int filter_errors = 0;
    std::size_t kept = 0;
    for (BoundaryInterface iface : {BoundaryInterface::Primary, BoundaryInterface::Secondary}) {
        const PointFilters f = PointFilters::defaults_for(iface);
        const BoundaryPointSet out = filter_points(canny_extract(disc, iface), f);
        kept += out.points.size();
        for (const auto& p : out.points) {
            if (f.min_latitude && p.latitude < *f.min_latitude) ++filter_errors;
            if (f.max_longitude && p.longitude > *f.max_longitude) ++filter_errors;
        }
    }
    return {label_errors == 0 && edge_errors == 0 && filter_errors == 0 && kept > 0,
            "KTC label errors " + std::to_string(label_errors) + "/10, step-edge points off by > 1 cell " +
                std::to_string(edge_errors) + " of " + std::to_string(edge.points.size()) + ", filter violations " +
                std::to_string(filter_errors) + " of " + std::to_string(kept)};
}

// --- 10. synthetic end to end ------------------------------------------------------------------

// Annual climate raster whose arid/semi-arid interface follows
// 17.5 + 3 sin(lon / 7), optionally displaced north over a longitude window.
void write_synthetic_climate(const fs::path& path, const std::vector<int>& years, int shifted_year, double shift) {
    std::ofstream out(path);
    out << "year,longitude,latitude,t_c,p_mm,pw_pct\n";
    for (int year : years) {
        std::mt19937_64 rng(derive_seed(kSeed, 10, static_cast<std::uint64_t>(year)));
        std::normal_distribution<double> N(0.0, 2.0);
        for (int lat = 0; lat < 30; ++lat)
            for (int lon = 0; lon < 40; ++lon) {
                double centre = 15.0 + 3.0 * std::sin(lon / 7.0);
                if (year == shifted_year && lon >= 20 && lon <= 30) centre += shift;
                // T = 25 and P_W = 30 give R = 79.3; P crosses R/2 at 2.5 degrees
                // north of `centre` and R at 2.5 degrees south of it.
                const double p = std::max(0.0, 59.5 - 7.93 * (lat - centre) + N(rng));
                out << year << ',' << lon << ',' << lat << ",25," << io::format_double(p) << ",30\n";
            }
    }
}

Outcome end_to_end() {
    const fs::path dir = fs::temp_directory_path() / "boundshift_acceptance_e2e";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<int> years;
    for (int y = 1960; y <= 1989; ++y) years.push_back(y);
    write_synthetic_climate(dir / "climate.csv", years, 1984, 4.0);

    const auto cfg = [&](const std::string& sub, cli::json extra) {
        extra["out"] = dir.string();
        extra["seed"] = kSeed;
        return cli::resolve_config(sub, nullptr, extra);
    };
    cli::run("classify", cfg("classify", {{"input", (dir / "climate.csv").string()}}));
    cli::run("extract", cfg("extract", {{"interfaces", {"primary"}}}));
    // Rolling six-year windows with a one-year gap: 1976-1981 for 1983 and
    // 1977-1982 for 1984.
    const auto test = [&](int year) {
        cli::run("fit", cfg("fit", {{"mode", "rolling"}, {"target", year}}));
        const std::string model = (dir / ("model_rolling" + std::to_string(year) + ".json")).string();
        const cli::json m = cli::run(
            "test", cfg("test", {{"case", 2}, {"model_a", model}, {"points", (dir / "points.csv").string()},
                                 {"year", year}, {"name", "y" + std::to_string(year)}}));
        return m.at("summary");
    };
    const cli::json shifted = test(1984), control = test(1983);
    const bool ok = shifted.at("rejected").get<bool>() && !control.at("rejected").get<bool>();
    return {ok, "shifted 1984 p=" + fmt(shifted.at("p_value").get<double>()) + " (rejected=" +
                    (shifted.at("rejected").get<bool>() ? "yes" : "no") + "), control 1983 p=" +
                    fmt(control.at("p_value").get<double>()) + " (rejected=" +
                    (control.at("rejected").get<bool>() ? "yes" : "no") + ")"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"empirical size in [3%, 8%] at n = 200, 500, 1000, 1500", size_calibration},
        {"power curve at n = 1000", power_curve},
        {"envelope exceedances localized to the perturbed basis support", localization},
        {"null difference inside the 95% envelope in >= 95% of 200 runs", null_containment},
        {"likelihood matches dense oracle", likelihood_oracle},
        {"p-value and envelope match brute force", envelope_oracle},
        {"95% noisy prediction intervals cover held-out points", gp_calibration},
        {"B-spline partition of unity and recursion oracle", bspline},
        {"pipeline fixtures (KTC, Canny step edge, filters)", pipeline_fixtures},
        {"synthetic classify-extract-fit-test run", end_to_end},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[k].first << " | " << o.detail
                  << " [" << fmt(secs, 3) << " s]" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
