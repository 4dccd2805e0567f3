#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "boundshift/canny.hpp"
#include "boundshift/climate.hpp"
#include "boundshift/diagnostics.hpp"
#include "boundshift/envelope.hpp"
#include "boundshift/hetgp.hpp"
#include "boundshift/io.hpp"
#include "boundshift/parallel.hpp"
#include "boundshift/simulate.hpp"

#ifndef BOUNDSHIFT_VERSION
#define BOUNDSHIFT_VERSION "0.0.0"
#endif

namespace boundshift::cli {

namespace fs = std::filesystem;

std::string version() { return BOUNDSHIFT_VERSION; }

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"classify", "extract", "fit",      "predict",
                                                "test",     "sim-size", "sim-power"};
    return names;
}

namespace {

json hetgp_defaults() {
    const HetGpConfig d;
    return json{{"var_floor", d.var_floor},
                {"relative_loglik_tol", d.relative_loglik_tol},
                {"max_outer_iterations", d.max_outer_iterations},
                {"start_fractions", d.start_fractions},
                {"lengthscale_lower_fraction", d.lengthscale_lower_fraction},
                {"lengthscale_upper_fraction", d.lengthscale_upper_fraction},
                {"kappa_g_lower", d.kappa_g_lower},
                {"kappa_g_upper", d.kappa_g_upper},
                {"g_mean_lower", d.g_mean_lower},
                {"g_mean_upper", d.g_mean_upper},
                {"nugget_ratio_lower", d.nugget_ratio_lower},
                {"nugget_ratio_upper", d.nugget_ratio_upper},
                {"refresh_damping", d.refresh_damping}};
}

json section_defaults(const std::string& sub) {
    const TemporalDesignConfig temporal;
    const CannyOptions canny;
    if (sub == "classify") return json{{"input", nullptr}, {"years", json::array()}};
    if (sub == "extract")
        return json{
            {"grids", json::array()},
            {"grid_dir", nullptr},
            {"interfaces", {"primary", "secondary"}},
            {"canny", {{"low_ratio", canny.low_ratio}, {"high_ratio", canny.high_ratio}, {"sigma", canny.gaussian_sigma}}},
            {"filters",
             {{"geographic_defaults", true}, {"min_latitude", nullptr}, {"max_longitude", nullptr}, {"mask", nullptr}}}};
    if (sub == "fit")
        return json{
            {"points", nullptr},
            {"interface", "primary"},
            {"mode", "year"},
            {"years", json::array()},
            {"target", nullptr},
            {"window", 6},
            {"gap", 1},
            {"beta_years", "all"},
            {"temporal",
             {{"periods", temporal.periods}, {"harmonics", temporal.harmonics}, {"center_year", nullptr}, {"intercept", true}}},
            {"hetgp", hetgp_defaults()},
            {"model", nullptr}};
    if (sub == "predict")
        return json{{"model", nullptr},  {"m", 1000},           {"grid_min", nullptr},
                    {"grid_max", nullptr}, {"target_years", nullptr}, {"output", nullptr}};
    if (sub == "test")
        return json{{"case", 1},
                    {"model_a", nullptr},
                    {"model_b", nullptr},
                    {"points", nullptr},
                    {"year", nullptr},
                    {"interface", "primary"},
                    {"M", 2500},
                    {"alpha", 0.05},
                    {"m", 1000},
                    {"ensemble_flavor", "auto"},
                    {"null_model", "earlier"},
                    {"svg", false},
                    {"name", "test"}};
    if (sub == "sim-size")
        return json{{"locations", {200, 500, 1000, 1500}},
                    {"iterations", {200, 500, 1000, 1500}},
                    {"M", 2500},
                    {"alpha", 0.05},
                    {"x_min", -20.0},
                    {"x_max", 60.0}};
    if (sub == "sim-power") {
        json settings = json::array();
        for (int n_sim : {200, 500, 1000, 1500}) settings.push_back({{"n", 1000}, {"N_sim", n_sim}});
        for (int n : {200, 500, 1500}) settings.push_back({{"n", n}, {"N_sim", 500}});
        return json{{"settings", settings},
                    {"perturbations", default_perturbation_values()},
                    {"perturbed_index", 13},
                    {"M", 2500},
                    {"alpha", 0.05},
                    {"x_min", -20.0},
                    {"x_max", 60.0}};
    }
    throw ConfigError("unknown subcommand '" + sub + "'");
}

// Rejects keys absent from the defaults, recursing into nested objects whose
// default is itself an object.
void check_known_keys(const json& given, const json& defaults, const std::string& where) {
    if (!given.is_object()) throw ConfigError("configuration '" + where + "' must be a JSON object");
    for (const auto& [key, value] : given.items()) {
        if (!defaults.contains(key)) throw ConfigError("unknown configuration key '" + where + key + "'");
        if (defaults.at(key).is_object() && !value.is_null()) check_known_keys(value, defaults.at(key), where + key + ".");
    }
}

template <typename T>
T get(const json& cfg, const std::string& key) {
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("configuration key '" + key + "': " + e.what());
    }
}

template <typename T>
std::optional<T> get_optional(const json& cfg, const std::string& key) {
    if (!cfg.contains(key) || cfg.at(key).is_null()) return std::nullopt;
    return get<T>(cfg, key);
}

std::string require_path(const json& cfg, const std::string& key) {
    const auto p = get_optional<std::string>(cfg, key);
    if (!p || p->empty()) throw ConfigError("configuration key '" + key + "' (a file path) is required");
    return *p;
}

// "auto" draws latent curves when two fitted means are compared (case 1) and
// noisy curves when raw observed points are compared with a prediction (case 2).
PredictiveFlavor parse_flavor(const std::string& s, int which) {
    if (s == "auto") return which == 2 ? PredictiveFlavor::Noisy : PredictiveFlavor::Latent;
    if (s == "latent") return PredictiveFlavor::Latent;
    if (s == "noisy") return PredictiveFlavor::Noisy;
    throw ConfigError("ensemble_flavor must be 'auto', 'latent' or 'noisy', got '" + s + "'");
}

BoundaryInterface interface_from(const json& cfg, const std::string& key) {
    try {
        return parse_interface(get<std::string>(cfg, key));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

// Outputs are rendered in memory and only written once the command has
// succeeded, so a failing run leaves the output directory untouched.
struct Context {
    json config;
    fs::path out;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    Diagnostics diag;
    json summary = json::object();
    std::vector<std::pair<fs::path, std::string>> files;
    std::vector<ClassGrid> grids_to_write;

    void stage(const fs::path& path, std::string contents) { files.emplace_back(path, std::move(contents)); }
    void stage(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
        std::ostringstream os;
        writer(os);
        stage(path, os.str());
    }
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io::IoError("cannot write " + path.string());
    out << text;
    if (!out) throw io::IoError("failed writing " + path.string());
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw io::IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw io::SchemaError(path.string() + ": " + e.what());
    }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string year_list_label(const std::vector<int>& years) {
    if (years.size() == 1) return std::to_string(years.front());
    return std::to_string(years.front()) + "-" + std::to_string(years.back());
}

// --- classify -----------------------------------------------------------------

void cmd_classify(Context& ctx) {
    const io::ClimateInput input = io::read_climate_csv(fs::path(require_path(ctx.config, "input")));
    std::vector<int> years = get<std::vector<int>>(ctx.config, "years");
    if (years.empty()) years = input.years();

    std::vector<ClassGrid> grids(years.size());
    std::vector<Diagnostics> diags(years.size());
    std::vector<json> summaries(years.size());
    std::vector<std::string> errors(years.size());
    parallel_for(years.size(), ctx.threads, [&](std::size_t i) {
        try {
            const int year = years[i];
            std::vector<AnnualClimateCell> cells;
            if (input.kind == io::ClimateCsvKind::Monthly) {
                cells = aggregate_annual(input.monthly, year, &diags[i]);
            } else {
                for (const auto& [y, cell] : input.annual)
                    if (y == year) cells.push_back(cell);
            }
            if (cells.empty()) throw io::SchemaError("no climate records for year " + std::to_string(year));
            grids[i] = build_class_grid(cells, year, &diags[i]);
            json counts = json::object();
            for (DryClass c : {DryClass::Arid, DryClass::SemiArid, DryClass::NonArid, DryClass::NoData})
                counts[std::string(to_string(c))] = std::count(grids[i].labels.begin(), grids[i].labels.end(), c);
            std::size_t missing = 0;
            for (const auto& c : cells) missing += c.missing_months > 0 ? 1 : 0;
            summaries[i] = json{{"cells", cells.size()},
                                {"nx", grids[i].spec.nx},
                                {"ny", grids[i].spec.ny},
                                {"labels", counts},
                                {"missing_month_cells", missing}};
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < years.size(); ++i) {
        if (!errors[i].empty()) throw io::SchemaError(errors[i]);
        ctx.diag.merge(diags[i].warnings());
        ctx.summary["years"][std::to_string(years[i])] = summaries[i];
    }
    ctx.grids_to_write = std::move(grids);
}

// --- extract ------------------------------------------------------------------

std::vector<fs::path> grid_paths(const Context& ctx) {
    std::vector<fs::path> paths;
    for (const auto& p : get<std::vector<std::string>>(ctx.config, "grids")) paths.emplace_back(p);
    if (!paths.empty()) return paths;
    const fs::path dir = get_optional<std::string>(ctx.config, "grid_dir").value_or(ctx.out.string());
    if (!fs::is_directory(dir)) throw io::IoError("class grid directory " + dir.string() + " does not exist");
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.starts_with("classes_") && entry.path().extension() == ".json") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw io::IoError("no classes_*.json grids found in " + dir.string());
    return paths;
}

void cmd_extract(Context& ctx) {
    const json& canny_cfg = ctx.config.at("canny");
    CannyOptions canny;
    canny.low_ratio = get<double>(canny_cfg, "low_ratio");
    canny.high_ratio = get<double>(canny_cfg, "high_ratio");
    canny.gaussian_sigma = get<double>(canny_cfg, "sigma");
    const json& filt = ctx.config.at("filters");
    const bool geographic = get<bool>(filt, "geographic_defaults");
    const auto min_lat = get_optional<double>(filt, "min_latitude");
    const auto max_lon = get_optional<double>(filt, "max_longitude");
    const auto mask_path = get_optional<std::string>(filt, "mask");

    std::vector<BoundaryInterface> ifaces;
    for (const auto& name : get<std::vector<std::string>>(ctx.config, "interfaces")) {
        try {
            ifaces.push_back(parse_interface(name));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }

    std::vector<ClassGrid> grids;
    for (const auto& p : grid_paths(ctx)) grids.push_back(io::read_class_grid(p));
    std::sort(grids.begin(), grids.end(), [](const ClassGrid& a, const ClassGrid& b) { return a.year < b.year; });

    const std::size_t jobs = grids.size() * ifaces.size();
    std::vector<BoundaryPointSet> raw(jobs), kept(jobs);
    std::vector<Diagnostics> diags(jobs);
    std::vector<std::string> errors(jobs);
    parallel_for(jobs, ctx.threads, [&](std::size_t k) {
        try {
            const ClassGrid& grid = grids[k / ifaces.size()];
            const BoundaryInterface iface = ifaces[k % ifaces.size()];
            raw[k] = canny_extract(grid, iface, canny, &diags[k]);
            PointFilters f = geographic ? PointFilters::defaults_for(iface) : PointFilters{};
            if (min_lat) f.min_latitude = *min_lat;
            if (max_lon) f.max_longitude = *max_lon;
            if (mask_path) f.exclusion = io::read_mask_csv(*mask_path, grid.spec);
            kept[k] = filter_points(raw[k], f);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    });

    std::vector<BoundaryPointSet> all;
    for (std::size_t k = 0; k < jobs; ++k) {
        if (!errors[k].empty()) throw std::runtime_error(errors[k]);
        ctx.diag.merge(diags[k].warnings());
        const BoundaryPointSet& s = kept[k];
        const std::string iface = std::string(to_string(s.interface));
        ctx.summary["counts"][std::to_string(s.year)][iface] =
            json{{"edge_points", raw[k].points.size()}, {"kept", s.points.size()}};
        const fs::path path = ctx.out / ("points_" + std::to_string(s.year) + "_" + iface + ".csv");
        ctx.stage(path, [&](std::ostream& os) { io::write_points_csv({s}, os); });
        all.push_back(s);
    }
    ctx.stage(ctx.out / "points.csv", [&](std::ostream& os) { io::write_points_csv(all, os); });
}

// --- fit ------------------------------------------------------------------------

struct TrainingSelection {
    std::vector<TrainingRecord> records;
    std::vector<int> all_years;  // distinct years present in the input file
};

TrainingSelection read_training(const fs::path& path, BoundaryInterface iface) {
    TrainingSelection sel;
    std::ifstream in(path);
    if (!in) throw io::IoError("cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    in.seekg(0);
    if (header.find("interface") != std::string::npos) {
        for (const auto& set : io::read_points_csv(in)) {
            if (set.interface != iface) continue;
            for (const auto& p : set.points) sel.records.push_back({double(set.year), p.longitude, p.latitude});
        }
    } else {
        sel.records = io::read_training_csv(in);
    }
    std::set<int> years;
    for (const auto& r : sel.records) years.insert(static_cast<int>(std::lround(r.year)));
    sel.all_years.assign(years.begin(), years.end());
    return sel;
}

HetGpConfig hetgp_config(const json& j, const TemporalDesignConfig& temporal) {
    HetGpConfig c;
    c.temporal = temporal;
    c.var_floor = get<double>(j, "var_floor");
    c.relative_loglik_tol = get<double>(j, "relative_loglik_tol");
    c.max_outer_iterations = get<int>(j, "max_outer_iterations");
    c.start_fractions = get<std::vector<double>>(j, "start_fractions");
    c.lengthscale_lower_fraction = get<double>(j, "lengthscale_lower_fraction");
    c.lengthscale_upper_fraction = get<double>(j, "lengthscale_upper_fraction");
    c.kappa_g_lower = get<double>(j, "kappa_g_lower");
    c.kappa_g_upper = get<double>(j, "kappa_g_upper");
    c.g_mean_lower = get<double>(j, "g_mean_lower");
    c.g_mean_upper = get<double>(j, "g_mean_upper");
    c.nugget_ratio_lower = get<double>(j, "nugget_ratio_lower");
    c.nugget_ratio_upper = get<double>(j, "nugget_ratio_upper");
    c.refresh_damping = get<double>(j, "refresh_damping");
    if (c.start_fractions.empty()) throw ConfigError("hetgp.start_fractions must not be empty");
    if (c.max_outer_iterations < 1) throw ConfigError("hetgp.max_outer_iterations must be at least 1");
    if (!(c.refresh_damping >= 0.0 && c.refresh_damping < 1.0))
        throw ConfigError("hetgp.refresh_damping must lie in [0, 1)");
    return c;
}

struct FitPlan {
    std::string label;
    std::vector<int> training_years;
    std::vector<int> target_years;
};

FitPlan plan_fit(const json& cfg) {
    const std::string mode = get<std::string>(cfg, "mode");
    const std::vector<int> years = get<std::vector<int>>(cfg, "years");
    FitPlan plan;
    if (mode == "year") {
        if (years.size() != 1) throw ConfigError("year mode needs exactly one entry in 'years'");
        plan.training_years = plan.target_years = years;
        plan.label = "year" + std::to_string(years.front());
    } else if (mode == "decade") {
        if (years.empty()) throw ConfigError("decade mode needs the decade's years in 'years'");
        std::set<int> s(years.begin(), years.end());
        plan.training_years.assign(s.begin(), s.end());
        plan.target_years = plan.training_years;
        plan.label = "decade" + year_list_label(plan.training_years);
    } else if (mode == "rolling") {
        const auto target = get_optional<int>(cfg, "target");
        if (!target) throw ConfigError("rolling mode needs 'target'");
        const int window = get<int>(cfg, "window");
        const int gap = get<int>(cfg, "gap");
        if (window < 1 || gap < 0) throw ConfigError("rolling mode needs window >= 1 and gap >= 0");
        // The `gap` years just before the target are skipped; the window ends
        // right before them.
        const int last = *target - gap - 1;
        for (int y = last - window + 1; y <= last; ++y) plan.training_years.push_back(y);
        plan.target_years = {*target};
        plan.label = "rolling" + std::to_string(*target);
    } else {
        throw ConfigError("mode must be 'year', 'decade' or 'rolling', got '" + mode + "'");
    }
    return plan;
}

void cmd_fit(Context& ctx) {
    const fs::path points = get_optional<std::string>(ctx.config, "points").value_or((ctx.out / "points.csv").string());
    const BoundaryInterface iface = interface_from(ctx.config, "interface");
    const FitPlan plan = plan_fit(ctx.config);
    const TrainingSelection sel = read_training(points, iface);

    const json& tcfg = ctx.config.at("temporal");
    TemporalDesignConfig temporal;
    temporal.periods = get<std::vector<double>>(tcfg, "periods");
    temporal.harmonics = get<std::vector<int>>(tcfg, "harmonics");
    temporal.intercept = get<bool>(tcfg, "intercept");
    if (const auto c = get_optional<double>(tcfg, "center_year")) {
        temporal.center_year = *c;
    } else {
        if (sel.all_years.empty()) throw io::SchemaError(points.string() + ": no boundary points for the interface");
        const std::vector<double> ys(sel.all_years.begin(), sel.all_years.end());
        temporal.center_year = TemporalDesignConfig::mean_year(ys);
    }
    try {
        temporal.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const std::set<int> wanted(plan.training_years.begin(), plan.training_years.end());
    std::vector<TrainingRecord> records;
    for (const auto& r : sel.records)
        if (wanted.count(static_cast<int>(std::lround(r.year)))) records.push_back(r);
    if (records.size() < 5)
        throw std::invalid_argument("fit refused: " + std::to_string(records.size()) +
                                    " training points for " + plan.label + " (at least 5 required)");

    HetGpConfig config = hetgp_config(ctx.config.at("hetgp"), temporal);
    // "all": the temporal regression spans every year in the input, so target
    // years outside the training window still get a fitted offset.
    const std::string beta_years = get<std::string>(ctx.config, "beta_years");
    if (beta_years == "all")
        config.fixed_beta = estimate_beta(TrainingSet::build(sel.records, temporal));
    else if (beta_years != "training")
        throw ConfigError("beta_years must be 'all' or 'training', got '" + beta_years + "'");
    const TrainingSet training = TrainingSet::build(std::move(records), temporal);
    const HetGpModel model = fit(training, config, &ctx.diag);

    json j = io::to_json(model);
    j["label"] = plan.label;
    j["mode"] = get<std::string>(ctx.config, "mode");
    j["training_years"] = plan.training_years;
    j["target_years"] = plan.target_years;
    j["interface"] = std::string(to_string(iface));
    const fs::path model_path =
        get_optional<std::string>(ctx.config, "model").value_or((ctx.out / ("model_" + plan.label + ".json")).string());
    ctx.stage(model_path, dump(j));

    ctx.summary = json{{"label", plan.label},
                       {"model", model_path.string()},
                       {"training_years", plan.training_years},
                       {"target_years", plan.target_years},
                       {"n", training.size()},
                       {"beta_years", beta_years},
                       {"center_year", temporal.center_year},
                       {"log_likelihood", model.log_likelihood},
                       {"converged", model.converged},
                       {"outer_iterations", model.outer_iterations},
                       {"lengthscale_f", model.theta_f.lengthscale},
                       {"kappa_f_sq", model.kappa_f_sq}};
}

// --- predict / test shared helpers ----------------------------------------------

struct LoadedModel {
    HetGpModel model;
    std::string label;
    std::vector<int> target_years;
};

LoadedModel load_model(const fs::path& path, Diagnostics* diag) {
    const json j = read_json_file(path);
    LoadedModel m;
    m.model = io::model_from_json(j, diag);
    m.label = j.value("label", path.stem().string());
    if (j.contains("target_years")) m.target_years = j.at("target_years").get<std::vector<int>>();
    if (m.target_years.empty()) {
        std::set<int> ys;
        for (const auto& r : m.model.training.records) ys.insert(static_cast<int>(std::lround(r.year)));
        m.target_years.assign(ys.begin(), ys.end());
    }
    return m;
}

BasisVector target_basis(const HetGpModel& model, const std::vector<int>& years) {
    const std::vector<double> ys(years.begin(), years.end());
    return decade_mean_basis(model.temporal, ys);
}

std::pair<double, double> training_range(const HetGpModel& model) {
    const Eigen::VectorXd lon = model.training.longitudes();
    return {lon.minCoeff(), lon.maxCoeff()};
}

Eigen::Index grid_size(const json& cfg) {
    const int m = get<int>(cfg, "m");
    if (m < 2) throw ConfigError("grid size m must be at least 2");
    return m;
}

void cmd_predict(Context& ctx) {
    const LoadedModel lm = load_model(require_path(ctx.config, "model"), &ctx.diag);
    auto [lo, hi] = training_range(lm.model);
    lo = get_optional<double>(ctx.config, "grid_min").value_or(lo);
    hi = get_optional<double>(ctx.config, "grid_max").value_or(hi);
    if (!(hi > lo)) throw ConfigError("prediction grid needs grid_max > grid_min");
    const std::vector<int> years = get_optional<std::vector<int>>(ctx.config, "target_years").value_or(lm.target_years);
    if (years.empty()) throw ConfigError("target_years must not be empty");

    const Eigen::VectorXd grid = linspace(lo, hi, grid_size(ctx.config));
    const BasisVector basis = target_basis(lm.model, years);
    const PredictiveDistribution latent = predict(lm.model, grid, basis, PredictiveFlavor::Latent, &ctx.diag);
    const PredictiveDistribution noisy = predict(lm.model, grid, basis, PredictiveFlavor::Noisy, &ctx.diag);

    const fs::path path =
        get_optional<std::string>(ctx.config, "output").value_or((ctx.out / ("prediction_" + lm.label + ".csv")).string());
    ctx.stage(path, [&](std::ostream& os) { io::write_prediction_csv(latent, noisy, os); });
    ctx.summary = json{{"model", lm.label},
                       {"prediction", path.string()},
                       {"m", grid.size()},
                       {"grid_min", lo},
                       {"grid_max", hi},
                       {"target_years", years},
                       {"extrapolated", noisy.extrapolated}};
}

// --- test ------------------------------------------------------------------------

void cmd_test(Context& ctx) {
    const int which = get<int>(ctx.config, "case");
    const std::size_t M = get<std::size_t>(ctx.config, "M");
    const double alpha = get<double>(ctx.config, "alpha");
    if (M < 2) throw ConfigError("ensemble size M must be at least 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    const PredictiveFlavor flavor = parse_flavor(get<std::string>(ctx.config, "ensemble_flavor"), which);
    const std::string name = get<std::string>(ctx.config, "name");

    EnvelopeTestResult result;
    json extra;
    if (which == 1) {
        LoadedModel a = load_model(require_path(ctx.config, "model_a"), &ctx.diag);
        LoadedModel b = load_model(require_path(ctx.config, "model_b"), &ctx.diag);
        const std::string null_model = get<std::string>(ctx.config, "null_model");
        bool swap = false;
        if (null_model == "earlier")
            swap = b.target_years.front() < a.target_years.front();
        else if (null_model == "b")
            swap = true;
        else if (null_model != "a")
            throw ConfigError("null_model must be 'earlier', 'a' or 'b', got '" + null_model + "'");
        if (swap) std::swap(a, b);

        const auto [alo, ahi] = training_range(a.model);
        const auto [blo, bhi] = training_range(b.model);
        const double lo = std::max(alo, blo), hi = std::min(ahi, bhi);
        if (!(hi > lo)) throw std::invalid_argument("the two models share no longitude range to compare on");
        const Eigen::VectorXd grid = linspace(lo, hi, grid_size(ctx.config));
        const PredictiveDistribution pa =
            predict(a.model, grid, target_basis(a.model, a.target_years), PredictiveFlavor::Noisy, &ctx.diag);
        const PredictiveDistribution pb =
            predict(b.model, grid, target_basis(b.model, b.target_years), PredictiveFlavor::Noisy, &ctx.diag);
        result = test_case1(a.model, pa, pb, M, alpha, ctx.seed, flavor, &ctx.diag);
        extra = json{{"null_model", a.label}, {"other_model", b.label}, {"t_obs", a.label + " minus " + b.label}};
    } else if (which == 2) {
        const LoadedModel a = load_model(require_path(ctx.config, "model_a"), &ctx.diag);
        const auto year = get_optional<int>(ctx.config, "year");
        if (!year) throw ConfigError("case 2 needs the observed 'year'");
        const BoundaryInterface iface = interface_from(ctx.config, "interface");
        BoundaryPointSet observed;
        observed.year = *year;
        observed.interface = iface;
        for (const auto& s : io::read_points_csv(fs::path(require_path(ctx.config, "points"))))
            if (s.year == *year && s.interface == iface) observed.points.insert(observed.points.end(), s.points.begin(), s.points.end());
        if (observed.points.empty())
            throw io::SchemaError("no " + std::string(to_string(iface)) + " points for year " + std::to_string(*year));
        const BoundaryPointSet sorted = sorted_observations(observed);
        const PredictiveDistribution pred = predict(a.model, observation_grid(sorted), target_basis(a.model, {*year}),
                                                    PredictiveFlavor::Noisy, &ctx.diag);
        result = test_case2(a.model, pred, sorted, M, alpha, ctx.seed, flavor, &ctx.diag);
        extra = json{{"model", a.label},
                     {"year", *year},
                     {"interface", std::string(to_string(iface))},
                     {"observed_points", sorted.points.size()},
                     {"coverage", coverage_proportion(result, sorted, pred)}};
    } else {
        throw ConfigError("case must be 1 or 2");
    }

    json j = io::to_json(result);
    j["case"] = which;
    j["seed"] = ctx.seed;
    j["ensemble_flavor"] = flavor == PredictiveFlavor::Noisy ? "noisy" : "latent";
    for (const auto& [k, v] : extra.items()) j[k] = v;
    ctx.stage(ctx.out / (name + "_result.json"), dump(j));
    ctx.stage(ctx.out / (name + "_trace.csv"), [&](std::ostream& os) { io::write_trace_csv(result, os); });
    if (get<bool>(ctx.config, "svg"))
        ctx.stage(ctx.out / (name + "_trace.svg"), [&](std::ostream& os) { io::write_trace_svg(result, os, name); });

    ctx.summary = extra;
    ctx.summary["p_value"] = result.p_value;
    ctx.summary["rejected"] = result.rejected();
    ctx.summary["r_obs"] = result.r_obs;
    ctx.summary["r_alpha"] = result.r_alpha;
    ctx.summary["exceed_count"] = result.exceed_count();
}

// --- simulation studies -----------------------------------------------------------

StudyOptions study_options(const Context& ctx) {
    StudyOptions o;
    o.x_min = get<double>(ctx.config, "x_min");
    o.x_max = get<double>(ctx.config, "x_max");
    o.threads = ctx.threads;
    if (!(o.x_max > o.x_min)) throw ConfigError("x_max must exceed x_min");
    return o;
}

StudySettings study_settings(std::size_t n, std::size_t n_sim, const json& cfg) {
    StudySettings s;
    s.n_locations = n;
    s.n_sim = n_sim;
    s.ensemble_size = get<std::size_t>(cfg, "M");
    s.alpha = get<double>(cfg, "alpha");
    return s;
}

void cmd_sim_size(Context& ctx) {
    const StudyOptions options = study_options(ctx);
    const auto locations = get<std::vector<std::size_t>>(ctx.config, "locations");
    const auto iterations = get<std::vector<std::size_t>>(ctx.config, "iterations");
    if (locations.empty() || iterations.empty()) throw ConfigError("locations and iterations must not be empty");

    std::vector<StudyReport> reports;
    for (std::size_t n : locations)
        for (std::size_t n_sim : iterations)
            reports.push_back(run_size_study(study_settings(n, n_sim, ctx.config), derive_seed(ctx.seed, n, n_sim), options));

    // Table layout: one row per location count, one column per iteration count,
    // entries in percent.
    std::ostringstream table;
    table << "locations";
    for (std::size_t n_sim : iterations) table << ",N" << n_sim;
    table << '\n';
    json json_reports = json::array();
    std::size_t k = 0;
    for (std::size_t n : locations) {
        table << n;
        for (std::size_t i = 0; i < iterations.size(); ++i, ++k) table << ',' << io::format_double(100.0 * reports[k].rejection_rate);
        table << '\n';
    }
    for (const auto& r : reports) json_reports.push_back(io::to_json(r));
    ctx.stage(ctx.out / "size_study.csv", [&](std::ostream& os) { io::write_study_csv(reports, os, false); });
    ctx.stage(ctx.out / "size_table.csv", table.str());
    ctx.stage(ctx.out / "size_study.json", dump(json_reports));
    for (const auto& r : reports)
        ctx.summary["rejection_rates"]["n" + std::to_string(r.settings.n_locations) + "_N" + std::to_string(r.settings.n_sim)] =
            r.rejection_rate;
}

void cmd_sim_power(Context& ctx) {
    StudyOptions options = study_options(ctx);
    options.perturbed_index = get<Eigen::Index>(ctx.config, "perturbed_index");
    const auto values = get<std::vector<double>>(ctx.config, "perturbations");
    const json& settings = ctx.config.at("settings");
    if (!settings.is_array() || settings.empty()) throw ConfigError("settings must be a non-empty array");

    std::vector<StudyReport> reports;
    for (const auto& s : settings) {
        const std::size_t n = get<std::size_t>(s, "n"), n_sim = get<std::size_t>(s, "N_sim");
        for (auto& r : run_power_study(study_settings(n, n_sim, ctx.config), values, derive_seed(ctx.seed, n, n_sim), options))
            reports.push_back(std::move(r));
    }
    json json_reports = json::array();
    for (const auto& r : reports) {
        json_reports.push_back(io::to_json(r));
        ctx.summary["rejection_rates"]["n" + std::to_string(r.settings.n_locations) + "_N" + std::to_string(r.settings.n_sim)]
            .push_back({{"perturbation", r.perturbation}, {"rate", r.rejection_rate}});
    }
    ctx.stage(ctx.out / "power_study.csv", [&](std::ostream& os) { io::write_study_csv(reports, os, true); });
    ctx.stage(ctx.out / "power_study.json", dump(json_reports));
}

}  // namespace

json default_config(const std::string& subcommand) {
    json cfg = section_defaults(subcommand);
    cfg["seed"] = std::uint64_t{20250101};
    cfg["out"] = "boundshift-out";
    cfg["threads"] = 1;
    return cfg;
}

json resolve_config(const std::string& subcommand, const json& file_config, const json& overrides) {
    json cfg = default_config(subcommand);
    if (!file_config.is_null()) {
        if (!file_config.is_object()) throw ConfigError("the config file must hold a JSON object");
        json globals = json::object();
        for (const char* key : {"seed", "out", "threads"})
            if (file_config.contains(key)) globals[key] = file_config.at(key);
        for (const auto& [key, value] : file_config.items()) {
            const bool known = key == "seed" || key == "out" || key == "threads" ||
                               std::find(subcommands().begin(), subcommands().end(), key) != subcommands().end();
            if (!known) throw ConfigError("unknown top-level configuration key '" + key + "'");
        }
        check_known_keys(globals, cfg, "");
        cfg.merge_patch(globals);
        if (file_config.contains(subcommand)) {
            check_known_keys(file_config.at(subcommand), cfg, subcommand + ".");
            cfg.merge_patch(file_config.at(subcommand));
        }
    }
    if (!overrides.is_null()) {
        check_known_keys(overrides, cfg, "");
        cfg.merge_patch(overrides);
    }
    // merge_patch drops keys set to null; restore them so the echo is complete.
    const json defaults = default_config(subcommand);
    for (const auto& [key, value] : defaults.items())
        if (!cfg.contains(key)) cfg[key] = nullptr;
    return cfg;
}

json run(const std::string& subcommand, const json& config) {
    const auto started = std::chrono::steady_clock::now();
    Context ctx;
    ctx.config = config;
    ctx.out = get<std::string>(config, "out");
    ctx.seed = get<std::uint64_t>(config, "seed");
    const int threads = get<int>(config, "threads");
    if (threads < 1) throw ConfigError("threads must be at least 1");
    ctx.threads = static_cast<unsigned>(threads);

    if (subcommand == "classify") cmd_classify(ctx);
    else if (subcommand == "extract") cmd_extract(ctx);
    else if (subcommand == "fit") cmd_fit(ctx);
    else if (subcommand == "predict") cmd_predict(ctx);
    else if (subcommand == "test") cmd_test(ctx);
    else if (subcommand == "sim-size") cmd_sim_size(ctx);
    else if (subcommand == "sim-power") cmd_sim_power(ctx);
    else throw ConfigError("unknown subcommand '" + subcommand + "'");

    fs::create_directories(ctx.out);
    json outputs = json::array();
    for (const auto& grid : ctx.grids_to_write) {
        const std::string stem = "classes_" + std::to_string(grid.year);
        io::write_class_grid(grid, ctx.out / (stem + ".csv"), ctx.out / (stem + ".json"));
        outputs.push_back((ctx.out / (stem + ".csv")).string());
        outputs.push_back((ctx.out / (stem + ".json")).string());
    }
    for (const auto& [path, text] : ctx.files) {
        write_text(path, text);
        outputs.push_back(path.string());
    }

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json manifest{{"subcommand", subcommand},
                  {"version", version()},
                  {"config", config},
                  {"seed", ctx.seed},
                  {"wall_clock_seconds", seconds},
                  {"outputs", outputs},
                  {"summary", ctx.summary},
                  {"warnings", ctx.diag.warnings()}};
    write_text(ctx.out / ("manifest_" + subcommand + ".json"), dump(manifest));
    return manifest;
}

}  // namespace boundshift::cli
