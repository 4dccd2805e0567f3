#include "boundshift/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace boundshift::io {

SchemaError::SchemaError(const std::string& what, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, end);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Non-blank lines with their 1-based line numbers.
struct CsvRows {
    std::vector<std::string> header;
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

CsvRows read_rows(std::istream& in, bool has_header = true) {
    CsvRows csv;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        if (has_header && csv.header.empty()) {
            csv.header = std::move(fields);
            continue;
        }
        csv.rows.emplace_back(number, std::move(fields));
    }
    return csv;
}

double parse_double(const std::string& text, std::size_t line, const char* column) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || text.empty())
        throw SchemaError(std::string("column '") + column + "': cannot parse '" + text + "' as a number", line);
    return v;
}

int parse_int(const std::string& text, std::size_t line, const char* column) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw SchemaError(std::string("column '") + column + "': cannot parse '" + text + "' as an integer", line);
    return v;
}

std::string joined(const std::vector<std::string>& fields) {
    std::string s;
    for (std::size_t i = 0; i < fields.size(); ++i) s += (i ? "," : "") + fields[i];
    return s;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void require_width(const std::vector<std::string>& fields, std::size_t width, std::size_t line) {
    if (fields.size() != width)
        throw SchemaError("expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()), line);
}

json vec_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd json_vec(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json bool_json(const std::vector<bool>& v) {
    json a = json::array();
    for (bool b : v) a.push_back(b);
    return a;
}

}  // namespace

// --- climate -----------------------------------------------------------------

std::vector<int> ClimateInput::years() const {
    std::set<int> ys;
    for (const auto& r : monthly) ys.insert(r.year);
    for (const auto& [y, cell] : annual) ys.insert(y);
    return {ys.begin(), ys.end()};
}

ClimateInput read_climate_csv(std::istream& in) {
    static const std::vector<std::string> kMonthly{"year", "month", "longitude", "latitude", "temperature_k",
                                                   "precip_rate_kg_m2_s"};
    static const std::vector<std::string> kAnnual{"year", "longitude", "latitude", "t_c", "p_mm", "pw_pct"};
    const CsvRows csv = read_rows(in);
    if (csv.header.empty()) throw SchemaError("empty climate input");

    ClimateInput input;
    if (csv.header == kMonthly) {
        input.kind = ClimateCsvKind::Monthly;
    } else if (csv.header == kAnnual) {
        input.kind = ClimateCsvKind::Annual;
    } else {
        throw SchemaError("unrecognised climate header '" + joined(csv.header) + "'", 1);
    }
    if (csv.rows.empty()) throw SchemaError("climate input has a header but no data rows");

    for (const auto& [line, f] : csv.rows) {
        require_width(f, 6, line);
        if (input.kind == ClimateCsvKind::Monthly) {
            MonthlyClimateRecord r;
            r.year = parse_int(f[0], line, "year");
            r.month = parse_int(f[1], line, "month");
            r.longitude = parse_double(f[2], line, "longitude");
            r.latitude = parse_double(f[3], line, "latitude");
            r.temperature_k = parse_double(f[4], line, "temperature_k");
            r.precip_rate = parse_double(f[5], line, "precip_rate_kg_m2_s");
            try {
                r.validate();
            } catch (const std::invalid_argument& e) {
                throw SchemaError(e.what(), line);
            }
            input.monthly.push_back(r);
        } else {
            AnnualClimateCell c;
            const int year = parse_int(f[0], line, "year");
            c.longitude = parse_double(f[1], line, "longitude");
            c.latitude = parse_double(f[2], line, "latitude");
            c.t_c = parse_double(f[3], line, "t_c");
            c.p_mm = parse_double(f[4], line, "p_mm");
            c.pw_pct = parse_double(f[5], line, "pw_pct");
            if (!(c.p_mm >= 0.0)) throw SchemaError("p_mm must be non-negative", line);
            if (!(c.pw_pct >= 0.0 && c.pw_pct <= 100.0)) throw SchemaError("pw_pct must lie in [0, 100]", line);
            input.annual.emplace_back(year, c);
        }
    }
    return input;
}

ClimateInput read_climate_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_climate_csv(in);
}

// --- class grids -----------------------------------------------------------------

void write_class_grid(const ClassGrid& grid, const std::filesystem::path& csv_path,
                      const std::filesystem::path& json_path) {
    grid.validate();
    {
        auto out = open_output(csv_path);
        for (int r = 0; r < grid.spec.ny; ++r) {
            for (int c = 0; c < grid.spec.nx; ++c) out << (c ? "," : "") << static_cast<int>(grid.at(r, c));
            out << '\n';
        }
    }
    json j{{"year", grid.year},
           {"lon0", grid.spec.lon0},
           {"lat0", grid.spec.lat0},
           {"dlon", grid.spec.dlon},
           {"dlat", grid.spec.dlat},
           {"nx", grid.spec.nx},
           {"ny", grid.spec.ny},
           {"row_order", "south_to_north"},
           {"codes", {{"0", "arid"}, {"1", "semi-arid"}, {"2", "non-arid"}, {"3", "no-data"}}},
           {"labels_csv", csv_path.filename().string()}};
    auto out = open_output(json_path);
    out << j.dump(2) << '\n';
}

namespace {

std::vector<int> read_int_matrix(const std::filesystem::path& path, int nx, int ny) {
    auto in = open_input(path);
    const CsvRows csv = read_rows(in, false);
    if (csv.rows.size() != static_cast<std::size_t>(ny))
        throw SchemaError(path.string() + ": expected " + std::to_string(ny) + " rows, found " +
                          std::to_string(csv.rows.size()));
    std::vector<int> values;
    values.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    for (const auto& [line, f] : csv.rows) {
        require_width(f, static_cast<std::size_t>(nx), line);
        for (const auto& s : f) values.push_back(parse_int(s, line, "cell"));
    }
    return values;
}

}  // namespace

ClassGrid read_class_grid(const std::filesystem::path& json_path) {
    auto in = open_input(json_path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError(json_path.string() + ": " + e.what());
    }
    ClassGrid grid;
    try {
        grid.year = j.at("year").get<int>();
        grid.spec.lon0 = j.at("lon0").get<double>();
        grid.spec.lat0 = j.at("lat0").get<double>();
        grid.spec.dlon = j.at("dlon").get<double>();
        grid.spec.dlat = j.at("dlat").get<double>();
        grid.spec.nx = j.at("nx").get<int>();
        grid.spec.ny = j.at("ny").get<int>();
    } catch (const json::exception& e) {
        throw SchemaError(json_path.string() + ": " + e.what());
    }
    const auto csv_path = json_path.parent_path() / j.value("labels_csv", json_path.stem().string() + ".csv");
    for (int v : read_int_matrix(csv_path, grid.spec.nx, grid.spec.ny)) {
        if (v < 0 || v > 3) throw SchemaError(csv_path.string() + ": label code " + std::to_string(v) + " outside 0..3");
        grid.labels.push_back(static_cast<DryClass>(v));
    }
    grid.validate();
    return grid;
}

BoolMask read_mask_csv(const std::filesystem::path& path, const GridSpec& spec) {
    BoolMask mask;
    mask.spec = spec;
    for (int v : read_int_matrix(path, spec.nx, spec.ny)) {
        if (v != 0 && v != 1) throw SchemaError(path.string() + ": mask values must be 0 or 1");
        mask.excluded.push_back(static_cast<std::uint8_t>(v));
    }
    return mask;
}

// --- points ------------------------------------------------------------------------

void write_points_csv(const std::vector<BoundaryPointSet>& sets, std::ostream& out) {
    out << "year,interface,longitude,latitude\n";
    for (const auto& s : sets)
        for (const auto& p : s.points)
            out << s.year << ',' << to_string(s.interface) << ',' << format_double(p.longitude) << ','
                << format_double(p.latitude) << '\n';
}

void write_points_csv(const std::vector<BoundaryPointSet>& sets, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_points_csv(sets, out);
}

std::vector<BoundaryPointSet> read_points_csv(std::istream& in) {
    const CsvRows csv = read_rows(in);
    if (csv.header != std::vector<std::string>{"year", "interface", "longitude", "latitude"})
        throw SchemaError("expected header 'year,interface,longitude,latitude'", 1);
    std::map<std::pair<int, BoundaryInterface>, BoundaryPointSet> sets;
    for (const auto& [line, f] : csv.rows) {
        require_width(f, 4, line);
        const int year = parse_int(f[0], line, "year");
        BoundaryInterface iface;
        try {
            iface = parse_interface(f[1]);
        } catch (const std::invalid_argument& e) {
            throw SchemaError(e.what(), line);
        }
        auto& set = sets[{year, iface}];
        set.year = year;
        set.interface = iface;
        set.points.push_back({parse_double(f[2], line, "longitude"), parse_double(f[3], line, "latitude")});
    }
    std::vector<BoundaryPointSet> out;
    for (auto& [key, s] : sets) out.push_back(std::move(s));
    return out;
}

std::vector<BoundaryPointSet> read_points_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_points_csv(in);
}

std::vector<TrainingRecord> read_training_csv(std::istream& in) {
    const CsvRows csv = read_rows(in);
    const bool plain = csv.header == std::vector<std::string>{"year", "longitude", "latitude"};
    const bool points = csv.header == std::vector<std::string>{"year", "interface", "longitude", "latitude"};
    if (!plain && !points) throw SchemaError("expected header 'year,longitude,latitude'", 1);
    std::vector<TrainingRecord> out;
    for (const auto& [line, f] : csv.rows) {
        require_width(f, plain ? 3 : 4, line);
        const std::size_t o = plain ? 0 : 1;
        out.push_back({parse_double(f[0], line, "year"), parse_double(f[1 + o], line, "longitude"),
                       parse_double(f[2 + o], line, "latitude")});
    }
    return out;
}

std::vector<TrainingRecord> read_training_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_training_csv(in);
}

// --- models ------------------------------------------------------------------------

json to_json(const TemporalDesignConfig& config) {
    return json{{"periods", config.periods},
                {"harmonics", config.harmonics},
                {"center_year", config.center_year},
                {"intercept", config.intercept}};
}

TemporalDesignConfig temporal_config_from_json(const json& j, TemporalDesignConfig base) {
    if (j.contains("periods")) base.periods = j.at("periods").get<std::vector<double>>();
    if (j.contains("harmonics")) base.harmonics = j.at("harmonics").get<std::vector<int>>();
    if (j.contains("center_year")) base.center_year = j.at("center_year").get<double>();
    if (j.contains("intercept")) base.intercept = j.at("intercept").get<bool>();
    base.validate();
    return base;
}

json to_json(const HetGpModel& m) {
    json records = json::array();
    for (const auto& r : m.training.records) records.push_back({r.year, r.longitude, r.latitude});
    return json{{"format", "boundshift-hetgp"},
                {"version", 1},
                {"temporal", to_json(m.temporal)},
                {"beta", vec_json(m.beta)},
                {"lengthscale_f", m.theta_f.lengthscale},
                {"kappa_f_sq", m.kappa_f_sq},
                {"lengthscale_g", m.theta_g.lengthscale},
                {"variance_g", m.theta_g.variance},
                {"g_mean", m.g_mean},
                {"lambda", vec_json(m.lambda)},
                {"pilot_z", vec_json(m.pilot_z)},
                {"log_likelihood", m.log_likelihood},
                {"converged", m.converged},
                {"outer_iterations", m.outer_iterations},
                {"warnings", m.warnings},
                {"training", records}};
}

HetGpModel model_from_json(const json& j, Diagnostics* diag) {
    try {
        if (j.value("format", std::string()) != "boundshift-hetgp") throw SchemaError("not a boundshift model file");
        const TemporalDesignConfig temporal = temporal_config_from_json(j.at("temporal"));
        std::vector<TrainingRecord> records;
        for (const auto& r : j.at("training")) records.push_back({r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()});
        const TrainingSet training = TrainingSet::build(std::move(records), temporal);
        const KernelParams theta_g{j.at("variance_g").get<double>(), j.at("lengthscale_g").get<double>(),
                                   KernelFamily::Matern32};
        const Eigen::VectorXd pilot_z = json_vec(j.at("pilot_z"));
        HetGpModel m = assemble_model(training, temporal, json_vec(j.at("beta")), j.at("lengthscale_f").get<double>(),
                                      theta_g, j.at("g_mean").get<double>(), pilot_z, diag);
        m.converged = j.value("converged", true);
        m.outer_iterations = j.value("outer_iterations", 0);
        m.warnings = j.value("warnings", std::vector<std::string>{});
        const double stored = j.at("kappa_f_sq").get<double>();
        if (std::abs(stored - m.kappa_f_sq) > 1e-6 * std::abs(stored))
            warn(diag, "stored process variance " + format_double(stored) + " differs from the recomputed " +
                           format_double(m.kappa_f_sq));
        return m;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("model file: ") + e.what());
    }
}

void write_prediction_csv(const PredictiveDistribution& latent, const PredictiveDistribution& noisy,
                          std::ostream& out) {
    if (latent.grid.size() != noisy.grid.size()) throw std::invalid_argument("latent and noisy grids differ");
    out << "x,mean,var_latent,var_noisy,lower95,upper95\n";
    for (Eigen::Index i = 0; i < noisy.grid.size(); ++i) {
        const double sd = std::sqrt(std::max(noisy.cov(i, i), 0.0));
        out << format_double(noisy.grid[i]) << ',' << format_double(noisy.mean[i]) << ','
            << format_double(latent.cov(i, i)) << ',' << format_double(noisy.cov(i, i)) << ','
            << format_double(noisy.mean[i] - 1.96 * sd) << ',' << format_double(noisy.mean[i] + 1.96 * sd) << '\n';
    }
}

// --- envelope results ------------------------------------------------------------------

json to_json(const EnvelopeTestResult& r) {
    return json{{"p_value", r.p_value},
                {"alpha", r.alpha},
                {"rejected", r.rejected()},
                {"r_obs", r.r_obs},
                {"r_alpha", r.r_alpha},
                {"ensemble_size", r.r_sim.size()},
                {"grid_size", r.grid.size()},
                {"exceed_count", r.exceed_count()},
                {"degenerate_count", std::count(r.degenerate.begin(), r.degenerate.end(), true)},
                {"grid", vec_json(r.grid)},
                {"t_obs", vec_json(r.t_obs)},
                {"mu_en", vec_json(r.mu_en)},
                {"sigma_en", vec_json(r.sigma_en)},
                {"lower", vec_json(r.lower)},
                {"upper", vec_json(r.upper)},
                {"exceed_mask", bool_json(r.exceed_mask)},
                {"degenerate", bool_json(r.degenerate)},
                {"r_sim", r.r_sim}};
}

void write_trace_csv(const EnvelopeTestResult& r, std::ostream& out) {
    out << "x,t_obs,mu_en,lower,upper,exceed\n";
    for (Eigen::Index i = 0; i < r.grid.size(); ++i)
        out << format_double(r.grid[i]) << ',' << format_double(r.t_obs[i]) << ',' << format_double(r.mu_en[i]) << ','
            << format_double(r.lower[i]) << ',' << format_double(r.upper[i]) << ','
            << (r.exceed_mask[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
}

void write_trace_svg(const EnvelopeTestResult& r, std::ostream& out, const std::string& title) {
    constexpr double W = 800, H = 400, pad = 50;
    const double x0 = r.grid.minCoeff(), x1 = r.grid.maxCoeff();
    double y0 = std::min({r.t_obs.minCoeff(), r.lower.minCoeff(), r.mu_en.minCoeff()});
    double y1 = std::max({r.t_obs.maxCoeff(), r.upper.maxCoeff(), r.mu_en.maxCoeff()});
    if (y1 <= y0) y1 = y0 + 1.0;
    const double xs = x1 > x0 ? (W - 2 * pad) / (x1 - x0) : 0.0;
    auto px = [&](double x) { return pad + (x - x0) * xs; };
    auto py = [&](double y) { return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad); };
    auto polyline = [&](const Eigen::VectorXd& v, const char* style) {
        out << "<polyline fill=\"none\" " << style << " points=\"";
        for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(px(r.grid[i])) << ',' << format_double(py(v[i])) << ' ';
        out << "\"/>\n";
    };
    std::string escaped;
    for (char c : title) {
        if (c == '<') escaped += "&lt;";
        else if (c == '>') escaped += "&gt;";
        else if (c == '&') escaped += "&amp;";
        else escaped += c;
    }
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << pad << "\" y=\"25\" font-family=\"sans-serif\" font-size=\"14\">" << escaped
        << " (p = " << format_double(r.p_value) << ")</text>\n"
        << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
        << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad
        << "\" stroke=\"black\"/>\n";
    polyline(r.lower, "stroke=\"#888\"");
    polyline(r.upper, "stroke=\"#888\"");
    polyline(r.mu_en, "stroke=\"#888\" stroke-dasharray=\"4 3\"");
    polyline(r.t_obs, "stroke=\"black\"");
    for (Eigen::Index i = 0; i < r.grid.size(); ++i)
        if (r.exceed_mask[static_cast<std::size_t>(i)])
            out << "<circle cx=\"" << format_double(px(r.grid[i])) << "\" cy=\"" << format_double(py(r.t_obs[i]))
                << "\" r=\"2.5\" fill=\"red\"/>\n";
    out << "</svg>\n";
}

// --- studies -------------------------------------------------------------------------------

void write_study_csv(const std::vector<StudyReport>& reports, std::ostream& out, bool with_perturbation) {
    out << "setting,rejection_rate,n,N_sim,M,alpha" << (with_perturbation ? ",perturbation" : "") << '\n';
    for (const auto& r : reports) {
        const auto& s = r.settings;
        out << 'n' << s.n_locations << "_N" << s.n_sim << ',' << format_double(r.rejection_rate) << ','
            << s.n_locations << ',' << s.n_sim << ',' << s.ensemble_size << ',' << format_double(s.alpha);
        if (with_perturbation) out << ',' << format_double(r.perturbation);
        out << '\n';
    }
}

json to_json(const StudyReport& r) {
    json j{{"n", r.settings.n_locations},
           {"N_sim", r.settings.n_sim},
           {"M", r.settings.ensemble_size},
           {"alpha", r.settings.alpha},
           {"rejection_rate", r.rejection_rate},
           {"p_values", r.p_values}};
    j["perturbation"] = std::isnan(r.perturbation) ? json(nullptr) : json(r.perturbation);
    return j;
}

}  // namespace boundshift::io
