#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "boundshift/io.hpp"
#include "boundshift/kernel.hpp"
#include "commands.hpp"

namespace {

using boundshift::cli::json;

enum class Kind { Text, Number, TextList, NumberList, Flag };

// A subcommand flag that overrides one configuration key.
struct Binding {
    std::string flag;
    std::vector<std::string> path;
    Kind kind;
    std::string help;
    std::vector<std::string> values{};
    bool set = false;

    Binding(std::string f, std::vector<std::string> p, Kind k, std::string h)
        : flag(std::move(f)), path(std::move(p)), kind(k), help(std::move(h)) {}
};

std::vector<Binding> bindings_for(const std::string& sub) {
    using K = Kind;
    if (sub == "classify")
        return {{"--input", {"input"}, K::Text, "climate CSV (monthly or annual layout)"},
                {"--years", {"years"}, K::NumberList, "years to classify (default: all)"}};
    if (sub == "extract")
        return {{"--grids", {"grids"}, K::TextList, "class grid JSON sidecars"},
                {"--grid-dir", {"grid_dir"}, K::Text, "directory scanned for classes_*.json"},
                {"--interfaces", {"interfaces"}, K::TextList, "primary and/or secondary"},
                {"--low-ratio", {"canny", "low_ratio"}, K::Number, "hysteresis low threshold / max gradient"},
                {"--high-ratio", {"canny", "high_ratio"}, K::Number, "hysteresis high threshold / max gradient"},
                {"--sigma", {"canny", "sigma"}, K::Number, "Gaussian smoothing sigma"},
                {"--min-latitude", {"filters", "min_latitude"}, K::Number, "drop points south of this latitude"},
                {"--max-longitude", {"filters", "max_longitude"}, K::Number, "drop points east of this longitude"},
                {"--mask", {"filters", "mask"}, K::Text, "0/1 exclusion raster CSV"},
                {"--no-geographic-defaults", {"filters", "geographic_defaults"}, K::Flag,
                 "disable the per-interface default filters"}};
    if (sub == "fit")
        return {{"--points", {"points"}, K::Text, "boundary point or training CSV"},
                {"--interface", {"interface"}, K::Text, "primary or secondary"},
                {"--mode", {"mode"}, K::Text, "year, decade or rolling"},
                {"--years", {"years"}, K::NumberList, "year (year mode) or decade years"},
                {"--target", {"target"}, K::Number, "target year (rolling mode)"},
                {"--window", {"window"}, K::Number, "rolling window length in years"},
                {"--gap", {"gap"}, K::Number, "years skipped before the target"},
                {"--center-year", {"temporal", "center_year"}, K::Number, "centre of the temporal design"},
                {"--beta-years", {"beta_years"}, K::Text, "all (every input year) or training"},
                {"--model", {"model"}, K::Text, "output model JSON path"}};
    if (sub == "predict")
        return {{"--model", {"model"}, K::Text, "model JSON"},
                {"--m", {"m"}, K::Number, "number of grid points"},
                {"--grid-min", {"grid_min"}, K::Number, "grid start longitude"},
                {"--grid-max", {"grid_max"}, K::Number, "grid end longitude"},
                {"--target-years", {"target_years"}, K::NumberList, "years averaged into the target basis"},
                {"--output", {"output"}, K::Text, "prediction CSV path"}};
    if (sub == "test")
        return {{"--case", {"case"}, K::Number, "1 (two models) or 2 (model vs observed points)"},
                {"--model-a", {"model_a"}, K::Text, "first model JSON"},
                {"--model-b", {"model_b"}, K::Text, "second model JSON (case 1)"},
                {"--points", {"points"}, K::Text, "observed boundary points CSV (case 2)"},
                {"--year", {"year"}, K::Number, "observed year (case 2)"},
                {"--interface", {"interface"}, K::Text, "primary or secondary (case 2)"},
                {"--ensemble-size", {"M"}, K::Number, "null ensemble size M"},
                {"--alpha", {"alpha"}, K::Number, "significance level"},
                {"--m", {"m"}, K::Number, "grid points (case 1)"},
                {"--ensemble-flavor", {"ensemble_flavor"}, K::Text, "auto, latent or noisy ensemble draws"},
                {"--null-model", {"null_model"}, K::Text, "earlier, a or b (case 1)"},
                {"--svg", {"svg"}, K::Flag, "also write an SVG trace plot"},
                {"--name", {"name"}, K::Text, "output file prefix"}};
    if (sub == "sim-size")
        return {{"--locations", {"locations"}, K::NumberList, "grid sizes n"},
                {"--iterations", {"iterations"}, K::NumberList, "Monte Carlo iteration counts N_sim"},
                {"--ensemble-size", {"M"}, K::Number, "null ensemble size M"},
                {"--alpha", {"alpha"}, K::Number, "significance level"}};
    if (sub == "sim-power")
        return {{"--perturbations", {"perturbations"}, K::NumberList, "perturbed coefficient values"},
                {"--perturbed-index", {"perturbed_index"}, K::Number, "index of the perturbed coefficient"},
                {"--ensemble-size", {"M"}, K::Number, "null ensemble size M"},
                {"--alpha", {"alpha"}, K::Number, "significance level"}};
    return {};
}

json parse_number(const std::string& text, const std::string& flag) {
    try {
        json v = json::parse(text);
        if (v.is_number()) return v;
    } catch (const json::exception&) {
    }
    throw boundshift::cli::ConfigError("option " + flag + " expects a number, got '" + text + "'");
}

json binding_value(const Binding& b) {
    switch (b.kind) {
        case Kind::Text: return b.values.front();
        case Kind::Number: return parse_number(b.values.front(), b.flag);
        case Kind::TextList: return b.values;
        case Kind::NumberList: {
            json arr = json::array();
            for (const auto& v : b.values) arr.push_back(parse_number(v, b.flag));
            return arr;
        }
        case Kind::Flag: return b.path.back() != "geographic_defaults";
    }
    return nullptr;
}

void assign(json& root, const std::vector<std::string>& path, json value) {
    json* node = &root;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) node = &(*node)[path[i]];
    (*node)[path.back()] = std::move(value);
}

// `--set a.b=VALUE`: VALUE is parsed as JSON when possible, else kept as text.
void apply_set(json& overrides, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
        throw boundshift::cli::ConfigError("--set expects KEY=VALUE, got '" + spec + "'");
    std::vector<std::string> path;
    std::string key = spec.substr(0, eq);
    for (std::size_t start = 0;;) {
        const auto dot = key.find('.', start);
        path.push_back(key.substr(start, dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    const std::string text = spec.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;
    }
    assign(overrides, path, std::move(value));
}

}  // namespace

int main(int argc, char** argv) {
    namespace cli = boundshift::cli;

    CLI::App app{"boundshift: boundary estimation and shift testing for gridded climate classes"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", cli::version());

    std::string config_path, out_dir, seed_text;
    int threads = 0;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--seed", seed_text, "64-bit master seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    std::map<std::string, std::vector<Binding>> bindings;
    std::map<std::string, std::vector<std::string>> sets;
    std::map<std::string, CLI::App*> subs;
    const std::map<std::string, std::string> descriptions{
        {"classify", "aggregate monthly climate and label dry-climate classes per year"},
        {"extract", "extract and filter boundary points from class grids"},
        {"fit", "fit the heteroskedastic GP boundary model"},
        {"predict", "predict a boundary curve on a dense longitude grid"},
        {"test", "global envelope test between two boundaries"},
        {"sim-size", "empirical size study"},
        {"sim-power", "empirical power study"}};
    for (const auto& name : cli::subcommands()) {
        CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
        subs[name] = sub;
        bindings[name] = bindings_for(name);
        for (auto& b : bindings[name]) {
            if (b.kind == Kind::Flag) {
                sub->add_flag_callback(b.flag, [&b] { b.set = true; }, b.help);
            } else {
                auto* opt = sub->add_option(b.flag, b.values, b.help);
                if (b.kind == Kind::TextList || b.kind == Kind::NumberList)
                    opt->delimiter(',')->expected(1, -1);
                else
                    opt->expected(1);
            }
        }
        sub->add_option("--set", sets[name], "override any configuration key, e.g. --set hetgp.max_outer_iterations=30");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? cli::kExitOk : cli::kExitUsage;
    }

    std::string subcommand;
    for (const auto& [name, sub] : subs)
        if (sub->parsed()) subcommand = name;

    try {
        json file_config;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw boundshift::io::IoError("cannot open config " + config_path);
            try {
                file_config = json::parse(in);
            } catch (const json::exception& e) {
                throw boundshift::io::SchemaError(config_path + ": " + e.what());
            }
        }

        json overrides = json::object();
        if (!seed_text.empty()) {
            std::uint64_t seed = 0;
            const auto [ptr, ec] = std::from_chars(seed_text.data(), seed_text.data() + seed_text.size(), seed);
            if (ec != std::errc() || ptr != seed_text.data() + seed_text.size())
                throw cli::ConfigError("--seed expects an unsigned 64-bit integer, got '" + seed_text + "'");
            overrides["seed"] = seed;
        }
        if (!out_dir.empty()) overrides["out"] = out_dir;
        if (threads > 0) overrides["threads"] = threads;
        for (const auto& spec : sets[subcommand]) apply_set(overrides, spec);
        for (const auto& b : bindings[subcommand])
            if (b.set || !b.values.empty()) assign(overrides, b.path, binding_value(b));

        const json config = cli::resolve_config(subcommand, file_config, overrides);
        const json manifest = cli::run(subcommand, config);
        for (const auto& w : manifest.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << '\n';
        std::cout << manifest.at("summary").dump(2) << '\n';
        return cli::kExitOk;
    } catch (const boundshift::FactorizationError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return cli::kExitNumerical;
    } catch (const cli::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return cli::kExitInput;
    } catch (const boundshift::io::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return cli::kExitInput;
    } catch (const boundshift::io::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return cli::kExitInput;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return cli::kExitInput;
    } catch (const std::logic_error& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return cli::kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return cli::kExitNumerical;
    }
}
