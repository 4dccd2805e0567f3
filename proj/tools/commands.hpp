#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace boundshift::cli {

using nlohmann::json;

// Invalid or inconsistent run configuration (unknown keys, wrong types,
// missing required paths).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string version();

const std::vector<std::string>& subcommands();

// Built-in defaults for a subcommand, including the global keys seed, out and
// threads.
json default_config(const std::string& subcommand);

// Effective configuration: defaults, then the config file (its global keys and
// the section named after the subcommand), then command-line overrides. Keys
// unknown to the defaults are rejected.
json resolve_config(const std::string& subcommand, const json& file_config, const json& overrides);

// Executes the subcommand with an effective configuration, writes its outputs
// and `manifest_<subcommand>.json` into the output directory, and returns the
// manifest. Throws on I/O, schema or numerical failure, in which case nothing
// is written.
json run(const std::string& subcommand, const json& config);

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInput = 2;      // I/O, schema and configuration errors
inline constexpr int kExitNumerical = 3;  // factorization and other numerical failures

}  // namespace boundshift::cli
