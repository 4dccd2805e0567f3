#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "boundshift/boundary_points.hpp"
#include "boundshift/canny.hpp"
#include "boundshift/climate.hpp"
#include "boundshift/envelope.hpp"
#include "boundshift/hetgp.hpp"
#include "boundshift/simulate.hpp"

namespace boundshift::io {

using nlohmann::json;

// Malformed input, with the 1-based line number when known (0 otherwise).
class SchemaError : public std::runtime_error {
public:
    SchemaError(const std::string& what, std::size_t line = 0);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// A file could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- climate inputs --------------------------------------------------------

enum class ClimateCsvKind { Monthly, Annual };

struct ClimateInput {
    ClimateCsvKind kind = ClimateCsvKind::Monthly;
    std::vector<MonthlyClimateRecord> monthly;
    // Pre-aggregated rows keyed by year.
    std::vector<std::pair<int, AnnualClimateCell>> annual;

    std::vector<int> years() const;
};

// Accepts `year,month,longitude,latitude,temperature_k,precip_rate_kg_m2_s` or
// `year,longitude,latitude,t_c,p_mm,pw_pct`.
ClimateInput read_climate_csv(std::istream& in);
ClimateInput read_climate_csv(const std::filesystem::path& path);

// --- class grids -----------------------------------------------------------

// Label matrix as CSV (row 0 first, integer codes 0..3) plus a JSON sidecar
// holding the grid spec and year.
void write_class_grid(const ClassGrid& grid, const std::filesystem::path& csv_path,
                      const std::filesystem::path& json_path);
ClassGrid read_class_grid(const std::filesystem::path& json_path);

// Boolean exclusion raster: CSV of 0/1 in class-grid layout, aligned to `spec`.
BoolMask read_mask_csv(const std::filesystem::path& path, const GridSpec& spec);

// --- boundary points and training data -------------------------------------

void write_points_csv(const std::vector<BoundaryPointSet>& sets, std::ostream& out);
void write_points_csv(const std::vector<BoundaryPointSet>& sets, const std::filesystem::path& path);
// Reads `year,interface,longitude,latitude`.
std::vector<BoundaryPointSet> read_points_csv(std::istream& in);
std::vector<BoundaryPointSet> read_points_csv(const std::filesystem::path& path);

// Reads `year,longitude,latitude` or the boundary-point layout (all interfaces).
std::vector<TrainingRecord> read_training_csv(std::istream& in);
std::vector<TrainingRecord> read_training_csv(const std::filesystem::path& path);

// --- models and results ----------------------------------------------------

json to_json(const TemporalDesignConfig& config);
TemporalDesignConfig temporal_config_from_json(const json& j, TemporalDesignConfig base = {});

json to_json(const HetGpModel& model);
// Restores the stored fields and recomputes the factorization.
HetGpModel model_from_json(const json& j, Diagnostics* diag = nullptr);

// `x,mean,var_latent,var_noisy,lower95,upper95`
void write_prediction_csv(const PredictiveDistribution& latent, const PredictiveDistribution& noisy,
                          std::ostream& out);

json to_json(const EnvelopeTestResult& result);
// `x,t_obs,mu_en,lower,upper,exceed`
void write_trace_csv(const EnvelopeTestResult& result, std::ostream& out);
// Self-contained SVG of T_obs, mu_en and the envelope.
void write_trace_svg(const EnvelopeTestResult& result, std::ostream& out, const std::string& title);

// `setting,rejection_rate,n,N_sim,M,alpha` (power reports append `perturbation`)
void write_study_csv(const std::vector<StudyReport>& reports, std::ostream& out, bool with_perturbation);
json to_json(const StudyReport& report);

// Shortest round-trip decimal form, locale independent.
std::string format_double(double value);

}  // namespace boundshift::io
