#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "boundshift/diagnostics.hpp"

namespace boundshift {

struct MonthlyClimateRecord {
    int year = 0;
    int month = 1;
    double longitude = 0.0;
    double latitude = 0.0;
    double temperature_k = 0.0;
    double precip_rate = 0.0;  // kg m^-2 s^-1

    void validate() const;
};

struct AnnualClimateCell {
    double longitude = 0.0;
    double latitude = 0.0;
    double t_c = 0.0;    // annual mean temperature, deg C
    double p_mm = 0.0;   // annual total precipitation, mm
    double pw_pct = 0.0; // share of P falling Oct-Mar, percent
    int missing_months = 0;
    bool no_data = false;
};

enum class DryClass : std::uint8_t { Arid = 0, SemiArid = 1, NonArid = 2, NoData = 3 };

std::string_view to_string(DryClass label);

int days_in_month(int year, int month);
bool is_leap_year(int year);

// Cells for `year`; a cell lacking any month is returned with no_data set and
// the number of missing months.
std::vector<AnnualClimateCell> aggregate_annual(const std::vector<MonthlyClimateRecord>& records, int year,
                                                Diagnostics* diag = nullptr);

double patton_threshold(double t_c, double pw_pct);
DryClass ktc_classify(const AnnualClimateCell& cell, Diagnostics* diag = nullptr);

// Regular lon/lat raster. Row 0 is the southernmost row; cell (row, col) is
// centred at (lon0 + col * dlon, lat0 + row * dlat).
struct GridSpec {
    double lon0 = 0.0;
    double lat0 = 0.0;
    double dlon = 1.0;
    double dlat = 1.0;
    int nx = 0;
    int ny = 0;

    std::size_t cells() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    double longitude(int col) const { return lon0 + col * dlon; }
    double latitude(int row) const { return lat0 + row * dlat; }
    // Nearest cell, or nullopt when outside the raster by more than half a cell.
    std::optional<std::pair<int, int>> locate(double lon, double lat) const;
    bool aligned_with(const GridSpec& other) const;
};

struct ClassGrid {
    int year = 0;
    GridSpec spec;
    std::vector<DryClass> labels;  // row-major, ny x nx

    DryClass at(int row, int col) const { return labels[static_cast<std::size_t>(row) * spec.nx + col]; }
    DryClass& at(int row, int col) { return labels[static_cast<std::size_t>(row) * spec.nx + col]; }
    void validate() const;
};

// Infers the raster from the distinct cell coordinates (uniform spacing
// required) and classifies each cell. Absent and no-data cells become NoData.
ClassGrid build_class_grid(const std::vector<AnnualClimateCell>& cells, int year, Diagnostics* diag = nullptr);

}  // namespace boundshift
