#include "boundshift/climate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace boundshift {

void MonthlyClimateRecord::validate() const {
    if (month < 1 || month > 12) throw std::invalid_argument("month must lie in 1..12, got " + std::to_string(month));
    if (!(temperature_k > 0.0)) throw std::invalid_argument("temperature must be positive Kelvin");
    if (!(precip_rate >= 0.0)) throw std::invalid_argument("precipitation rate must be non-negative");
    if (!std::isfinite(longitude) || !std::isfinite(latitude)) throw std::invalid_argument("coordinates must be finite");
}

std::string_view to_string(DryClass label) {
    switch (label) {
        case DryClass::Arid: return "arid";
        case DryClass::SemiArid: return "semi-arid";
        case DryClass::NonArid: return "non-arid";
        case DryClass::NoData: return "no-data";
    }
    return "no-data";
}

bool is_leap_year(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

int days_in_month(int year, int month) {
    static constexpr std::array<int, 12> kDays{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month < 1 || month > 12) throw std::invalid_argument("month must lie in 1..12");
    return month == 2 && is_leap_year(year) ? 29 : kDays[static_cast<std::size_t>(month - 1)];
}

std::vector<AnnualClimateCell> aggregate_annual(const std::vector<MonthlyClimateRecord>& records, int year,
                                                Diagnostics* diag) {
    struct Accumulator {
        std::array<bool, 12> seen{};
        std::array<double, 12> temperature{};
        std::array<double, 12> depth{};
    };
    std::map<std::pair<double, double>, Accumulator> cells;  // keyed by (latitude, longitude)
    for (const auto& r : records) {
        if (r.year != year) continue;
        r.validate();
        Accumulator& acc = cells[{r.latitude, r.longitude}];
        const auto m = static_cast<std::size_t>(r.month - 1);
        if (acc.seen[m]) {
            std::ostringstream os;
            os << "duplicate record for year " << year << " month " << r.month << " at (" << r.longitude << ", "
               << r.latitude << ")";
            throw std::invalid_argument(os.str());
        }
        acc.seen[m] = true;
        acc.temperature[m] = r.temperature_k;
        acc.depth[m] = r.precip_rate * days_in_month(year, r.month) * 86400.0;
    }

    std::vector<AnnualClimateCell> out;
    out.reserve(cells.size());
    std::size_t gaps = 0, dry = 0;
    for (const auto& [key, acc] : cells) {
        AnnualClimateCell cell;
        cell.latitude = key.first;
        cell.longitude = key.second;
        cell.missing_months = static_cast<int>(std::count(acc.seen.begin(), acc.seen.end(), false));
        if (cell.missing_months > 0) {
            cell.no_data = true;
            ++gaps;
            out.push_back(cell);
            continue;
        }
        double t = 0.0, p = 0.0, pw = 0.0;
        for (std::size_t m = 0; m < 12; ++m) {
            t += acc.temperature[m];
            p += acc.depth[m];
            if (m <= 2 || m >= 9) pw += acc.depth[m];  // Jan-Mar and Oct-Dec
        }
        cell.t_c = t / 12.0 - 273.15;
        cell.p_mm = p;
        if (p > 0.0) {
            cell.pw_pct = 100.0 * pw / p;
        } else {
            cell.pw_pct = 0.0;
            ++dry;
        }
        out.push_back(cell);
    }
    if (gaps > 0)
        warn(diag, std::to_string(gaps) + " cell(s) in " + std::to_string(year) + " lack monthly records; marked no-data");
    if (dry > 0)
        warn(diag, std::to_string(dry) + " cell(s) in " + std::to_string(year) +
                       " have zero annual precipitation; winter share set to 0");
    return out;
}

double patton_threshold(double t_c, double pw_pct) { return 2.3 * t_c - 0.64 * pw_pct + 41.0; }

DryClass ktc_classify(const AnnualClimateCell& cell, Diagnostics* diag) {
    if (cell.no_data) return DryClass::NoData;
    const double r = patton_threshold(cell.t_c, cell.pw_pct);
    if (r <= 0.0) {
        std::ostringstream os;
        os << "non-positive Patton threshold " << r << " at (" << cell.longitude << ", " << cell.latitude
           << "); classified non-arid";
        warn(diag, os.str());
    }
    if (cell.p_mm < r / 2.0) return DryClass::Arid;
    if (cell.p_mm < r) return DryClass::SemiArid;
    return DryClass::NonArid;
}

std::optional<std::pair<int, int>> GridSpec::locate(double lon, double lat) const {
    const double fc = (lon - lon0) / dlon;
    const double fr = (lat - lat0) / dlat;
    if (!std::isfinite(fc) || !std::isfinite(fr)) return std::nullopt;
    const long col = std::lround(fc);
    const long row = std::lround(fr);
    if (col < 0 || col >= nx || row < 0 || row >= ny) return std::nullopt;
    return std::make_pair(static_cast<int>(row), static_cast<int>(col));
}

bool GridSpec::aligned_with(const GridSpec& o) const {
    auto close = [](double a, double b, double scale) { return std::abs(a - b) <= 1e-6 * scale; };
    return nx == o.nx && ny == o.ny && close(dlon, o.dlon, std::abs(dlon)) && close(dlat, o.dlat, std::abs(dlat)) &&
           close(lon0, o.lon0, std::abs(dlon)) && close(lat0, o.lat0, std::abs(dlat));
}

void ClassGrid::validate() const {
    if (spec.nx <= 0 || spec.ny <= 0) throw std::invalid_argument("class grid must have positive dimensions");
    if (!(spec.dlon > 0.0) || !(spec.dlat > 0.0)) throw std::invalid_argument("class grid spacing must be positive");
    if (labels.size() != spec.cells())
        throw std::invalid_argument("class grid has " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(spec.cells()) + " cells");
}

namespace {

// Origin, spacing and count of a set of coordinates that must sit on a
// regular lattice.
void infer_axis(const std::set<double>& values, const char* name, double& origin, double& step, int& count) {
    origin = *values.begin();
    if (values.size() == 1) {
        step = 1.0;
        count = 1;
        return;
    }
    step = std::numeric_limits<double>::infinity();
    for (auto it = std::next(values.begin()); it != values.end(); ++it) step = std::min(step, *it - *std::prev(it));
    for (double v : values) {
        const double k = (v - origin) / step;
        if (std::abs(k - std::round(k)) > 1e-6)
            throw std::invalid_argument(std::string("cell ") + name + " values are not on a regular grid");
    }
    count = static_cast<int>(std::lround((*values.rbegin() - origin) / step)) + 1;
}

}  // namespace

ClassGrid build_class_grid(const std::vector<AnnualClimateCell>& cells, int year, Diagnostics* diag) {
    if (cells.empty()) throw std::invalid_argument("no climate cells for year " + std::to_string(year));
    std::set<double> lons, lats;
    for (const auto& c : cells) {
        lons.insert(c.longitude);
        lats.insert(c.latitude);
    }
    ClassGrid grid;
    grid.year = year;
    infer_axis(lons, "longitude", grid.spec.lon0, grid.spec.dlon, grid.spec.nx);
    infer_axis(lats, "latitude", grid.spec.lat0, grid.spec.dlat, grid.spec.ny);
    grid.labels.assign(grid.spec.cells(), DryClass::NoData);
    for (const auto& c : cells) {
        const auto rc = grid.spec.locate(c.longitude, c.latitude);
        grid.at(rc->first, rc->second) = ktc_classify(c, diag);
    }
    return grid;
}

}  // namespace boundshift
