#include "boundshift/temporal_basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace boundshift {

void TemporalDesignConfig::validate() const {
    if (periods.empty() || harmonics.empty())
        throw std::invalid_argument("temporal design needs at least one period and one harmonic");
    for (std::size_t i = 0; i < periods.size(); ++i) {
        if (!(periods[i] > 0.0) || !std::isfinite(periods[i]))
            throw std::invalid_argument("temporal period must be positive, got " + std::to_string(periods[i]));
        for (std::size_t k = 0; k < i; ++k)
            if (periods[k] == periods[i])
                throw std::invalid_argument("temporal periods must be distinct");
    }
    for (int h : harmonics)
        if (h <= 0) throw std::invalid_argument("harmonics must be positive integers");
    if (!std::isfinite(center_year)) throw std::invalid_argument("center_year must be finite");
}

double TemporalDesignConfig::mean_year(std::span<const double> years) {
    if (years.empty()) throw std::invalid_argument("mean_year of an empty year list");
    double sum = 0.0;
    for (double y : years) sum += y;
    return sum / static_cast<double>(years.size());
}

BasisVector basis_at_year(const TemporalDesignConfig& config, double year) {
    config.validate();
    BasisVector r(static_cast<Eigen::Index>(config.dimension()));
    const double centred = year - config.center_year;
    Eigen::Index k = 0;
    for (double period : config.periods) {
        for (int j : config.harmonics) {
            const double arg = 2.0 * std::numbers::pi * j * centred / period;
            r[k++] = std::sin(arg);
            r[k++] = std::cos(arg);
        }
    }
    if (config.intercept) r[k] = 1.0;
    return r;
}

BasisVector decade_mean_basis(const TemporalDesignConfig& config, std::span<const double> years) {
    if (years.empty()) throw std::invalid_argument("decade_mean_basis needs at least one year");
    BasisVector sum = basis_at_year(config, years.front());
    for (std::size_t i = 1; i < years.size(); ++i) sum += basis_at_year(config, years[i]);
    return sum / static_cast<double>(years.size());
}

}  // namespace boundshift
