#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace boundshift {

/// Centered Fourier design for low-frequency temporal structure.
///
/// Basis entries are ordered period-major, harmonic-minor, sin before cos:
/// for periods {P0, P1, ...} and harmonics {1, 2} the vector reads
/// sin(P0,1), cos(P0,1), sin(P0,2), cos(P0,2), sin(P1,1), ...
/// Stored regression coefficients depend on this order, so it is part of the
/// model file format.
struct TemporalDesignConfig {
    std::vector<double> periods{3.0, 6.0, 9.0, 12.0, 15.0, 18.0};
    std::vector<int> harmonics{1, 2};
    double center_year = 1974.5;
    // Appends a constant column so the regression carries the overall boundary
    // level; without it the harmonics alone must represent that level.
    bool intercept = false;

    /// Throws std::invalid_argument when periods are non-positive or repeated,
    /// harmonics non-positive, or either list is empty.
    void validate() const;
    std::size_t dimension() const { return 2 * periods.size() * harmonics.size() + (intercept ? 1 : 0); }

    /// Mean of the supplied study years, used as the default center.
    static double mean_year(std::span<const double> years);
};

using BasisVector = Eigen::VectorXd;

BasisVector basis_at_year(const TemporalDesignConfig& config, double year);

/// Elementwise mean of basis_at_year over `years`; a decade-level covariate.
BasisVector decade_mean_basis(const TemporalDesignConfig& config, std::span<const double> years);

}  // namespace boundshift
