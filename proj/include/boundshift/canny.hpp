#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "boundshift/boundary_points.hpp"
#include "boundshift/climate.hpp"
#include "boundshift/diagnostics.hpp"

namespace boundshift {

struct CannyOptions {
    double low_ratio = 0.1;
    double high_ratio = 0.3;
    double gaussian_sigma = 1.0;
};

struct GradientField {
    Eigen::MatrixXd magnitude;
    Eigen::MatrixXd gx;
    Eigen::MatrixXd gy;
};

// Normalized 5x5 Gaussian kernel (separable taps at offsets -2..2).
Eigen::Matrix<double, 5, 5> gaussian_kernel_5x5(double sigma);
Eigen::MatrixXd gaussian_smooth(const Eigen::MatrixXd& image, double sigma);
// Sobel responses. Gx = [[1,0,-1],[2,0,-2],[1,0,-1]], Gy = [[1,2,1],[0,0,0],[-1,-2,-1]]
// applied as correlations; rows are image rows. Borders replicate.
GradientField sobel(const Eigen::MatrixXd& image);
// Gradient direction bin in {0, 45, 90, 135} degrees from atan2(gy, gx).
int orientation_bin(double gx, double gy);
Eigen::MatrixXd non_maximum_suppression(const GradientField& field);
// 8-connected hysteresis; returns a 0/1 edge mask.
Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> hysteresis(const Eigen::MatrixXd& suppressed,
                                                                        double low, double high);

// Full edge detector on a real-valued image; returns the 0/1 edge mask.
Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> detect_edges(const Eigen::MatrixXd& image,
                                                                          const CannyOptions& options);

// Boundary points between the two classes of `iface`. The pair is binarized
// (drier class 1, wetter class 0) and every other label set to 0.5, so edges
// toward masked cells are weaker; an edge pixel is kept only when its 3x3
// neighbourhood contains both classes of the pair.
BoundaryPointSet canny_extract(const ClassGrid& grid, BoundaryInterface iface, const CannyOptions& options = {},
                               Diagnostics* diag = nullptr);

struct BoolMask {
    GridSpec spec;
    std::vector<std::uint8_t> excluded;  // row-major, 1 = drop points in this cell
};

struct PointFilters {
    std::optional<BoolMask> exclusion;
    std::optional<double> min_latitude;   // keep latitude >= value
    std::optional<double> max_longitude;  // keep longitude <= value

    // 9 N minimum latitude for Primary, 30 E maximum longitude for Secondary.
    static PointFilters defaults_for(BoundaryInterface iface);
};

BoundaryPointSet filter_points(const BoundaryPointSet& points, const PointFilters& filters);

}  // namespace boundshift
