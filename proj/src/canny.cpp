#include "boundshift/canny.hpp"

#include <cmath>
#include <deque>
#include <numbers>
#include <stdexcept>

namespace boundshift {

namespace {

using EdgeMask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

Eigen::Index clamp_index(Eigen::Index i, Eigen::Index n) { return std::clamp<Eigen::Index>(i, 0, n - 1); }

Eigen::Matrix<double, 5, 1> gaussian_taps(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian sigma must be positive");
    Eigen::Matrix<double, 5, 1> g;
    for (int k = -2; k <= 2; ++k) g[k + 2] = std::exp(-(k * k) / (2.0 * sigma * sigma));
    return g / g.sum();
}

std::pair<DryClass, DryClass> pair_classes(BoundaryInterface iface) {
    return iface == BoundaryInterface::Primary ? std::make_pair(DryClass::Arid, DryClass::SemiArid)
                                               : std::make_pair(DryClass::SemiArid, DryClass::NonArid);
}

}  // namespace

Eigen::Matrix<double, 5, 5> gaussian_kernel_5x5(double sigma) {
    const auto g = gaussian_taps(sigma);
    return g * g.transpose();
}

Eigen::MatrixXd gaussian_smooth(const Eigen::MatrixXd& image, double sigma) {
    const auto g = gaussian_taps(sigma);
    const Eigen::Index rows = image.rows(), cols = image.cols();
    Eigen::MatrixXd tmp(rows, cols), out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            double s = 0.0;
            for (int k = -2; k <= 2; ++k) s += g[k + 2] * image(r, clamp_index(c + k, cols));
            tmp(r, c) = s;
        }
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            double s = 0.0;
            for (int k = -2; k <= 2; ++k) s += g[k + 2] * tmp(clamp_index(r + k, rows), c);
            out(r, c) = s;
        }
    return out;
}

GradientField sobel(const Eigen::MatrixXd& image) {
    static const double kx[3][3] = {{1, 0, -1}, {2, 0, -2}, {1, 0, -1}};
    static const double ky[3][3] = {{1, 2, 1}, {0, 0, 0}, {-1, -2, -1}};
    const Eigen::Index rows = image.rows(), cols = image.cols();
    GradientField f{Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, cols)};
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            double gx = 0.0, gy = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double v = image(clamp_index(r + i - 1, rows), clamp_index(c + j - 1, cols));
                    gx += kx[i][j] * v;
                    gy += ky[i][j] * v;
                }
            f.gx(r, c) = gx;
            f.gy(r, c) = gy;
            f.magnitude(r, c) = std::sqrt(gx * gx + gy * gy);
        }
    return f;
}

int orientation_bin(double gx, double gy) {
    double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
    if (deg < 0.0) deg += 180.0;
    if (deg >= 180.0) deg -= 180.0;
    if (deg < 22.5 || deg >= 157.5) return 0;
    if (deg < 67.5) return 45;
    if (deg < 112.5) return 90;
    return 135;
}

Eigen::MatrixXd non_maximum_suppression(const GradientField& field) {
    const Eigen::MatrixXd& m = field.magnitude;
    const Eigen::Index rows = m.rows(), cols = m.cols();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index r = 1; r + 1 < rows; ++r)
        for (Eigen::Index c = 1; c + 1 < cols; ++c) {
            const double v = m(r, c);
            if (v <= 0.0) continue;
            // Neighbours along the gradient: "behind" (before) and "ahead" (after).
            double before = 0.0, after = 0.0;
            switch (orientation_bin(field.gx(r, c), field.gy(r, c))) {
                case 0: before = m(r, c - 1); after = m(r, c + 1); break;
                case 45: before = m(r - 1, c - 1); after = m(r + 1, c + 1); break;
                case 90: before = m(r - 1, c); after = m(r + 1, c); break;
                default: before = m(r + 1, c - 1); after = m(r - 1, c + 1); break;
            }
            // Plateaus of two equal maxima keep only the first pixel.
            if (v > before && v >= after) out(r, c) = v;
        }
    return out;
}

EdgeMask hysteresis(const Eigen::MatrixXd& suppressed, double low, double high) {
    const Eigen::Index rows = suppressed.rows(), cols = suppressed.cols();
    EdgeMask edges = EdgeMask::Zero(rows, cols);
    std::deque<std::pair<Eigen::Index, Eigen::Index>> queue;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            if (suppressed(r, c) > 0.0 && suppressed(r, c) >= high) {
                edges(r, c) = 1;
                queue.emplace_back(r, c);
            }
    while (!queue.empty()) {
        const auto [r, c] = queue.front();
        queue.pop_front();
        for (Eigen::Index dr = -1; dr <= 1; ++dr)
            for (Eigen::Index dc = -1; dc <= 1; ++dc) {
                const Eigen::Index rr = r + dr, cc = c + dc;
                if (rr < 0 || rr >= rows || cc < 0 || cc >= cols || edges(rr, cc)) continue;
                const double v = suppressed(rr, cc);
                if (v > 0.0 && v >= low) {
                    edges(rr, cc) = 1;
                    queue.emplace_back(rr, cc);
                }
            }
    }
    return edges;
}

EdgeMask detect_edges(const Eigen::MatrixXd& image, const CannyOptions& options) {
    if (!(options.low_ratio >= 0.0 && options.low_ratio <= options.high_ratio && options.high_ratio <= 1.0))
        throw std::invalid_argument("hysteresis ratios must satisfy 0 <= low <= high <= 1");
    const GradientField field = sobel(gaussian_smooth(image, options.gaussian_sigma));
    const double gmax = field.magnitude.maxCoeff();
    if (!(gmax > 0.0)) return EdgeMask::Zero(image.rows(), image.cols());
    return hysteresis(non_maximum_suppression(field), options.low_ratio * gmax, options.high_ratio * gmax);
}

BoundaryPointSet canny_extract(const ClassGrid& grid, BoundaryInterface iface, const CannyOptions& options,
                               Diagnostics* diag) {
    grid.validate();
    const int ny = grid.spec.ny, nx = grid.spec.nx;
    if (ny < 5 || nx < 5) throw std::invalid_argument("edge extraction needs a raster of at least 5x5 cells");
    const auto [drier, wetter] = pair_classes(iface);

    // Centred encoding of drier = 1, wetter = 0, others = 0.5; gradients are
    // unchanged by the shift and swapping the pair only flips their sign.
    Eigen::MatrixXd image(ny, nx);
    for (int r = 0; r < ny; ++r)
        for (int c = 0; c < nx; ++c) {
            const DryClass v = grid.at(r, c);
            image(r, c) = v == drier ? 0.5 : (v == wetter ? -0.5 : 0.0);
        }
    const EdgeMask edges = detect_edges(image, options);

    BoundaryPointSet out;
    out.year = grid.year;
    out.interface = iface;
    for (int r = 0; r < ny; ++r)
        for (int c = 0; c < nx; ++c) {
            if (!edges(r, c)) continue;
            bool has_dry = false, has_wet = false;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= ny || cc < 0 || cc >= nx) continue;
                    has_dry |= grid.at(rr, cc) == drier;
                    has_wet |= grid.at(rr, cc) == wetter;
                }
            if (has_dry && has_wet) out.points.push_back({grid.spec.longitude(c), grid.spec.latitude(r)});
        }
    out.normalize();
    if (out.points.empty())
        warn(diag, "no " + std::string(to_string(iface)) + " boundary points found for " + std::to_string(grid.year));
    return out;
}

PointFilters PointFilters::defaults_for(BoundaryInterface iface) {
    PointFilters f;
    if (iface == BoundaryInterface::Primary)
        f.min_latitude = 9.0;
    else
        f.max_longitude = 30.0;
    return f;
}

BoundaryPointSet filter_points(const BoundaryPointSet& points, const PointFilters& filters) {
    BoundaryPointSet out;
    out.year = points.year;
    out.interface = points.interface;
    for (const auto& p : points.points) {
        if (filters.exclusion) {
            const auto rc = filters.exclusion->spec.locate(p.longitude, p.latitude);
            if (rc && filters.exclusion->excluded[static_cast<std::size_t>(rc->first) * filters.exclusion->spec.nx +
                                                  static_cast<std::size_t>(rc->second)])
                continue;
        }
        if (filters.min_latitude && p.latitude < *filters.min_latitude) continue;
        if (filters.max_longitude && p.longitude > *filters.max_longitude) continue;
        out.points.push_back(p);
    }
    return out;
}

}  // namespace boundshift
