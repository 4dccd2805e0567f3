#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "boundshift/climate.hpp"
#include "boundshift/hetgp.hpp"
#include "boundshift/kernel.hpp"

namespace testing_support {

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("boundshift_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Dense Cholesky draw from N(0, K) with a small nugget, independent of the
// library sampler.
inline Eigen::VectorXd gp_draw(const boundshift::KernelParams& k, const Eigen::VectorXd& xs, std::mt19937_64& rng) {
    const Eigen::Index n = xs.size();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) K(i, j) = boundshift::kernel_eval(k, std::abs(xs[i] - xs[j]));
    K.diagonal().array() += 1e-9 * k.variance;
    const Eigen::MatrixXd L = K.llt().matrixL();
    std::normal_distribution<double> N(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = N(rng);
    return L * z;
}

inline Eigen::VectorXd uniform_points(Eigen::Index n, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(lo, hi);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = U(rng);
    return x;
}

// Single-year training set with latitudes y = offset + f(x) + noise(x).
inline boundshift::TrainingSet single_year_set(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double year,
                                               const boundshift::TemporalDesignConfig& cfg) {
    std::vector<boundshift::TrainingRecord> recs;
    for (Eigen::Index i = 0; i < x.size(); ++i) recs.push_back({year, x[i], y[i]});
    return boundshift::TrainingSet::build(recs, cfg);
}

inline boundshift::ClassGrid make_grid(int ny, int nx, const std::function<boundshift::DryClass(int, int)>& label,
                                       double lon0 = 0.0, double lat0 = 0.0, double step = 1.0, int year = 2000) {
    boundshift::ClassGrid g;
    g.year = year;
    g.spec = {lon0, lat0, step, step, nx, ny};
    g.labels.resize(g.spec.cells());
    for (int r = 0; r < ny; ++r)
        for (int c = 0; c < nx; ++c) g.at(r, c) = label(r, c);
    return g;
}

}  // namespace testing_support
