#include "boundshift/optimizer.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace boundshift {

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const BoxBounds& b) {
    return x.cwiseMax(b.lower).cwiseMin(b.upper);
}

// Components pinned at a bound with the gradient pushing outward.
std::vector<bool> active_set(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const BoxBounds& b) {
    std::vector<bool> active(static_cast<std::size_t>(x.size()), false);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double tol = 1e-12 * std::max(1.0, std::abs(x[i]));
        if ((x[i] <= b.lower[i] + tol && g[i] > 0.0) || (x[i] >= b.upper[i] - tol && g[i] < 0.0))
            active[static_cast<std::size_t>(i)] = true;
    }
    return active;
}

void mask(Eigen::VectorXd& v, const std::vector<bool>& active) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (active[static_cast<std::size_t>(i)]) v[i] = 0.0;
}

struct Pair {
    Eigen::VectorXd s;
    Eigen::VectorXd y;
    double rho;
};

Eigen::VectorXd two_loop(const std::deque<Pair>& memory, Eigen::VectorXd q, const std::vector<bool>& active) {
    mask(q, active);
    std::vector<double> a(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
        a[k] = memory[k].rho * memory[k].s.dot(q);
        q -= a[k] * memory[k].y;
    }
    if (!memory.empty()) {
        const auto& last = memory.back();
        q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
        const double b = memory[k].rho * memory[k].y.dot(q);
        q += (a[k] - b) * memory[k].s;
    }
    mask(q, active);
    return q;
}

}  // namespace

Eigen::VectorXd central_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                            const Eigen::VectorXd& x, double step) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        g[i] = (f(xp) - f(xm)) / (2.0 * step);
    }
    return g;
}

QuasiNewtonResult minimize_bounded(const Objective& objective, const Eigen::VectorXd& start,
                                   const BoxBounds& bounds, const QuasiNewtonOptions& options) {
    if (bounds.lower.size() != start.size() || bounds.upper.size() != start.size())
        throw std::invalid_argument("bounds dimension does not match the start point");
    if ((bounds.lower.array() > bounds.upper.array()).any())
        throw std::invalid_argument("lower bound exceeds upper bound");

    QuasiNewtonResult result;
    Eigen::VectorXd x = project(start, bounds);
    Eigen::VectorXd g(x.size());
    double f = objective(x, g);
    result.evaluations = 1;
    result.x = x;
    result.value = f;
    if (!std::isfinite(f) || !g.allFinite()) return result;

    std::deque<Pair> memory;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        result.iterations = iter + 1;
        const Eigen::VectorXd pg = project(x - g, bounds) - x;
        if (pg.lpNorm<Eigen::Infinity>() < options.projected_gradient_tol) {
            result.converged = true;
            break;
        }

        const auto active = active_set(x, g, bounds);
        Eigen::VectorXd d = -two_loop(memory, g, active);
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            memory.clear();
            d = -g;
            mask(d, active);
            slope = g.dot(d);
            if (!(slope < 0.0)) {
                result.converged = true;
                break;
            }
        }

        double t = 1.0;
        const double dnorm = d.lpNorm<Eigen::Infinity>();
        const double cap = memory.empty() ? options.max_step : 10.0 * options.max_step;
        if (dnorm * t > cap) t = cap / dnorm;

        bool accepted = false;
        Eigen::VectorXd xn, gn(x.size());
        double fn = f;
        for (int ls = 0; ls < options.max_line_search_steps; ++ls) {
            xn = project(x + t * d, bounds);
            fn = objective(xn, gn);
            ++result.evaluations;
            if (std::isfinite(fn) && gn.allFinite() && fn <= f + 1e-4 * g.dot(xn - x)) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (!memory.empty()) {
                memory.clear();
                continue;
            }
            // No decrease along steepest descent at any tried step.
            result.converged = true;
            break;
        }

        Eigen::VectorXd s = xn - x;
        Eigen::VectorXd y = gn - g;
        const double sy = s.dot(y);
        if (sy > 1e-10 * y.squaredNorm() && sy > 0.0) {
            memory.push_back(Pair{s, y, 1.0 / sy});
            if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
        }

        const double change = std::abs(f - fn);
        x = xn;
        g = gn;
        f = fn;
        if (change <= options.relative_function_tol * std::max({std::abs(f), std::abs(fn), 1.0})) {
            result.converged = true;
            break;
        }
    }
    result.x = x;
    result.value = f;
    return result;
}

}  // namespace boundshift
