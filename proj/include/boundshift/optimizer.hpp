#pragma once

#include <functional>

#include <Eigen/Dense>

namespace boundshift {

// Objective returning f(x) and writing the gradient into `grad`. A non-finite
// return value marks x as infeasible; the line search backs off from it.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BoxBounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct QuasiNewtonOptions {
    int max_iterations = 200;
    int memory = 6;
    double projected_gradient_tol = 1e-6;
    double relative_function_tol = 1e-12;
    int max_line_search_steps = 40;
    // Cap on the first trial step (infinity norm), in units of x.
    double max_step = 1.0;
};

struct QuasiNewtonResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

// Limited-memory BFGS on a box: projected gradient, two-loop recursion over
// the free variables, and a backtracking Armijo search along the projected
// path. Minimizes `objective` starting from the projection of `start`.
QuasiNewtonResult minimize_bounded(const Objective& objective, const Eigen::VectorXd& start,
                                   const BoxBounds& bounds, const QuasiNewtonOptions& options = {});

// Central-difference gradient, used by tests and as a fallback.
Eigen::VectorXd central_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                            const Eigen::VectorXd& x, double step);

}  // namespace boundshift
