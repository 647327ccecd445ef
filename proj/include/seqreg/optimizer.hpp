#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace seqreg::opt {

enum class StopReason { GradientTol, StepTol, MaxIter, LineSearchFail };

std::string_view to_string(StopReason r);

struct OptimizerReport {
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    double gradient_norm = 0.0;
    StopReason stop_reason = StopReason::MaxIter;
    std::vector<double> trace; ///< objective after each accepted iteration, trace[0] = initial
};

// ---------------------------------------------------------------------------------------------
// Gauss-Newton with Levenberg damping

struct GaussNewtonConfig {
    std::size_t max_iter = 50;
    double grad_tol = 1e-10;
    double step_tol = 1e-10;
    /// Gradient tolerance relative to the initial gradient norm (0 disables).
    double relative_grad_tol = 0.0;
    double lambda_up = 10.0;   ///< damping growth after a rejected step
    double lambda_down = 1.0 / 3.0; ///< smallest shrink factor after an accepted step (gain-ratio rule)
    std::size_t max_damping_steps = 30;
};

/// Objective, gradient and positive semi-definite curvature model (row-major n x n).
struct GaussNewtonModel {
    double objective = 0.0;
    std::vector<double> gradient;
    std::vector<double> hessian;
};

using GaussNewtonFn = std::function<GaussNewtonModel(std::span<const double>)>;

struct Residuals {
    std::vector<double> r;
    std::vector<double> jacobian; ///< row-major, r.size() x n
};

using ResidualFn = std::function<Residuals(std::span<const double>)>;

struct GaussNewtonResult {
    std::vector<double> x;
    OptimizerReport report;
};

/// Minimises a general objective using the supplied curvature model: steps solve
/// (H + lambda I) d = -g, lambda starts at 0 and grows by lambda_up whenever a step fails to
/// decrease the objective. After an accepted step lambda is rescaled by the gain ratio rho of
/// actual to predicted decrease, max(lambda_down, 1 - (2 rho - 1)^3).
GaussNewtonResult gauss_newton(const GaussNewtonFn &fn, std::vector<double> x0, const GaussNewtonConfig &cfg);

/// Least squares 1/2 |r(x)|^2 with H = J^T J and g = J^T r.
GaussNewtonResult gauss_newton(const ResidualFn &fn, std::vector<double> x0, const GaussNewtonConfig &cfg);

// ---------------------------------------------------------------------------------------------
// L-BFGS with a strong Wolfe line search

struct LbfgsConfig {
    std::size_t memory = 10;
    std::size_t max_iter = 100;
    double grad_tol = 1e-8;
    double relative_grad_tol = 0.0;
    double step_tol = 0.0;
    double c1 = 1e-4;
    double c2 = 0.9;
    std::size_t max_line_search = 20;
};

/// Writes the gradient into the second argument and returns the objective.
using ObjectiveFn = std::function<double(std::span<const double>, std::span<double>)>;

struct LbfgsResult {
    std::vector<double> x;
    OptimizerReport report;
};

LbfgsResult lbfgs(const ObjectiveFn &fn, std::vector<double> x0, const LbfgsConfig &cfg);

} // namespace seqreg::opt
