#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "seqreg/error.hpp"
#include "seqreg/optimizer.hpp"

using namespace seqreg;
using namespace seqreg::opt;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g) {
    const double a = x[1] - x[0] * x[0], b = 1.0 - x[0];
    g[0] = -400.0 * x[0] * a - 2.0 * b;
    g[1] = 200.0 * a;
    return 100.0 * a * a + b * b;
}

Residuals rosenbrock_residuals(std::span<const double> x) {
    return {{10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]}, {-20.0 * x[0], 10.0, -1.0, 0.0}};
}

ObjectiveFn diagonal_quadratic(std::vector<double> d) {
    return [d](std::span<const double> x, std::span<double> g) {
        double f = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            g[i] = d[i] * x[i];
            f += 0.5 * d[i] * x[i] * x[i];
        }
        return f;
    };
}

bool nonincreasing(const std::vector<double> &t) {
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] > t[i - 1]) return false;
    return true;
}

} // namespace

TEST_CASE("gauss-newton solves square linear least squares in one iteration") {
    const std::vector<double> a{4, 1, 0, 1, 3, -1, 0, 2, 5}, b{1, -2, 3};
    const ResidualFn fn = [&](std::span<const double> x) {
        Residuals r{std::vector<double>(3), a};
        for (int i = 0; i < 3; ++i) r.r[i] = a[3 * i] * x[0] + a[3 * i + 1] * x[1] + a[3 * i + 2] * x[2] - b[i];
        return r;
    };
    const auto res = gauss_newton(fn, {0, 0, 0}, GaussNewtonConfig{});
    CHECK(res.report.iterations <= 2);
    CHECK(res.report.trace.at(1) <= 1e-20);
    const auto r = fn(res.x).r;
    for (double v : r) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("gauss-newton on the scalar residual r(x) = x") {
    const ResidualFn fn = [](std::span<const double> x) { return Residuals{{x[0]}, {1.0}}; };
    const auto res = gauss_newton(fn, {5.0}, GaussNewtonConfig{});
    CHECK(std::abs(res.x[0]) < 1e-12);
    CHECK(res.report.initial_objective == 12.5);
    CHECK(res.report.stop_reason != StopReason::MaxIter);
}

TEST_CASE("gauss-newton reaches the Rosenbrock minimum") {
    GaussNewtonConfig cfg;
    cfg.max_iter = 200;
    const auto res = gauss_newton(rosenbrock_residuals, {-1.2, 1.0}, cfg);
    CHECK(std::abs(res.x[0] - 1.0) < 1e-6);
    CHECK(std::abs(res.x[1] - 1.0) < 1e-6);
    CHECK(res.report.final_objective < 1e-12);
    CHECK(nonincreasing(res.report.trace));
    CHECK(res.report.trace.front() == res.report.initial_objective);
    CHECK(res.report.trace.back() == res.report.final_objective);
}

TEST_CASE("gauss-newton damping handles a rank-deficient model") {
    // r = (x0 + x1 - 2); J^T J is singular
    const ResidualFn fn = [](std::span<const double> x) { return Residuals{{x[0] + x[1] - 2.0}, {1.0, 1.0}}; };
    const auto res = gauss_newton(fn, {3.0, -4.0}, GaussNewtonConfig{});
    CHECK(std::abs(res.x[0] + res.x[1] - 2.0) < 1e-8);
    CHECK(nonincreasing(res.report.trace));
}

TEST_CASE("gauss-newton with a general curvature model") {
    const GaussNewtonFn fn = [](std::span<const double> x) {
        GaussNewtonModel m;
        m.objective = std::pow(x[0] - 1.0, 4) + 2.0 * (x[1] + 3.0) * (x[1] + 3.0);
        m.gradient = {4.0 * std::pow(x[0] - 1.0, 3), 4.0 * (x[1] + 3.0)};
        m.hessian = {12.0 * (x[0] - 1.0) * (x[0] - 1.0), 0.0, 0.0, 4.0};
        return m;
    };
    GaussNewtonConfig cfg;
    cfg.max_iter = 200;
    cfg.grad_tol = 1e-14;
    const auto res = gauss_newton(fn, {3.0, 2.0}, cfg);
    CHECK(std::abs(res.x[0] - 1.0) < 1e-3);
    CHECK(std::abs(res.x[1] + 3.0) < 1e-10);
    CHECK(nonincreasing(res.report.trace));
}

TEST_CASE("l-bfgs on a diagonal quadratic") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int t = 0; t < 10; ++t) {
        std::vector<double> x0(5);
        for (auto &v : x0) v = u(rng);
        const auto res = lbfgs(diagonal_quadratic({1, 2, 3, 4, 5}), x0, LbfgsConfig{});
        CHECK(res.report.gradient_norm < 1e-8);
        CHECK(res.report.iterations < 30);
        CHECK(res.report.stop_reason == StopReason::GradientTol);
        CHECK(nonincreasing(res.report.trace));
    }
}

TEST_CASE("l-bfgs at the minimum takes no iterations") {
    const auto res = lbfgs(diagonal_quadratic({1, 2, 3}), {0, 0, 0}, LbfgsConfig{});
    CHECK(res.report.iterations == 0);
    CHECK(res.report.stop_reason == StopReason::GradientTol);
    CHECK(res.x == std::vector<double>{0, 0, 0});
}

TEST_CASE("l-bfgs reaches the Rosenbrock minimum") {
    LbfgsConfig cfg;
    cfg.max_iter = 500;
    cfg.grad_tol = 1e-10;
    const auto res = lbfgs(rosenbrock, {-1.2, 1.0}, cfg);
    CHECK(std::abs(res.x[0] - 1.0) < 1e-6);
    CHECK(std::abs(res.x[1] - 1.0) < 1e-6);
    CHECK(res.report.final_objective < 1e-12);
    CHECK(nonincreasing(res.report.trace));
}

TEST_CASE("property: l-bfgs with full memory terminates on quadratics in n steps") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0), e(0.5, 4.0);
    for (std::size_t n = 1; n <= 5; ++n)
        for (int t = 0; t < 5; ++t) {
            // dense SPD matrix Q = B^T B + I
            std::vector<double> b(n * n), q(n * n, 0.0), x0(n);
            for (auto &v : b) v = u(rng);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    for (std::size_t k = 0; k < n; ++k) q[i * n + j] += b[k * n + i] * b[k * n + j];
                    if (i == j) q[i * n + j] += e(rng);
                }
            for (auto &v : x0) v = 5.0 * u(rng);
            const ObjectiveFn fn = [&](std::span<const double> x, std::span<double> g) {
                double f = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    g[i] = 0.0;
                    for (std::size_t j = 0; j < n; ++j) g[i] += q[i * n + j] * x[j];
                    f += 0.5 * x[i] * g[i];
                }
                return f;
            };
            LbfgsConfig cfg;
            cfg.memory = 50;
            cfg.c2 = 1e-8; // near-exact line search
            cfg.max_line_search = 60;
            cfg.grad_tol = 1e-7;
            const auto res = lbfgs(fn, x0, cfg);
            CHECK(res.report.gradient_norm < 1e-7);
            CHECK(res.report.iterations <= n);
        }
}

TEST_CASE("property: optimizers are deterministic") {
    LbfgsConfig lc;
    lc.max_iter = 200;
    const auto a = lbfgs(rosenbrock, {-1.2, 1.0}, lc), b = lbfgs(rosenbrock, {-1.2, 1.0}, lc);
    CHECK(a.x == b.x);
    CHECK(a.report.trace == b.report.trace);
    GaussNewtonConfig gc;
    gc.max_iter = 200;
    const auto c = gauss_newton(rosenbrock_residuals, {-1.2, 1.0}, gc);
    const auto d = gauss_newton(rosenbrock_residuals, {-1.2, 1.0}, gc);
    CHECK(c.x == d.x);
    CHECK(c.report.trace == d.report.trace);
}

TEST_CASE("non-finite objectives abort") {
    const ObjectiveFn bad = [](std::span<const double>, std::span<double> g) {
        g[0] = 0.0;
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(lbfgs(bad, {1.0}, LbfgsConfig{}), NumericalError);
    const ResidualFn badr = [](std::span<const double>) {
        return Residuals{{std::numeric_limits<double>::infinity()}, {1.0}};
    };
    CHECK_THROWS_AS(gauss_newton(badr, {1.0}, GaussNewtonConfig{}), NumericalError);
}

TEST_CASE("l-bfgs reports a line-search failure and keeps the best iterate") {
    // gradient points the wrong way, so no step can decrease f
    const ObjectiveFn liar = [](std::span<const double> x, std::span<double> g) {
        g[0] = -1.0;
        return x[0] * x[0] + x[0];
    };
    const auto res = lbfgs(liar, {0.0}, LbfgsConfig{});
    CHECK(res.report.stop_reason == StopReason::LineSearchFail);
    CHECK(res.x[0] == 0.0);
    CHECK(res.report.final_objective == 0.0);
}

TEST_CASE("stop reasons have names") {
    CHECK(to_string(StopReason::GradientTol) == "gradient_tol");
    CHECK(to_string(StopReason::StepTol) == "step_tol");
    CHECK(to_string(StopReason::MaxIter) == "max_iter");
    CHECK(to_string(StopReason::LineSearchFail) == "line_search_fail");
}
