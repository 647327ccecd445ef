#include "seqreg/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>

#include "seqreg/error.hpp"

namespace seqreg::opt {

std::string_view to_string(StopReason r) {
    switch (r) {
    case StopReason::GradientTol: return "gradient_tol";
    case StopReason::StepTol: return "step_tol";
    case StopReason::MaxIter: return "max_iter";
    case StopReason::LineSearchFail: return "line_search_fail";
    }
    return "unknown";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void check_finite(double f, const char *where) {
    if (!std::isfinite(f)) throw NumericalError(std::string(where) + ": objective is not finite");
}

// In-place Cholesky solve of the SPD system A x = b (row-major n x n). Returns false when A is
// not numerically positive definite.
bool cholesky_solve(std::vector<double> a, std::vector<double> &b) {
    const std::size_t n = b.size();
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        d = std::sqrt(d);
        a[j * n + j] = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = v / d;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
        b[i] = v / a[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double v = b[i];
        for (std::size_t k = i + 1; k < n; ++k) v -= a[k * n + i] * b[k];
        b[i] = v / a[i * n + i];
    }
    return true;
}

} // namespace

GaussNewtonResult gauss_newton(const GaussNewtonFn &fn, std::vector<double> x0, const GaussNewtonConfig &cfg) {
    const std::size_t n = x0.size();
    GaussNewtonResult out{std::move(x0), {}};
    auto &rep = out.report;
    auto model = fn(out.x);
    ++rep.evaluations;
    check_finite(model.objective, "gauss_newton");
    rep.initial_objective = model.objective;
    rep.trace.push_back(model.objective);
    const double g0 = norm(model.gradient);
    const double gtol = std::max(cfg.grad_tol, cfg.relative_grad_tol * g0);
    double lambda = 0.0;
    double hscale = 0.0;

    rep.stop_reason = StopReason::MaxIter;
    for (;;) {
        rep.gradient_norm = norm(model.gradient);
        if (rep.gradient_norm <= gtol) {
            rep.stop_reason = StopReason::GradientTol;
            break;
        }
        if (rep.iterations >= cfg.max_iter) break;

        for (std::size_t i = 0; i < n; ++i) hscale = std::max(hscale, std::abs(model.hessian[i * n + i]));
        if (hscale == 0.0) hscale = 1.0;

        bool accepted = false;
        for (std::size_t attempt = 0; attempt <= cfg.max_damping_steps; ++attempt) {
            auto system = model.hessian;
            for (std::size_t i = 0; i < n; ++i) system[i * n + i] += lambda;
            std::vector<double> step(n);
            for (std::size_t i = 0; i < n; ++i) step[i] = -model.gradient[i];
            if (!cholesky_solve(std::move(system), step)) {
                lambda = lambda == 0.0 ? 1e-10 * hscale : lambda * cfg.lambda_up;
                continue;
            }
            if (norm(step) <= cfg.step_tol) break;
            std::vector<double> trial(n);
            for (std::size_t i = 0; i < n; ++i) trial[i] = out.x[i] + step[i];
            auto next = fn(trial);
            ++rep.evaluations;
            check_finite(next.objective, "gauss_newton");
            if (next.objective < model.objective) {
                // gain ratio of actual to model-predicted decrease
                double predicted = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double hs = 0.0;
                    for (std::size_t j = 0; j < n; ++j) hs += model.hessian[i * n + j] * step[j];
                    predicted -= step[i] * (model.gradient[i] + 0.5 * hs);
                }
                const double rho = predicted > 0.0 ? (model.objective - next.objective) / predicted : 1.0;
                lambda *= std::max(cfg.lambda_down, 1.0 - std::pow(2.0 * std::min(rho, 1.0) - 1.0, 3.0));
                if (lambda < 1e-12 * hscale) lambda = 0.0;
                out.x = std::move(trial);
                model = std::move(next);
                accepted = true;
                break;
            }
            lambda = lambda == 0.0 ? 1e-6 * hscale : lambda * cfg.lambda_up;
        }
        if (!accepted) {
            rep.stop_reason = StopReason::StepTol;
            break;
        }
        ++rep.iterations;
        rep.trace.push_back(model.objective);
    }
    rep.final_objective = model.objective;
    return out;
}

GaussNewtonResult gauss_newton(const ResidualFn &fn, std::vector<double> x0, const GaussNewtonConfig &cfg) {
    const std::size_t n = x0.size();
    auto adapter = [&fn, n](std::span<const double> x) {
        const auto res = fn(x);
        const std::size_t m = res.r.size();
        if (res.jacobian.size() != m * n) throw InputError("gauss_newton: jacobian has the wrong shape");
        GaussNewtonModel model;
        model.objective = 0.5 * dot(res.r, res.r);
        model.gradient.assign(n, 0.0);
        model.hessian.assign(n * n, 0.0);
        for (std::size_t row = 0; row < m; ++row) {
            const double *jr = &res.jacobian[row * n];
            for (std::size_t a = 0; a < n; ++a) {
                model.gradient[a] += jr[a] * res.r[row];
                for (std::size_t b = 0; b < n; ++b) model.hessian[a * n + b] += jr[a] * jr[b];
            }
        }
        return model;
    };
    return gauss_newton(GaussNewtonFn(adapter), std::move(x0), cfg);
}

// ---------------------------------------------------------------------------------------------

namespace {

struct LinePoint {
    double alpha = 0.0;
    double f = 0.0;
    double dphi = 0.0; ///< directional derivative g(x + alpha d) . d
};

// Minimiser of the cubic through (a, fa, da) and (b, fb, db), safeguarded into the interval.
double cubic_step(const LinePoint &a, const LinePoint &b) {
    const double lo = std::min(a.alpha, b.alpha), hi = std::max(a.alpha, b.alpha);
    const double d1 = a.dphi + b.dphi - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.dphi * b.dphi;
    double t = 0.5 * (lo + hi);
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
        const double c = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / (b.dphi - a.dphi + 2.0 * d2);
        if (std::isfinite(c)) t = c;
    }
    const double margin = 0.1 * (hi - lo);
    return std::clamp(t, lo + margin, hi - margin);
}

class StrongWolfe {
public:
    StrongWolfe(const ObjectiveFn &fn, const LbfgsConfig &cfg, std::span<const double> x, std::span<const double> dir,
                double f0, double dphi0)
        : fn_(fn), cfg_(cfg), x_(x), dir_(dir), f0_(f0), dphi0_(dphi0), trial_(x.size()), grad_(x.size()) {}

    // Returns the accepted point, or nothing after max_line_search evaluations.
    std::optional<LinePoint> search(double alpha0) {
        LinePoint prev{0.0, f0_, dphi0_};
        double alpha = alpha0;
        for (bool first = true; evaluations_ < cfg_.max_line_search; first = false) {
            const LinePoint cur = eval(alpha);
            if (cur.f > f0_ + cfg_.c1 * alpha * dphi0_ || (!first && cur.f >= prev.f)) return zoom(prev, cur);
            if (std::abs(cur.dphi) <= -cfg_.c2 * dphi0_) return cur;
            if (cur.dphi >= 0.0) return zoom(cur, prev);
            prev = cur;
            alpha *= 2.0;
        }
        return std::nullopt;
    }

    std::span<const double> trial() const { return trial_; }
    std::span<const double> gradient() const { return grad_; }
    std::size_t evaluations() const { return evaluations_; }
    const LinePoint &best() const { return best_; }

private:
    LinePoint eval(double alpha) {
        for (std::size_t i = 0; i < x_.size(); ++i) trial_[i] = x_[i] + alpha * dir_[i];
        const double f = fn_(trial_, grad_);
        ++evaluations_;
        check_finite(f, "lbfgs");
        LinePoint p{alpha, f, dot(grad_, dir_)};
        if (p.f < best_.f) best_ = p;
        return p;
    }

    std::optional<LinePoint> zoom(LinePoint lo, LinePoint hi) {
        while (evaluations_ < cfg_.max_line_search) {
            const double alpha = cubic_step(lo, hi);
            const LinePoint cur = eval(alpha);
            if (cur.f > f0_ + cfg_.c1 * alpha * dphi0_ || cur.f >= lo.f) {
                hi = cur;
            } else {
                if (std::abs(cur.dphi) <= -cfg_.c2 * dphi0_) return cur;
                if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = cur;
            }
            if (std::abs(hi.alpha - lo.alpha) <= std::numeric_limits<double>::epsilon() * std::max(1.0, lo.alpha)) break;
        }
        return std::nullopt;
    }

    const ObjectiveFn &fn_;
    const LbfgsConfig &cfg_;
    std::span<const double> x_, dir_;
    double f0_, dphi0_;
    std::vector<double> trial_, grad_;
    std::size_t evaluations_ = 0;
    LinePoint best_{0.0, std::numeric_limits<double>::infinity(), 0.0};
};

struct CurvaturePair {
    std::vector<double> s, y;
    double rho;
};

} // namespace

LbfgsResult lbfgs(const ObjectiveFn &fn, std::vector<double> x0, const LbfgsConfig &cfg) {
    const std::size_t n = x0.size();
    LbfgsResult out{std::move(x0), {}};
    auto &rep = out.report;
    std::vector<double> g(n);
    double f = fn(out.x, g);
    ++rep.evaluations;
    check_finite(f, "lbfgs");
    rep.initial_objective = f;
    rep.trace.push_back(f);
    const double gtol = std::max(cfg.grad_tol, cfg.relative_grad_tol * norm(g));

    std::deque<CurvaturePair> history;
    std::vector<double> dir(n), alpha_hist;
    rep.stop_reason = StopReason::MaxIter;
    for (;;) {
        rep.gradient_norm = norm(g);
        if (rep.gradient_norm <= gtol) {
            rep.stop_reason = StopReason::GradientTol;
            break;
        }
        if (rep.iterations >= cfg.max_iter) break;

        // two-loop recursion: dir = -H g
        for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
        alpha_hist.assign(history.size(), 0.0);
        for (std::size_t k = history.size(); k-- > 0;) {
            const auto &p = history[k];
            alpha_hist[k] = p.rho * dot(p.s, dir);
            for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha_hist[k] * p.y[i];
        }
        if (!history.empty()) {
            const auto &p = history.back();
            const double gamma = dot(p.s, p.y) / dot(p.y, p.y);
            for (auto &v : dir) v *= gamma;
        }
        for (std::size_t k = 0; k < history.size(); ++k) {
            const auto &p = history[k];
            const double beta = p.rho * dot(p.y, dir);
            for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha_hist[k] - beta) * p.s[i];
        }
        double dphi0 = dot(g, dir);
        if (!(dphi0 < 0.0)) {
            // not a descent direction: restart from steepest descent
            history.clear();
            for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
            dphi0 = -dot(g, g);
        }
        const double alpha0 = history.empty() ? std::min(1.0, 1.0 / norm(g)) : 1.0;

        StrongWolfe ls(fn, cfg, out.x, dir, f, dphi0);
        const auto accepted = ls.search(alpha0);
        rep.evaluations += ls.evaluations();
        if (!accepted) {
            // keep the best decreasing trial, if any
            const auto &best = ls.best();
            if (best.f < f) {
                std::vector<double> gb(n);
                for (std::size_t i = 0; i < n; ++i) out.x[i] += best.alpha * dir[i];
                f = fn(out.x, gb);
                ++rep.evaluations;
                g = std::move(gb);
                ++rep.iterations;
                rep.trace.push_back(f);
            }
            rep.gradient_norm = norm(g);
            rep.stop_reason = StopReason::LineSearchFail;
            break;
        }
        // line search leaves trial/gradient at the last evaluated point, which is the accepted one
        CurvaturePair pair;
        pair.s.resize(n);
        pair.y.resize(n);
        const auto xt = ls.trial();
        const auto gt = ls.gradient();
        for (std::size_t i = 0; i < n; ++i) {
            pair.s[i] = xt[i] - out.x[i];
            pair.y[i] = gt[i] - g[i];
        }
        const double sy = dot(pair.s, pair.y);
        const double step_norm = norm(pair.s);
        if (sy > 1e-10 * step_norm * norm(pair.y)) {
            pair.rho = 1.0 / sy;
            history.push_back(std::move(pair));
            if (history.size() > cfg.memory) history.pop_front();
        }
        out.x.assign(xt.begin(), xt.end());
        g.assign(gt.begin(), gt.end());
        f = accepted->f;
        ++rep.iterations;
        rep.trace.push_back(f);
        if (step_norm <= cfg.step_tol) {
            rep.gradient_norm = norm(g);
            rep.stop_reason = StopReason::StepTol;
            break;
        }
    }
    rep.final_objective = f;
    return out;
}

} // namespace seqreg::opt
