#include "seqreg/pipeline.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "seqreg/error.hpp"
#include "seqreg/interp.hpp"
#include "seqreg/kernels.hpp"
#include "seqreg/regularizer.hpp"
#include "seqreg/similarity.hpp"

namespace seqreg {

void RegistrationConfig::validate() const {
    if (levels < 1) throw InputError("config: levels must be >= 1");
    if (smoothing_sigmas.size() != static_cast<std::size_t>(levels))
        throw InputError("config: smoothing_sigmas needs one entry per level");
    for (std::size_t l = 0; l < smoothing_sigmas.size(); ++l) {
        if (!(smoothing_sigmas[l] >= 0.0)) throw InputError("config: smoothing sigmas must be >= 0");
        if (l > 0 && smoothing_sigmas[l] > smoothing_sigmas[l - 1])
            throw InputError("config: smoothing sigmas must not increase toward the fine level");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InputError("config: alpha must be > 0");
    if (epsilon && !(*epsilon > 0.0)) throw InputError("config: epsilon must be > 0");
    if (!(epsilon_fraction > 0.0)) throw InputError("config: epsilon_fraction must be > 0");
    if (rigid_iters < 0 || deform_iters < 0) throw InputError("config: iteration counts must be >= 0");
    if (!(rigid_grad_tol >= 0.0) || !(deform_grad_tol >= 0.0)) throw InputError("config: tolerances must be >= 0");
    if (lbfgs_memory < 1) throw InputError("config: lbfgs_memory must be >= 1");
    if (grid_size.nx < 4 || grid_size.ny < 4 || grid_size.nz < 4)
        throw InputError("config: grid_size must be >= 4 per axis");
}

std::vector<PyramidLevel> build_pyramid(const Volume3D &fixed, const Volume3D &moving, const BinaryMask &mask,
                                        const RegistrationConfig &cfg) {
    cfg.validate();
    if (!same_lattice(fixed.geometry(), mask.geometry()))
        throw InputError("registration: mask must share the fixed image geometry");
    if (mask.count() == 0) throw InputError("registration: empty mask");
    std::vector<PyramidLevel> levels;
    for (int l = 0; l < cfg.levels; ++l) {
        const double sigma = cfg.smoothing_sigmas[static_cast<std::size_t>(l)];
        PyramidLevel level{gaussian_smooth(fixed, sigma), gaussian_smooth(moving, sigma), mask, 1.0};
        for (int s = 0; s < cfg.levels - 1 - l; ++s) {
            level.fixed = downsample2(level.fixed);
            level.moving = downsample2(level.moving);
            level.mask = downsample2(level.mask);
        }
        if (level.mask.count() == 0)
            throw InputError("registration: mask vanishes at pyramid level " + std::to_string(l));
        level.epsilon = cfg.epsilon ? *cfg.epsilon : default_epsilon(level.fixed, &level.mask, cfg.epsilon_fraction);
        levels.push_back(std::move(level));
    }
    return levels;
}

namespace {

NgfConfig level_ngf(const RegistrationConfig &cfg, double epsilon) {
    return NgfConfig{epsilon, cfg.normalize_by_voxels, cfg.oob_policy};
}

RigidParams unpack_rigid(std::span<const double> p, const Vec3 &center) {
    return RigidParams{Vec3{p[0], p[1], p[2]}, Vec3{p[3], p[4], p[5]}, center};
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

// GN model of the rigid NGF objective f = s * sum(1 - c_n^2):
//   g = -2 s sum c_n J_n^T dc_n,  H = 2 s sum (J_n^T dc_n)(J_n^T dc_n)^T
// The fixed gradients follow the rotation (frame R gF), so J_n also carries d(R gF)/d angle.
opt::GaussNewtonModel rigid_model(NgfDistance &dist, std::span<const double> p, const Vec3 &center) {
    const auto rigid = unpack_rigid(p, center);
    const Mat3 rot = rigid.matrix();
    const auto drot = rigid.matrix_derivatives();
    const auto x = dist.site_points();
    const std::size_t n = x.size();

    std::vector<Vec3> y(n);
    for (std::size_t s = 0; s < n; ++s) y[s] = rot * (x[s] - center) + center + rigid.translation;
    dist.set_frame(rot);
    const auto base = dist.unrotated_fixed_gradient();
    std::vector<double> c(n);
    std::vector<Vec3> dc(n), dfixed(n);
    dist.cosine(y, c, dc, dfixed);

    std::vector<double> terms(n);
    for (std::size_t s = 0; s < n; ++s) terms[s] = 1.0 - c[s] * c[s];

    opt::GaussNewtonModel model;
    model.objective = dist.scale() * kernels::sum(terms, kernels::Exec::Serial);
    model.gradient.assign(6, 0.0);
    model.hessian.assign(36, 0.0);
    std::array<kernels::CompensatedSum, 6> grad;
    for (std::size_t s = 0; s < n; ++s) {
        const Vec3 r = x[s] - center;
        std::array<double, 6> v{};
        for (std::size_t a = 0; a < 3; ++a) v[a] = dot(dc[s], drot[a] * r) + dot(dfixed[s], drot[a] * base[s]);
        v[3] = dc[s].x;
        v[4] = dc[s].y;
        v[5] = dc[s].z;
        for (std::size_t a = 0; a < 6; ++a) {
            grad[a].add(-2.0 * c[s] * v[a]);
            for (std::size_t b = 0; b < 6; ++b) model.hessian[a * 6 + b] += v[a] * v[b];
        }
    }
    for (std::size_t a = 0; a < 6; ++a) model.gradient[a] = dist.scale() * grad[a].value();
    for (auto &h : model.hessian) h *= 2.0 * dist.scale();
    return model;
}

// Trilinear weights from a control grid to a fixed set of sites.
class GridStencil {
public:
    GridStencil(const Geometry &grid, std::span<const Vec3> sites) : grid_(grid) {
        entries_.reserve(sites.size() * 8);
        offsets_.reserve(sites.size() + 1);
        offsets_.push_back(0);
        for (const auto &p : sites) {
            const auto cell = interp::locate(grid.world_to_index(p), grid.dims, OobPolicy::Clamp);
            for (int dk = 0; dk < 2; ++dk)
                for (int dj = 0; dj < 2; ++dj)
                    for (int di = 0; di < 2; ++di) {
                        const double w = (di ? cell.frac[0] : 1.0 - cell.frac[0]) *
                                         (dj ? cell.frac[1] : 1.0 - cell.frac[1]) *
                                         (dk ? cell.frac[2] : 1.0 - cell.frac[2]);
                        if (w == 0.0) continue;
                        entries_.push_back({grid.linear(cell.base[0] + di, cell.base[1] + dj, cell.base[2] + dk), w});
                    }
            offsets_.push_back(entries_.size());
        }
    }

    std::size_t sites() const { return offsets_.size() - 1; }

    Vec3 interpolate(std::span<const Vec3> control, std::size_t site) const {
        Vec3 u;
        for (std::size_t e = offsets_[site]; e < offsets_[site + 1]; ++e) u += control[entries_[e].index] * entries_[e].weight;
        return u;
    }

    /// out[c] += sum_n w_{n,c} site_values[n], in site order.
    void scatter(std::span<const Vec3> site_values, std::span<Vec3> out) const {
        for (std::size_t s = 0; s < sites(); ++s)
            for (std::size_t e = offsets_[s]; e < offsets_[s + 1]; ++e)
                out[entries_[e].index] += site_values[s] * entries_[e].weight;
    }

private:
    struct Entry {
        std::size_t index;
        double weight;
    };
    Geometry grid_;
    std::vector<Entry> entries_;
    std::vector<std::size_t> offsets_;
};

std::vector<double> flatten(const VectorField3D &f) {
    std::vector<double> out;
    out.reserve(3 * f.size());
    for (const auto &v : f.values()) {
        out.push_back(v.x);
        out.push_back(v.y);
        out.push_back(v.z);
    }
    return out;
}

void unflatten(std::span<const double> x, VectorField3D &f) {
    for (std::size_t n = 0; n < f.size(); ++n) f[n] = Vec3{x[3 * n], x[3 * n + 1], x[3 * n + 2]};
}

BinaryMask full_mask(const Geometry &g) {
    return BinaryMask(g, std::vector<std::uint8_t>(g.voxel_count(), 1));
}

} // namespace

RigidResult register_rigid(const Volume3D &fixed, const Volume3D &moving, const BinaryMask &mask,
                           const RegistrationConfig &cfg) {
    const auto pyramid = build_pyramid(fixed, moving, mask, cfg);
    RigidResult out;
    out.params.center = centroid(mask);
    std::vector<double> p(6, 0.0);
    for (const auto &level : pyramid) {
        const BinaryMask domain = cfg.rigid_use_mask ? level.mask : full_mask(level.fixed.geometry());
        NgfDistance dist(level.fixed, level.moving, domain, level_ngf(cfg, level.epsilon));
        const Vec3 center = out.params.center;
        opt::GaussNewtonConfig gn;
        gn.max_iter = static_cast<std::size_t>(cfg.rigid_iters);
        gn.relative_grad_tol = cfg.rigid_grad_tol;
        gn.grad_tol = 1e-14;
        gn.step_tol = 1e-9;
        auto res = opt::gauss_newton(
            opt::GaussNewtonFn([&](std::span<const double> q) { return rigid_model(dist, q, center); }), p, gn);
        p = std::move(res.x);
        out.reports.push_back(std::move(res.report));
    }
    for (std::size_t a = 0; a < 3; ++a) p[a] = wrap_angle(p[a]);
    out.params = unpack_rigid(p, out.params.center);
    return out;
}

RegistrationResult register_deformable(const Volume3D &fixed, const Volume3D &moving, const BinaryMask &mask,
                                       const RigidParams &init, const RegistrationConfig &cfg) {
    init.validate();
    const auto pyramid = build_pyramid(fixed, moving, mask, cfg);
    RegistrationResult result;
    result.fixed_geometry = fixed.geometry();
    result.moving_geometry = moving.geometry();

    std::optional<DisplacementGrid> previous;
    for (std::size_t l = 0; l < pyramid.size(); ++l) {
        const auto &level = pyramid[l];
        result.level_epsilons.push_back(level.epsilon);
        NgfDistance dist(level.fixed, level.moving, level.mask, level_ngf(cfg, level.epsilon));
        dist.set_frame(init.matrix());
        DisplacementGrid grid = DisplacementGrid::covering(level.mask, cfg.grid_size);
        if (previous) grid = previous->resampled(grid.geometry());

        const auto sites = dist.site_points();
        const GridStencil stencil(grid.geometry(), sites);
        std::vector<Vec3> rigid_points(sites.size());
        for (std::size_t s = 0; s < sites.size(); ++s) rigid_points[s] = init.apply(sites[s]);

        if (l + 1 == pyramid.size()) {
            std::vector<Vec3> unused(sites.size());
            result.ngf_before = dist.evaluate(rigid_points, unused);
        }

        std::vector<Vec3> deformed(sites.size()), d_points(sites.size());
        DisplacementGrid work = grid;
        auto objective = [&](std::span<const double> x, std::span<double> g) {
            unflatten(x, work.control);
            const auto control = work.control.values();
            for (std::size_t s = 0; s < sites.size(); ++s) deformed[s] = rigid_points[s] + stencil.interpolate(control, s);
            const double distance = dist.evaluate(deformed, d_points);
            const auto reg = curvature_evaluate(work);
            std::vector<Vec3> grad(work.control.size());
            stencil.scatter(d_points, grad);
            for (std::size_t c = 0; c < grad.size(); ++c) {
                const Vec3 v = grad[c] + reg.gradient[c] * cfg.alpha;
                g[3 * c] = v.x;
                g[3 * c + 1] = v.y;
                g[3 * c + 2] = v.z;
            }
            return distance + cfg.alpha * reg.energy;
        };

        opt::LbfgsConfig lb;
        lb.memory = static_cast<std::size_t>(cfg.lbfgs_memory);
        lb.max_iter = static_cast<std::size_t>(cfg.deform_iters);
        lb.relative_grad_tol = cfg.deform_grad_tol;
        lb.grad_tol = 1e-14;
        auto res = opt::lbfgs(opt::ObjectiveFn(objective), flatten(grid.control), lb);
        unflatten(res.x, grid.control);
        result.deform_reports.push_back(std::move(res.report));

        if (l + 1 == pyramid.size()) {
            for (std::size_t s = 0; s < sites.size(); ++s)
                deformed[s] = rigid_points[s] + stencil.interpolate(grid.control.values(), s);
            result.ngf_after = dist.evaluate(deformed, d_points);
        }
        previous = std::move(grid);
    }

    result.deformation = Deformation{init, std::move(previous)};
    result.folding_percent_in_mask = folding_fraction(densify(result.deformation, fixed.geometry()), mask);
    return result;
}

RegistrationResult register_images(const Volume3D &fixed, const Volume3D &moving, const BinaryMask &mask,
                                   const RegistrationConfig &cfg) {
    auto rigid = register_rigid(fixed, moving, mask, cfg);
    auto result = register_deformable(fixed, moving, mask, rigid.params, cfg);
    result.rigid_reports = std::move(rigid.reports);

    // report the improvement relative to the unregistered pair on the finest level
    const auto pyramid = build_pyramid(fixed, moving, mask, cfg);
    const auto &fine = pyramid.back();
    const NgfDistance dist(fine.fixed, fine.moving, fine.mask, level_ngf(cfg, fine.epsilon));
    std::vector<Vec3> unused(dist.sites().size());
    result.ngf_before = dist.evaluate(dist.site_points(), unused);
    return result;
}

std::vector<Volume3D> apply_to_maps(const RegistrationResult &result, const std::vector<Volume3D> &maps,
                                    const Geometry &ref, OobPolicy policy) {
    std::vector<Volume3D> out;
    out.reserve(maps.size());
    for (const auto &m : maps) {
        if (!same_lattice(m.geometry(), result.moving_geometry))
            throw InputError("apply_to_maps: map geometry differs from the moving image");
        out.push_back(warp(m, result.deformation, ref, policy));
    }
    return out;
}

} // namespace seqreg
