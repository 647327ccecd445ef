#include "seqreg/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "seqreg/error.hpp"

namespace seqreg {

void NgfConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("ngf: epsilon must be > 0");
}

NgfDistance::NgfDistance(const Volume3D &fixed, const Volume3D &moving, const BinaryMask &mask, NgfConfig cfg)
    : fixed_geom_(fixed.geometry()), cfg_(cfg) {
    cfg_.validate();
    if (!same_lattice(fixed.geometry(), mask.geometry()))
        throw InputError("ngf: mask geometry must match the fixed image");
    for (std::size_t n = 0; n < mask.size(); ++n)
        if (mask[n]) sites_.push_back(n);
    if (sites_.empty()) throw InputError("ngf: empty mask");

    const auto fixed_grad = gradient_central(fixed);
    moving_grad_ = gradient_central(moving);
    const auto &d = fixed_geom_.dims;
    points_.reserve(sites_.size());
    fixed_grad_.reserve(sites_.size());
    for (auto n : sites_) {
        const auto i = static_cast<std::int64_t>(n) % d.nx;
        const auto j = (static_cast<std::int64_t>(n) / d.nx) % d.ny;
        const auto k = static_cast<std::int64_t>(n) / (d.nx * d.ny);
        points_.push_back(fixed_geom_.index_to_world(i, j, k));
        fixed_grad_.push_back(fixed_grad[n]);
    }
    fixed_base_ = fixed_grad_;
    scale_ = cfg_.normalize_by_voxels ? 1.0 / static_cast<double>(sites_.size()) : fixed_geom_.voxel_volume();
    scratch_.resize(sites_.size());
}

double NgfDistance::evaluate(std::span<const Vec3> deformed, std::span<Vec3> d_points, kernels::Exec exec) const {
    if (deformed.size() != sites_.size() || d_points.size() != sites_.size())
        throw InputError("ngf: deformed point count differs from mask size");
    // scratch_ is per-object; concurrent evaluate() calls on one NgfDistance are not allowed
    const double raw = kernels::ngf_terms(fixed_grad_, deformed, moving_grad_, cfg_.policy, cfg_.epsilon, scratch_,
                                          d_points, exec);
    for (auto &g : d_points) g *= scale_;
    const double value = raw * scale_;
    if (!std::isfinite(value)) throw NumericalError("ngf: non-finite distance value");
    return value;
}

void NgfDistance::cosine(std::span<const Vec3> deformed, std::span<double> cosine, std::span<Vec3> d_cosine,
                         kernels::Exec exec) const {
    if (deformed.size() != sites_.size() || cosine.size() != sites_.size() || d_cosine.size() != sites_.size())
        throw InputError("ngf: deformed point count differs from mask size");
    kernels::ngf_cosine(fixed_grad_, deformed, moving_grad_, cfg_.policy, cfg_.epsilon, cosine, d_cosine, exec);
}

void NgfDistance::cosine(std::span<const Vec3> deformed, std::span<double> cosine, std::span<Vec3> d_cosine,
                         std::span<Vec3> d_fixed, kernels::Exec exec) const {
    if (deformed.size() != sites_.size() || cosine.size() != sites_.size() || d_cosine.size() != sites_.size() ||
        d_fixed.size() != sites_.size())
        throw InputError("ngf: deformed point count differs from mask size");
    kernels::ngf_cosine(fixed_grad_, deformed, moving_grad_, cfg_.policy, cfg_.epsilon, cosine, d_cosine, exec,
                        d_fixed);
}

void NgfDistance::set_frame(const Mat3 &rotation) {
    frame_ = rotation;
    for (std::size_t s = 0; s < fixed_base_.size(); ++s) fixed_grad_[s] = rotation * fixed_base_[s];
}

NgfEvaluation NgfDistance::evaluate(const Deformation &d) const {
    const auto deformed = evaluate_deformation(d, points_);
    std::vector<Vec3> grad(sites_.size());
    NgfEvaluation out;
    out.value = evaluate(deformed, grad);
    out.pointwise_gradient = VectorField3D(fixed_geom_);
    for (std::size_t s = 0; s < sites_.size(); ++s) out.pointwise_gradient[sites_[s]] = grad[s];
    return out;
}

NgfEvaluation ngf_evaluate(const Volume3D &fixed, const Volume3D &moving, const Deformation &d,
                           const BinaryMask &mask, const NgfConfig &cfg) {
    return NgfDistance(fixed, moving, mask, cfg).evaluate(d);
}

GradientCheckReport ngf_gradient_check(const Volume3D &fixed, const Volume3D &moving, const Deformation &d,
                                       const BinaryMask &mask, const NgfConfig &cfg, double h) {
    if (!(h > 0.0)) throw InputError("ngf_gradient_check: step must be > 0");
    const NgfDistance dist(fixed, moving, mask, cfg);
    const auto analytic = dist.evaluate(d);
    const auto deformed = evaluate_deformation(d, dist.site_points());
    const auto &mg = dist.moving_gradient().geometry();

    GradientCheckReport report;
    double max_err = 0.0, max_fd = 0.0;
    std::vector<double> integrand(1);
    std::vector<Vec3> unused(1);
    for (std::size_t s = 0; s < deformed.size(); ++s) {
        const std::span<const Vec3> fgrad = dist.fixed_gradient().subspan(s, 1);
        const Vec3 &g = analytic.pointwise_gradient[dist.sites()[s]];
        for (int c = 0; c < 3; ++c) {
            Vec3 step;
            step[c] = h;
            const Vec3 plus = deformed[s] + step, minus = deformed[s] - step;
            const Vec3 ip = mg.world_to_index(plus), im = mg.world_to_index(minus);
            bool crosses = false;
            for (int a = 0; a < 3; ++a) crosses = crosses || std::floor(ip[a]) != std::floor(im[a]);
            if (crosses) {
                ++report.skipped;
                continue;
            }
            const double fp = kernels::ngf_terms(fgrad, std::span<const Vec3>(&plus, 1), dist.moving_gradient(),
                                                 cfg.policy, cfg.epsilon, integrand, unused, kernels::Exec::Serial);
            const double fm = kernels::ngf_terms(fgrad, std::span<const Vec3>(&minus, 1), dist.moving_gradient(),
                                                 cfg.policy, cfg.epsilon, integrand, unused, kernels::Exec::Serial);
            const double fd = (fp - fm) / (2.0 * h) * dist.scale();
            max_err = std::max(max_err, std::abs(fd - g[c]));
            max_fd = std::max(max_fd, std::abs(fd));
            ++report.compared;
        }
    }
    report.max_relative_error = max_fd > 0.0 ? max_err / max_fd : max_err;
    return report;
}

double robust_max_gradient(const Volume3D &fixed, const BinaryMask *mask) {
    const auto grad = gradient_central(fixed);
    std::vector<double> mags;
    const bool use_mask = mask != nullptr && mask->count() > 0;
    for (std::size_t n = 0; n < grad.size(); ++n)
        if (!use_mask || (*mask)[n]) mags.push_back(norm(grad[n]));
    const auto rank = static_cast<std::size_t>(std::floor(0.99 * static_cast<double>(mags.size() - 1)));
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(rank), mags.end());
    return mags[rank];
}

double default_epsilon(const Volume3D &fixed, const BinaryMask *mask, double fraction) {
    const double eps = fraction * robust_max_gradient(fixed, mask);
    // flat images have no edges to preserve; any positive value yields D = 0
    return eps > 0.0 ? eps : 1e-6;
}

} // namespace seqreg
