#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seqreg/kernels.hpp"
#include "seqreg/transform.hpp"
#include "seqreg/volume.hpp"

namespace seqreg {

struct NgfConfig {
    double epsilon = 1.0;            ///< edge parameter, intensity per mm
    bool normalize_by_voxels = true; ///< mean over mask voxels; otherwise a physical-volume integral
    OobPolicy policy = OobPolicy::Zero;

    void validate() const;
};

struct NgfEvaluation {
    double value = 0.0;
    /// d value / d y(x) at each fixed voxel (zero outside the mask).
    VectorField3D pointwise_gradient;
};

/// Normalized gradient field distance restricted to a mask:
///   (1/N) sum_x 1 - <gM(y(x)), gF(x)>_e^2 / (|gM(y(x))|_e^2 |gF(x)|_e^2)
/// with <f,g>_e = f.g + 3 e^2. The moving gradient is computed once on the moving lattice and
/// sampled trilinearly at y(x).
///
/// A frame rotation R expresses the sampled moving gradient in fixed coordinates, R^T gM(y(x)),
/// which is the gradient of the moving image resampled by a rigid map with rotation R. It is
/// applied as R gF(x) since the inner product and norms are unchanged. Identity by default.
class NgfDistance {
public:
    NgfDistance(const Volume3D &fixed, const Volume3D &moving, const BinaryMask &mask, NgfConfig cfg);

    /// Mask voxels in x-fastest order: linear index and world position on the fixed lattice.
    std::span<const std::size_t> sites() const { return sites_; }
    std::span<const Vec3> site_points() const { return points_; }
    /// Fixed gradients after the frame rotation.
    std::span<const Vec3> fixed_gradient() const { return fixed_grad_; }
    std::span<const Vec3> unrotated_fixed_gradient() const { return fixed_base_; }
    void set_frame(const Mat3 &rotation);
    const Mat3 &frame() const { return frame_; }
    const VectorField3D &moving_gradient() const { return moving_grad_; }
    const Geometry &fixed_geometry() const { return fixed_geom_; }
    const NgfConfig &config() const { return cfg_; }

    /// Distance for deformed site positions y(x_n); d_points receives d value / d y(x_n).
    double evaluate(std::span<const Vec3> deformed, std::span<Vec3> d_points,
                    kernels::Exec exec = kernels::default_exec()) const;

    /// Per-site cosines c_n (integrand = 1 - c_n^2) and d c_n / d y(x_n), unscaled.
    void cosine(std::span<const Vec3> deformed, std::span<double> cosine, std::span<Vec3> d_cosine,
                kernels::Exec exec = kernels::default_exec()) const;

    /// As above; d_fixed receives d c_n / d (R gF(x_n)).
    void cosine(std::span<const Vec3> deformed, std::span<double> cosine, std::span<Vec3> d_cosine,
                std::span<Vec3> d_fixed, kernels::Exec exec = kernels::default_exec()) const;

    /// Distance and pointwise gradient for a deformation.
    NgfEvaluation evaluate(const Deformation &d) const;

    /// Sum weight applied to raw integrand sums (1/N or the voxel volume).
    double scale() const { return scale_; }

private:
    Geometry fixed_geom_;
    NgfConfig cfg_;
    std::vector<std::size_t> sites_;
    std::vector<Vec3> points_;
    std::vector<Vec3> fixed_base_;
    std::vector<Vec3> fixed_grad_;
    Mat3 frame_ = Mat3::identity();
    VectorField3D moving_grad_;
    double scale_ = 1.0;
    mutable std::vector<double> scratch_;
};

NgfEvaluation ngf_evaluate(const Volume3D &fixed, const Volume3D &moving, const Deformation &d,
                           const BinaryMask &mask, const NgfConfig &cfg);

struct GradientCheckReport {
    double max_relative_error = 0.0; ///< max |analytic - fd| / max |fd| over all compared components
    std::size_t compared = 0;
    std::size_t skipped = 0;         ///< perturbations that crossed a trilinear cell face
};

/// Analytic pointwise gradient against central differences of the per-voxel integrand under
/// perturbations of y(x) by +-h mm along each world axis.
GradientCheckReport ngf_gradient_check(const Volume3D &fixed, const Volume3D &moving, const Deformation &d,
                                       const BinaryMask &mask, const NgfConfig &cfg, double h);

/// 99th percentile of |grad F| over the mask (whole volume when the mask is null or empty).
double robust_max_gradient(const Volume3D &fixed, const BinaryMask *mask);

/// Default edge parameter: `fraction` of the robust max gradient magnitude of the fixed image.
double default_epsilon(const Volume3D &fixed, const BinaryMask *mask, double fraction = 0.05);

} // namespace seqreg
