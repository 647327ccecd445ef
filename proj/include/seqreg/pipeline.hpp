#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "seqreg/optimizer.hpp"
#include "seqreg/transform.hpp"
#include "seqreg/volume.hpp"

namespace seqreg {

/// Hyperparameters of the two-stage, multi-level registration.
struct RegistrationConfig {
    /// NGF edge parameter; when unset it is derived per level as epsilon_fraction times the
    /// 99th-percentile fixed gradient magnitude inside the mask.
    std::optional<double> epsilon;
    double epsilon_fraction = 0.05;
    bool normalize_by_voxels = true;

    double alpha = 1e-3; ///< curvature weight
    int levels = 2;
    std::vector<double> smoothing_sigmas{2.0, 1.0}; ///< mm, coarse to fine
    int rigid_iters = 50;                           ///< per level
    int deform_iters = 100;                         ///< per level
    double rigid_grad_tol = 1e-3;                   ///< relative to the initial gradient norm
    double deform_grad_tol = 1e-3;
    int lbfgs_memory = 10;
    Dims grid_size = default_grid_size;
    OobPolicy oob_policy = OobPolicy::Zero;
    bool rigid_use_mask = true; ///< restrict the rigid stage to the mask as well

    /// Throws InputError for out-of-range values.
    void validate() const;
};

struct RegistrationResult {
    Deformation deformation;
    Geometry fixed_geometry;
    Geometry moving_geometry;
    std::vector<opt::OptimizerReport> rigid_reports;
    std::vector<opt::OptimizerReport> deform_reports;
    std::vector<double> level_epsilons;
    /// Mask-restricted NGF on the finest level for the initial and final deformation.
    double ngf_before = 0.0;
    double ngf_after = 0.0;
    double folding_percent_in_mask = 0.0;
};

struct RigidResult {
    RigidParams params;
    std::vector<opt::OptimizerReport> reports;
};

/// Image pyramid level: smoothed (and for coarse levels downsampled) fixed, moving and mask.
struct PyramidLevel {
    Volume3D fixed;
    Volume3D moving;
    BinaryMask mask;
    double epsilon = 1.0;
};

/// Levels ordered coarse to fine; level l is downsampled (levels - 1 - l) times.
std::vector<PyramidLevel> build_pyramid(const Volume3D &fixed, const Volume3D &moving, const BinaryMask &mask,
                                        const RegistrationConfig &cfg);

RigidResult register_rigid(const Volume3D &fixed, const Volume3D &moving, const BinaryMask &mask,
                           const RegistrationConfig &cfg);

RegistrationResult register_deformable(const Volume3D &fixed, const Volume3D &moving, const BinaryMask &mask,
                                       const RigidParams &init, const RegistrationConfig &cfg);

/// Rigid stage followed by the deformable stage initialised with its result.
RegistrationResult register_images(const Volume3D &fixed, const Volume3D &moving, const BinaryMask &mask,
                                   const RegistrationConfig &cfg);

/// Resamples companion maps (sharing the moving image's geometry) onto ref through the full
/// deformation with a single interpolation per voxel.
std::vector<Volume3D> apply_to_maps(const RegistrationResult &result, const std::vector<Volume3D> &maps,
                                    const Geometry &ref, OobPolicy policy = OobPolicy::Zero);

} // namespace seqreg
