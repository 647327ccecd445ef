#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "seqreg/geometry.hpp"
#include "seqreg/volume.hpp"

namespace seqreg {

/// Six-parameter rigid transform about a fixed center:
///   R(x) = Rz(rz) Ry(ry) Rx(rx) (x - center) + center + translation
/// The rotation vector stores (rx, ry, rz) in radians; composition is intrinsic Z-Y-X.
struct RigidParams {
    Vec3 rotation;
    Vec3 translation;
    Vec3 center;

    Mat3 matrix() const;
    /// d matrix / d rotation[a] for a = x, y, z.
    std::array<Mat3, 3> matrix_derivatives() const;
    Vec3 apply(const Vec3 &x) const { return matrix() * (x - center) + center + translation; }

    /// Throws InputError for non-finite values or |angle| > pi.
    void validate() const;

    friend bool operator==(const RigidParams &, const RigidParams &) = default;
};

Mat3 euler_zyx(const Vec3 &angles);

/// Control-point displacements (mm) on a coarse lattice, interpolated trilinearly. Points outside
/// the lattice take the value of the nearest boundary control point.
struct DisplacementGrid {
    VectorField3D control;

    const Geometry &geometry() const { return control.geometry(); }

    /// Zero grid of `size` control points spanning the mask bounding box plus one control cell on
    /// every side, aligned with the mask's axes.
    static DisplacementGrid covering(const BinaryMask &mask, const Dims &size);

    Vec3 displacement(const Vec3 &x) const;

    /// Trilinear resampling of this grid's displacement onto another control lattice.
    DisplacementGrid resampled(const Geometry &target) const;
};

inline constexpr Dims default_grid_size{31, 31, 31};

/// y(x) = R(x) + u_grid(x), with u_grid evaluated at the fixed-space point x.
struct Deformation {
    RigidParams rigid;
    std::optional<DisplacementGrid> grid;

    Vec3 apply(const Vec3 &x) const {
        Vec3 y = rigid.apply(x);
        if (grid) y += grid->displacement(x);
        return y;
    }

    static Deformation identity() { return {}; }
};

std::vector<Vec3> evaluate_deformation(const Deformation &d, std::span<const Vec3> points);

/// Dense u(x) = y(x) - x on every voxel center of ref.
VectorField3D densify(const Deformation &d, const Geometry &ref);

/// output(x) = moving(y(x)) on the lattice ref.
Volume3D warp(const Volume3D &moving, const Deformation &d, const Geometry &ref, OobPolicy policy);
/// Same as warp for a dense displacement field defined on ref: output(x) = moving(x + u(x)).
Volume3D warp(const Volume3D &moving, const VectorField3D &displacement, OobPolicy policy);

/// Trilinear warp of the {0,1} indicator, thresholded at 0.5.
BinaryMask warp_mask(const BinaryMask &mask, const Deformation &d, const Geometry &ref);
BinaryMask warp_mask(const BinaryMask &mask, const VectorField3D &displacement);

/// det(I + grad u) per voxel.
Volume3D jacobian_determinant(const VectorField3D &field);

/// Percentage of mask voxels with det(I + grad u) <= 0.
double folding_fraction(const VectorField3D &field, const BinaryMask &mask);

} // namespace seqreg
