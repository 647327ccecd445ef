#include "seqreg/transform.hpp"

#include <cmath>
#include <numbers>

#include "seqreg/error.hpp"
#include "seqreg/interp.hpp"
#include "seqreg/kernels.hpp"

namespace seqreg {

namespace {

Mat3 rot_x(double a, bool derivative = false) {
    const double c = std::cos(a), s = std::sin(a);
    if (derivative) return Mat3{{0, 0, 0, 0, -s, -c, 0, c, -s}};
    return Mat3{{1, 0, 0, 0, c, -s, 0, s, c}};
}

Mat3 rot_y(double a, bool derivative = false) {
    const double c = std::cos(a), s = std::sin(a);
    if (derivative) return Mat3{{-s, 0, c, 0, 0, 0, -c, 0, -s}};
    return Mat3{{c, 0, s, 0, 1, 0, -s, 0, c}};
}

Mat3 rot_z(double a, bool derivative = false) {
    const double c = std::cos(a), s = std::sin(a);
    if (derivative) return Mat3{{-s, -c, 0, c, -s, 0, 0, 0, 0}};
    return Mat3{{c, -s, 0, s, c, 0, 0, 0, 1}};
}

} // namespace

Mat3 euler_zyx(const Vec3 &angles) { return rot_z(angles.z) * rot_y(angles.y) * rot_x(angles.x); }

Mat3 RigidParams::matrix() const {
    if (rotation == Vec3{}) return Mat3::identity();
    return euler_zyx(rotation);
}

std::array<Mat3, 3> RigidParams::matrix_derivatives() const {
    const auto &r = rotation;
    return {rot_z(r.z) * rot_y(r.y) * rot_x(r.x, true), rot_z(r.z) * rot_y(r.y, true) * rot_x(r.x),
            rot_z(r.z, true) * rot_y(r.y) * rot_x(r.x)};
}

void RigidParams::validate() const {
    if (!is_finite(rotation) || !is_finite(translation) || !is_finite(center))
        throw InputError("rigid parameters must be finite");
    for (int a = 0; a < 3; ++a)
        if (std::abs(rotation[a]) > std::numbers::pi) throw InputError("rigid rotation angles must lie in [-pi, pi]");
}

DisplacementGrid DisplacementGrid::covering(const BinaryMask &mask, const Dims &size) {
    if (size.nx < 4 || size.ny < 4 || size.nz < 4) throw InputError("displacement grid needs >= 4 control points per axis");
    const auto box = bounding_box(mask);
    if (box.empty()) throw InputError("displacement grid: empty mask");
    const auto &g = mask.geometry();
    Geometry grid;
    grid.dims = size;
    grid.direction = g.direction;
    Vec3 margin;
    for (int a = 0; a < 3; ++a) {
        const double extent = static_cast<double>(std::max<std::int64_t>(box.hi[a] - box.lo[a], 1)) * g.spacing[a];
        grid.spacing[a] = extent / static_cast<double>(size[a] - 3);
        margin[a] = grid.spacing[a];
    }
    const Vec3 lo{static_cast<double>(box.lo[0]), static_cast<double>(box.lo[1]), static_cast<double>(box.lo[2])};
    grid.origin = g.index_to_world(lo) - g.direction * margin;
    return DisplacementGrid{VectorField3D(grid)};
}

Vec3 DisplacementGrid::displacement(const Vec3 &x) const {
    const auto &g = control.geometry();
    const auto cell = interp::locate(g.world_to_index(x), g.dims, OobPolicy::Clamp);
    return interp::blend<Vec3>(cell, g.dims, [&](std::int64_t i, std::int64_t j, std::int64_t k) { return control.at(i, j, k); });
}

DisplacementGrid DisplacementGrid::resampled(const Geometry &target) const {
    DisplacementGrid out{VectorField3D(target)};
    for (std::int64_t k = 0; k < target.dims.nz; ++k)
        for (std::int64_t j = 0; j < target.dims.ny; ++j)
            for (std::int64_t i = 0; i < target.dims.nx; ++i)
                out.control.at(i, j, k) = displacement(target.index_to_world(i, j, k));
    return out;
}

std::vector<Vec3> evaluate_deformation(const Deformation &d, std::span<const Vec3> points) {
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto &p : points) {
        if (!is_finite(p)) throw InputError("evaluate_deformation: non-finite point");
        out.push_back(d.apply(p));
    }
    return out;
}

VectorField3D densify(const Deformation &d, const Geometry &ref) {
    VectorField3D out(ref);
    const auto nz = ref.dims.nz;
    auto slab = [&](std::int64_t k) {
        for (std::int64_t j = 0; j < ref.dims.ny; ++j)
            for (std::int64_t i = 0; i < ref.dims.nx; ++i) {
                const Vec3 x = ref.index_to_world(i, j, k);
                out.at(i, j, k) = d.apply(x) - x;
            }
    };
    if (kernels::default_exec() == kernels::Exec::Serial) {
        for (std::int64_t k = 0; k < nz; ++k) slab(k);
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t k = 0; k < nz; ++k) slab(k);
    }
    return out;
}

Volume3D warp(const Volume3D &moving, const Deformation &d, const Geometry &ref, OobPolicy policy) {
    ref.validate();
    Volume3D out(ref);
    kernels::sample_lattice(moving, ref, policy, [&](const Vec3 &x) { return d.apply(x); }, out.values(),
                            kernels::default_exec());
    return out;
}

Volume3D warp(const Volume3D &moving, const VectorField3D &displacement, OobPolicy policy) {
    const auto &ref = displacement.geometry();
    Volume3D out(ref);
    const auto &g = moving.geometry();
    for (std::int64_t k = 0; k < ref.dims.nz; ++k)
        for (std::int64_t j = 0; j < ref.dims.ny; ++j)
            for (std::int64_t i = 0; i < ref.dims.nx; ++i) {
                const Vec3 p = ref.index_to_world(i, j, k) + displacement.at(i, j, k);
                const auto cell = interp::locate(g.world_to_index(p), g.dims, policy);
                out.at(i, j, k) = interp::blend<double>(
                    cell, g.dims, [&](std::int64_t a, std::int64_t b, std::int64_t c) { return moving.at(a, b, c); });
            }
    return out;
}

BinaryMask warp_mask(const BinaryMask &mask, const Deformation &d, const Geometry &ref) {
    return threshold(warp(to_volume(mask), d, ref, OobPolicy::Zero), 0.5);
}

BinaryMask warp_mask(const BinaryMask &mask, const VectorField3D &displacement) {
    return threshold(warp(to_volume(mask), displacement, OobPolicy::Zero), 0.5);
}

Volume3D jacobian_determinant(const VectorField3D &field) {
    Volume3D out(field.geometry());
    kernels::jacobian_determinant(field, out, kernels::default_exec());
    return out;
}

double folding_fraction(const VectorField3D &field, const BinaryMask &mask) {
    if (!same_lattice(field.geometry(), mask.geometry()))
        throw InputError("folding_fraction: field and mask geometries differ");
    const auto total = mask.count();
    if (total == 0) throw InputError("folding_fraction: empty mask");
    const auto det = jacobian_determinant(field);
    std::size_t folded = 0;
    for (std::size_t n = 0; n < mask.size(); ++n)
        if (mask[n] && det[n] <= 0.0) ++folded;
    return 100.0 * static_cast<double>(folded) / static_cast<double>(total);
}

} // namespace seqreg
