#include "seqreg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seqreg/error.hpp"
#include "seqreg/interp.hpp"
#include "seqreg/kernels.hpp"

namespace seqreg {

void Geometry::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < 2) throw InputError("geometry: every dimension must be >= 2, got " + std::to_string(dims[a]));
        if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) throw InputError("geometry: spacing must be > 0");
        if (!std::isfinite(origin[a])) throw InputError("geometry: origin must be finite");
    }
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
            const double d = dot(direction.column(a), direction.column(b));
            const double expect = a == b ? 1.0 : 0.0;
            if (!(std::abs(d - expect) <= 1e-6)) throw InputError("geometry: direction matrix is not orthonormal");
        }
}

bool same_lattice(const Geometry &a, const Geometry &b, double tol) {
    if (!(a.dims == b.dims)) return false;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(a.spacing[i] - b.spacing[i]) > tol) return false;
        if (std::abs(a.origin[i] - b.origin[i]) > tol) return false;
    }
    for (std::size_t i = 0; i < 9; ++i)
        if (std::abs(a.direction.m[i] - b.direction.m[i]) > tol) return false;
    return true;
}

Volume3D::Volume3D(Geometry geometry, double fill) : geometry_(geometry), voxels_(geometry.voxel_count(), fill) {
    geometry_.validate();
}

Volume3D::Volume3D(Geometry geometry, std::vector<double> voxels) : geometry_(geometry), voxels_(std::move(voxels)) {
    geometry_.validate();
    if (voxels_.size() != geometry_.voxel_count()) throw InputError("volume: voxel count does not match dims");
}

void Volume3D::require_finite() const {
    for (double v : voxels_)
        if (!std::isfinite(v)) throw InputError("volume: non-finite voxel value");
}

BinaryMask::BinaryMask(Geometry geometry) : geometry_(geometry), voxels_(geometry.voxel_count(), 0) {
    geometry_.validate();
}

BinaryMask::BinaryMask(Geometry geometry, std::vector<std::uint8_t> voxels)
    : geometry_(geometry), voxels_(std::move(voxels)) {
    geometry_.validate();
    if (voxels_.size() != geometry_.voxel_count()) throw InputError("mask: voxel count does not match dims");
    for (auto &v : voxels_)
        if (v > 1) throw InputError("mask: values must be 0 or 1");
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(voxels_.begin(), voxels_.end(), std::uint8_t{1}));
}

VectorField3D::VectorField3D(Geometry geometry) : geometry_(geometry), vectors_(geometry.voxel_count()) {
    geometry_.validate();
}

VectorField3D::VectorField3D(Geometry geometry, std::vector<Vec3> vectors)
    : geometry_(geometry), vectors_(std::move(vectors)) {
    geometry_.validate();
    if (vectors_.size() != geometry_.voxel_count()) throw InputError("vector field: vector count does not match dims");
}

BinaryMask threshold(const Volume3D &vol, double level) {
    BinaryMask out(vol.geometry());
    for (std::size_t n = 0; n < vol.size(); ++n) out.set(n, vol[n] >= level);
    return out;
}

Volume3D to_volume(const BinaryMask &mask) {
    Volume3D out(mask.geometry());
    for (std::size_t n = 0; n < mask.size(); ++n) out[n] = mask[n] ? 1.0 : 0.0;
    return out;
}

double sample_trilinear(const Volume3D &vol, const Vec3 &world, OobPolicy policy) {
    if (!is_finite(world)) throw InputError("sample_trilinear: non-finite sample point");
    const auto &g = vol.geometry();
    const auto cell = interp::locate(g.world_to_index(world), g.dims, policy);
    return interp::blend<double>(cell, g.dims, [&](std::int64_t i, std::int64_t j, std::int64_t k) { return vol.at(i, j, k); });
}

Vec3 sample_trilinear(const VectorField3D &field, const Vec3 &world, OobPolicy policy) {
    if (!is_finite(world)) throw InputError("sample_trilinear: non-finite sample point");
    const auto &g = field.geometry();
    const auto cell = interp::locate(g.world_to_index(world), g.dims, policy);
    return interp::blend<Vec3>(cell, g.dims, [&](std::int64_t i, std::int64_t j, std::int64_t k) { return field.at(i, j, k); });
}

VectorSample sample_trilinear_with_jacobian(const VectorField3D &field, const Vec3 &world, OobPolicy policy) {
    if (!is_finite(world)) throw InputError("sample_trilinear: non-finite sample point");
    const auto &g = field.geometry();
    const auto cell = interp::locate(g.world_to_index(world), g.dims, policy);
    const auto s = interp::blend_with_derivative<Vec3>(
        cell, g.dims, [&](std::int64_t i, std::int64_t j, std::int64_t k) { return field.at(i, j, k); });
    VectorSample out;
    out.value = s.value;
    // d value_r / d world_c = sum_a d value_r / d idx_a * direction(c, a) / spacing_a
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double v = 0.0;
            for (int a = 0; a < 3; ++a) v += s.d[a][r] * g.direction(c, a) / g.spacing[a];
            out.jacobian(r, c) = v;
        }
    return out;
}

VectorField3D gradient_central(const Volume3D &vol, const BinaryMask *mask) {
    if (mask != nullptr && !same_lattice(mask->geometry(), vol.geometry()))
        throw InputError("gradient_central: mask geometry differs from volume");
    VectorField3D out(vol.geometry());
    kernels::gradient_central(vol, mask, out, kernels::default_exec());
    return out;
}

std::vector<double> gaussian_kernel(double sigma_voxels) {
    if (!(sigma_voxels > 0.0)) return {1.0};
    const auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma_voxels));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (std::int64_t t = -radius; t <= radius; ++t) {
        const double v = std::exp(-0.5 * static_cast<double>(t * t) / (sigma_voxels * sigma_voxels));
        k[static_cast<std::size_t>(t + radius)] = v;
        total += v;
    }
    for (auto &v : k) v /= total;
    return k;
}

Volume3D gaussian_smooth(const Volume3D &vol, double sigma_mm) {
    if (!(sigma_mm >= 0.0)) throw InputError("gaussian_smooth: sigma must be >= 0");
    if (sigma_mm == 0.0) return vol;
    const auto &g = vol.geometry();
    std::vector<double> a(vol.values().begin(), vol.values().end());
    std::vector<double> b(a.size());
    const auto exec = kernels::default_exec();
    for (int axis = 0; axis < 3; ++axis) {
        const auto kernel = gaussian_kernel(sigma_mm / g.spacing[axis]);
        kernels::convolve_axis(a, b, g.dims, axis, kernel, exec);
        a.swap(b);
    }
    return Volume3D(g, std::move(a));
}

Geometry downsample2(const Geometry &geom) {
    const auto &d = geom.dims;
    if (d.nx < 4 || d.ny < 4 || d.nz < 4) throw InputError("downsample2: every dimension must be >= 4");
    Geometry out = geom;
    out.dims = Dims{d.nx / 2, d.ny / 2, d.nz / 2};
    out.spacing = geom.spacing * 2.0;
    out.origin = geom.index_to_world(Vec3{0.5, 0.5, 0.5});
    return out;
}

Volume3D downsample2(const Volume3D &vol) {
    const auto geom = downsample2(vol.geometry());
    Volume3D out(geom);
    const auto &d = geom.dims;
    for (std::int64_t k = 0; k < d.nz; ++k)
        for (std::int64_t j = 0; j < d.ny; ++j)
            for (std::int64_t i = 0; i < d.nx; ++i) {
                double acc = 0.0;
                for (int dk = 0; dk < 2; ++dk)
                    for (int dj = 0; dj < 2; ++dj)
                        for (int di = 0; di < 2; ++di) acc += vol.at(2 * i + di, 2 * j + dj, 2 * k + dk);
                out.at(i, j, k) = acc / 8.0;
            }
    return out;
}

BinaryMask downsample2(const BinaryMask &mask) { return threshold(downsample2(to_volume(mask)), 0.5); }

Volume3D resample_to(const Volume3D &vol, const Geometry &ref, OobPolicy policy) {
    ref.validate();
    Volume3D out(ref);
    kernels::sample_lattice(vol, ref, policy, [](const Vec3 &p) { return p; }, out.values(), kernels::default_exec());
    return out;
}

IndexBox bounding_box(const BinaryMask &mask) {
    IndexBox box;
    const auto &d = mask.geometry().dims;
    bool any = false;
    for (std::int64_t k = 0; k < d.nz; ++k)
        for (std::int64_t j = 0; j < d.ny; ++j)
            for (std::int64_t i = 0; i < d.nx; ++i) {
                if (!mask.at(i, j, k)) continue;
                const std::int64_t p[3] = {i, j, k};
                for (int a = 0; a < 3; ++a) {
                    box.lo[a] = any ? std::min(box.lo[a], p[a]) : p[a];
                    box.hi[a] = any ? std::max(box.hi[a], p[a]) : p[a];
                }
                any = true;
            }
    return box;
}

Vec3 centroid(const BinaryMask &mask) {
    const auto &g = mask.geometry();
    Vec3 acc;
    std::size_t n = 0;
    for (std::int64_t k = 0; k < g.dims.nz; ++k)
        for (std::int64_t j = 0; j < g.dims.ny; ++j)
            for (std::int64_t i = 0; i < g.dims.nx; ++i)
                if (mask.at(i, j, k)) {
                    acc += Vec3{static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)};
                    ++n;
                }
    if (n == 0) throw InputError("centroid: empty mask");
    return g.index_to_world(acc * (1.0 / static_cast<double>(n)));
}

} // namespace seqreg
