#pragma once

// Voxel-loop kernels. Every kernel has a serial reference path and an OpenMP path selected by
// Exec; tests hold the two to agreement and the benchmark compares their throughput.
//
// Reductions use a fixed block decomposition (independent of the thread count) with
// compensated summation inside and across blocks, so Serial and Parallel results are
// bit-identical for any number of threads.

#include <cstddef>
#include <span>
#include <vector>

#include "seqreg/geometry.hpp"
#include "seqreg/interp.hpp"
#include "seqreg/volume.hpp"

namespace seqreg::kernels {

enum class Exec { Serial, Parallel };

/// Process-wide default used by the high-level operations.
Exec default_exec();
void set_default_exec(Exec exec);

inline constexpr std::size_t reduction_block = 2048;

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double sum(std::span<const double> values, Exec exec);

/// One separable convolution pass along `axis` with replicate edges; kernel is centered.
void convolve_axis(std::span<const double> src, std::span<double> dst, const Dims &dims, int axis,
                   std::span<const double> kernel, Exec exec);

void gradient_central(const Volume3D &vol, const BinaryMask *mask, VectorField3D &out, Exec exec);

/// det(I + grad u) per voxel.
void jacobian_determinant(const VectorField3D &field, Volume3D &out, Exec exec);

/// out[n] = src sampled at map(world(n)) for every voxel n of ref.
template <class Map>
void sample_lattice(const Volume3D &src, const Geometry &ref, OobPolicy policy, Map &&map,
                    std::span<double> out, Exec exec) {
    const auto &g = src.geometry();
    const auto values = src.values();
    const std::int64_t nz = ref.dims.nz;
    auto row = [&](std::int64_t k) {
        for (std::int64_t j = 0; j < ref.dims.ny; ++j)
            for (std::int64_t i = 0; i < ref.dims.nx; ++i) {
                const Vec3 p = map(ref.index_to_world(i, j, k));
                const auto cell = interp::locate(g.world_to_index(p), g.dims, policy);
                out[ref.linear(i, j, k)] = interp::blend<double>(
                    cell, g.dims, [&](std::int64_t a, std::int64_t b, std::int64_t c) { return values[g.linear(a, b, c)]; });
            }
    };
    if (exec == Exec::Serial) {
        for (std::int64_t k = 0; k < nz; ++k) row(k);
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t k = 0; k < nz; ++k) row(k);
    }
}

/// Per-voxel normalized-gradient-field terms for a list of sample sites.
///   fixed_grad[n]  gradient of the fixed image at site n
///   points[n]      deformed position y(x_n) in moving world space
/// Writes the integrand 1 - <a,b>_e^2 / (|a|_e^2 |b|_e^2) to integrand[n] and its derivative with
/// respect to points[n] to d_points[n] (moving gradient a is sampled trilinearly at points[n]).
/// Returns the compensated sum of the integrand.
double ngf_terms(std::span<const Vec3> fixed_grad, std::span<const Vec3> points, const VectorField3D &moving_grad,
                 OobPolicy policy, double epsilon, std::span<double> integrand, std::span<Vec3> d_points, Exec exec);

/// Normalized-gradient cosine c = <a,b>_e / (|a|_e |b|_e) per site and its derivative with
/// respect to points[n]; the NGF integrand equals 1 - c^2. When d_fixed is non-empty it
/// receives d c / d fixed_grad[n].
void ngf_cosine(std::span<const Vec3> fixed_grad, std::span<const Vec3> points, const VectorField3D &moving_grad,
                OobPolicy policy, double epsilon, std::span<double> cosine, std::span<Vec3> d_points, Exec exec,
                std::span<Vec3> d_fixed = {});

/// 7-point Laplacian of each vector component with replicate (Neumann) boundaries.
void laplacian(std::span<const Vec3> u, const Dims &dims, const Vec3 &spacing, std::span<Vec3> out, Exec exec);

} // namespace seqreg::kernels
