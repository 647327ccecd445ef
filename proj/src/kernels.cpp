#include "seqreg/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace seqreg::kernels {

namespace {

std::atomic<Exec> g_default_exec{Exec::Parallel};

std::int64_t clamp_index(std::int64_t i, std::int64_t n) { return std::clamp<std::int64_t>(i, 0, n - 1); }

// Index-space derivative along `axis` with one-sided differences on the boundary.
template <class T, class Fetch>
T index_derivative(Fetch &&at, std::int64_t pos, std::int64_t n) {
    if (pos == 0) return at(1) - at(0);
    if (pos == n - 1) return at(n - 1) - at(n - 2);
    return (at(pos + 1) - at(pos - 1)) * 0.5;
}

template <class Body>
void for_slabs(std::int64_t nz, Exec exec, Body &&body) {
    if (exec == Exec::Serial) {
        for (std::int64_t k = 0; k < nz; ++k) body(k);
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t k = 0; k < nz; ++k) body(k);
    }
}

} // namespace

Exec default_exec() { return g_default_exec.load(std::memory_order_relaxed); }
void set_default_exec(Exec exec) { g_default_exec.store(exec, std::memory_order_relaxed); }

double sum(std::span<const double> values, Exec exec) {
    // both paths share the block decomposition so they agree bit for bit
    const std::size_t nblocks = (values.size() + reduction_block - 1) / reduction_block;
    std::vector<double> partial(nblocks, 0.0);
    auto block = [&](std::size_t b) {
        const std::size_t lo = b * reduction_block;
        const std::size_t hi = std::min(values.size(), lo + reduction_block);
        CompensatedSum acc;
        for (std::size_t n = lo; n < hi; ++n) acc.add(values[n]);
        partial[b] = acc.value();
    };
    const auto nb = static_cast<std::int64_t>(nblocks);
    if (exec == Exec::Serial) {
        for (std::int64_t b = 0; b < nb; ++b) block(static_cast<std::size_t>(b));
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t b = 0; b < nb; ++b) block(static_cast<std::size_t>(b));
    }
    CompensatedSum total;
    for (double p : partial) total.add(p);
    return total.value();
}

void convolve_axis(std::span<const double> src, std::span<double> dst, const Dims &dims, int axis,
                   std::span<const double> kernel, Exec exec) {
    const auto radius = static_cast<std::int64_t>(kernel.size() / 2);
    const std::int64_t stride = axis == 0 ? 1 : (axis == 1 ? dims.nx : dims.nx * dims.ny);
    const std::int64_t n_axis = dims[axis];
    for_slabs(dims.nz, exec, [&](std::int64_t k) {
        for (std::int64_t j = 0; j < dims.ny; ++j)
            for (std::int64_t i = 0; i < dims.nx; ++i) {
                const std::int64_t idx[3] = {i, j, k};
                const std::int64_t pos = idx[axis];
                const std::int64_t base = i + dims.nx * (j + dims.ny * k) - pos * stride;
                double acc = 0.0;
                for (std::int64_t t = -radius; t <= radius; ++t) {
                    const std::int64_t q = clamp_index(pos + t, n_axis);
                    acc += kernel[static_cast<std::size_t>(t + radius)] * src[static_cast<std::size_t>(base + q * stride)];
                }
                dst[static_cast<std::size_t>(i + dims.nx * (j + dims.ny * k))] = acc;
            }
    });
}

void gradient_central(const Volume3D &vol, const BinaryMask *mask, VectorField3D &out, Exec exec) {
    const auto &g = vol.geometry();
    const auto &d = g.dims;
    const Vec3 inv_sp{1.0 / g.spacing.x, 1.0 / g.spacing.y, 1.0 / g.spacing.z};
    for_slabs(d.nz, exec, [&](std::int64_t k) {
        for (std::int64_t j = 0; j < d.ny; ++j)
            for (std::int64_t i = 0; i < d.nx; ++i) {
                const std::size_t n = g.linear(i, j, k);
                if (mask != nullptr && !(*mask)[n]) {
                    out[n] = Vec3{};
                    continue;
                }
                const Vec3 di{
                    index_derivative<double>([&](std::int64_t q) { return vol.at(q, j, k); }, i, d.nx) * inv_sp.x,
                    index_derivative<double>([&](std::int64_t q) { return vol.at(i, q, k); }, j, d.ny) * inv_sp.y,
                    index_derivative<double>([&](std::int64_t q) { return vol.at(i, j, q); }, k, d.nz) * inv_sp.z};
                out[n] = g.direction * di;
            }
    });
}

void jacobian_determinant(const VectorField3D &field, Volume3D &out, Exec exec) {
    const auto &g = field.geometry();
    const auto &d = g.dims;
    const Vec3 inv_sp{1.0 / g.spacing.x, 1.0 / g.spacing.y, 1.0 / g.spacing.z};
    for_slabs(d.nz, exec, [&](std::int64_t k) {
        for (std::int64_t j = 0; j < d.ny; ++j)
            for (std::int64_t i = 0; i < d.nx; ++i) {
                // columns: derivative of u along each index axis, in mm/mm
                const Vec3 du[3] = {
                    index_derivative<Vec3>([&](std::int64_t q) { return field.at(q, j, k); }, i, d.nx) * inv_sp.x,
                    index_derivative<Vec3>([&](std::int64_t q) { return field.at(i, q, k); }, j, d.ny) * inv_sp.y,
                    index_derivative<Vec3>([&](std::int64_t q) { return field.at(i, j, q); }, k, d.nz) * inv_sp.z};
                // J(r,c) = sum_a du_r/dx_a * direction(c,a)
                Mat3 jac;
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c) {
                        double v = 0.0;
                        for (int a = 0; a < 3; ++a) v += du[a][r] * g.direction(c, a);
                        jac(r, c) = v + (r == c ? 1.0 : 0.0);
                    }
                out[g.linear(i, j, k)] = determinant(jac);
            }
    });
}

double ngf_terms(std::span<const Vec3> fixed_grad, std::span<const Vec3> points, const VectorField3D &moving_grad,
                 OobPolicy policy, double epsilon, std::span<double> integrand, std::span<Vec3> d_points, Exec exec) {
    const auto &g = moving_grad.geometry();
    const double e2 = 3.0 * epsilon * epsilon;
    // d index / d world = S^-1 D^T
    Mat3 idx_from_world = g.direction.transposed();
    for (int c = 0; c < 3; ++c) {
        idx_from_world(0, c) /= g.spacing.x;
        idx_from_world(1, c) /= g.spacing.y;
        idx_from_world(2, c) /= g.spacing.z;
    }
    const auto values = moving_grad.values();
    auto site = [&](std::size_t n) {
        const auto cell = interp::locate(g.world_to_index(points[n]), g.dims, policy);
        const auto s = interp::blend_with_derivative<Vec3>(
            cell, g.dims, [&](std::int64_t a, std::int64_t b, std::int64_t c) { return values[g.linear(a, b, c)]; });
        const Vec3 &a = s.value;
        const Vec3 &b = fixed_grad[n];
        const double inner = dot(a, b) + e2;
        const double na = dot(a, a) + e2;
        const double nb = dot(b, b) + e2;
        const double denom = na * nb;
        integrand[n] = 1.0 - inner * inner / denom;
        // d integrand / d a
        const Vec3 da = (b - a * (inner / na)) * (-2.0 * inner / denom);
        // chain through the sampled gradient: d a / d world = (d a / d index) (d index / d world)
        const Vec3 di{dot(s.d[0], da), dot(s.d[1], da), dot(s.d[2], da)};
        d_points[n] = idx_from_world.transposed() * di;
    };
    const auto count = static_cast<std::int64_t>(points.size());
    if (exec == Exec::Serial) {
        for (std::int64_t n = 0; n < count; ++n) site(static_cast<std::size_t>(n));
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t n = 0; n < count; ++n) site(static_cast<std::size_t>(n));
    }
    return sum(integrand.first(points.size()), exec);
}

void ngf_cosine(std::span<const Vec3> fixed_grad, std::span<const Vec3> points, const VectorField3D &moving_grad,
                OobPolicy policy, double epsilon, std::span<double> cosine, std::span<Vec3> d_points, Exec exec,
                std::span<Vec3> d_fixed) {
    const auto &g = moving_grad.geometry();
    const double e2 = 3.0 * epsilon * epsilon;
    Mat3 idx_from_world = g.direction.transposed();
    for (int c = 0; c < 3; ++c) {
        idx_from_world(0, c) /= g.spacing.x;
        idx_from_world(1, c) /= g.spacing.y;
        idx_from_world(2, c) /= g.spacing.z;
    }
    const auto values = moving_grad.values();
    auto site = [&](std::size_t n) {
        const auto cell = interp::locate(g.world_to_index(points[n]), g.dims, policy);
        const auto s = interp::blend_with_derivative<Vec3>(
            cell, g.dims, [&](std::int64_t a, std::int64_t b, std::int64_t c) { return values[g.linear(a, b, c)]; });
        const Vec3 &a = s.value;
        const Vec3 &b = fixed_grad[n];
        const double inner = dot(a, b) + e2;
        const double na = dot(a, a) + e2;
        const double inv = 1.0 / std::sqrt(na * (dot(b, b) + e2));
        cosine[n] = inner * inv;
        const Vec3 da = (b - a * (inner / na)) * inv;
        if (!d_fixed.empty()) d_fixed[n] = (a - b * (inner / (dot(b, b) + e2))) * inv;
        const Vec3 di{dot(s.d[0], da), dot(s.d[1], da), dot(s.d[2], da)};
        d_points[n] = idx_from_world.transposed() * di;
    };
    const auto count = static_cast<std::int64_t>(points.size());
    if (exec == Exec::Serial) {
        for (std::int64_t n = 0; n < count; ++n) site(static_cast<std::size_t>(n));
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t n = 0; n < count; ++n) site(static_cast<std::size_t>(n));
    }
}

void laplacian(std::span<const Vec3> u, const Dims &dims, const Vec3 &spacing, std::span<Vec3> out, Exec exec) {
    const double w[3] = {1.0 / (spacing.x * spacing.x), 1.0 / (spacing.y * spacing.y), 1.0 / (spacing.z * spacing.z)};
    auto at = [&](std::int64_t i, std::int64_t j, std::int64_t k) -> const Vec3 & {
        return u[static_cast<std::size_t>(i + dims.nx * (j + dims.ny * k))];
    };
    for_slabs(dims.nz, exec, [&](std::int64_t k) {
        for (std::int64_t j = 0; j < dims.ny; ++j)
            for (std::int64_t i = 0; i < dims.nx; ++i) {
                const Vec3 &c = at(i, j, k);
                Vec3 acc;
                acc += (at(clamp_index(i + 1, dims.nx), j, k) - c + at(clamp_index(i - 1, dims.nx), j, k) - c) * w[0];
                acc += (at(i, clamp_index(j + 1, dims.ny), k) - c + at(i, clamp_index(j - 1, dims.ny), k) - c) * w[1];
                acc += (at(i, j, clamp_index(k + 1, dims.nz)) - c + at(i, j, clamp_index(k - 1, dims.nz)) - c) * w[2];
                out[static_cast<std::size_t>(i + dims.nx * (j + dims.ny * k))] = acc;
            }
    });
}

} // namespace seqreg::kernels
