#pragma once

// Trilinear interpolation on a node-centered lattice, shared by scalar and vector sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "seqreg/geometry.hpp"
#include "seqreg/volume.hpp"

namespace seqreg::interp {

/// Lower corner and fractional offsets of a continuous index, per axis.
struct Cell {
    std::int64_t base[3];
    double frac[3];
    bool flat[3]; ///< clamped axis: derivative along it is zero
};

inline Cell locate(const Vec3 &idx, const Dims &dims, OobPolicy policy) {
    Cell c{};
    for (int a = 0; a < 3; ++a) {
        double t = idx[a];
        const auto n = dims[a];
        c.flat[a] = false;
        if (policy == OobPolicy::Clamp) {
            const double top = static_cast<double>(n - 1);
            c.flat[a] = t < 0.0 || t > top;
            t = std::clamp(t, 0.0, top);
        } else {
            // far outside samples only zero padding; bounding t keeps the integer cast defined
            t = std::clamp(t, -2.0, static_cast<double>(n + 1));
        }
        auto b = static_cast<std::int64_t>(std::floor(t));
        // keep the top node inside a cell so that frac in [0,1] and base+1 < n when possible
        if (policy == OobPolicy::Clamp && b >= n - 1) b = n - 2;
        c.base[a] = b;
        c.frac[a] = t - static_cast<double>(b);
    }
    return c;
}

inline bool inside(const Dims &dims, std::int64_t i, std::int64_t j, std::int64_t k) {
    return i >= 0 && j >= 0 && k >= 0 && i < dims.nx && j < dims.ny && k < dims.nz;
}

/// Weighted sum over the 8 corners. fetch(i,j,k) is only called for in-range corners;
/// out-of-range corners contribute zero (the Zero policy; Clamp never produces them).
template <class T, class Fetch>
T blend(const Cell &c, const Dims &dims, Fetch &&fetch) {
    T acc{};
    for (int dk = 0; dk < 2; ++dk) {
        const double wz = dk ? c.frac[2] : 1.0 - c.frac[2];
        for (int dj = 0; dj < 2; ++dj) {
            const double wy = dj ? c.frac[1] : 1.0 - c.frac[1];
            for (int di = 0; di < 2; ++di) {
                const double wx = di ? c.frac[0] : 1.0 - c.frac[0];
                const double w = wx * wy * wz;
                if (w == 0.0) continue;
                const std::int64_t i = c.base[0] + di, j = c.base[1] + dj, k = c.base[2] + dk;
                if (!inside(dims, i, j, k)) continue;
                acc += fetch(i, j, k) * w;
            }
        }
    }
    return acc;
}

/// Value and partial derivatives with respect to the continuous index.
template <class T>
struct BlendWithDerivative {
    T value{};
    T d[3]{};
};

template <class T, class Fetch>
BlendWithDerivative<T> blend_with_derivative(const Cell &c, const Dims &dims, Fetch &&fetch) {
    BlendWithDerivative<T> out;
    for (int dk = 0; dk < 2; ++dk) {
        const double wz = dk ? c.frac[2] : 1.0 - c.frac[2];
        const double gz = dk ? 1.0 : -1.0;
        for (int dj = 0; dj < 2; ++dj) {
            const double wy = dj ? c.frac[1] : 1.0 - c.frac[1];
            const double gy = dj ? 1.0 : -1.0;
            for (int di = 0; di < 2; ++di) {
                const double wx = di ? c.frac[0] : 1.0 - c.frac[0];
                const double gx = di ? 1.0 : -1.0;
                const std::int64_t i = c.base[0] + di, j = c.base[1] + dj, k = c.base[2] + dk;
                if (!inside(dims, i, j, k)) continue;
                const T v = fetch(i, j, k);
                out.value += v * (wx * wy * wz);
                out.d[0] += v * (gx * wy * wz);
                out.d[1] += v * (wx * gy * wz);
                out.d[2] += v * (wx * wy * gz);
            }
        }
    }
    for (int a = 0; a < 3; ++a)
        if (c.flat[a]) out.d[a] = T{};
    return out;
}

} // namespace seqreg::interp
