#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace seqreg {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr double &operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 &operator+=(const Vec3 &o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3 &operator-=(const Vec3 &o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3 &operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend constexpr Vec3 operator+(Vec3 a, const Vec3 &b) { return a += b; }
    friend constexpr Vec3 operator-(Vec3 a, const Vec3 &b) { return a -= b; }
    friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
    friend constexpr Vec3 operator-(const Vec3 &a) { return {-a.x, -a.y, -a.z}; }
    friend constexpr bool operator==(const Vec3 &, const Vec3 &) = default;
};

constexpr double dot(const Vec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3 &a) { return std::sqrt(dot(a, a)); }
constexpr Vec3 hadamard(const Vec3 &a, const Vec3 &b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
inline bool is_finite(const Vec3 &a) { return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z); }

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static constexpr Mat3 identity() { return {}; }

    constexpr double operator()(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }
    constexpr double &operator()(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }

    constexpr Vec3 column(int c) const { return {(*this)(0, c), (*this)(1, c), (*this)(2, c)}; }

    constexpr Mat3 transposed() const {
        Mat3 t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
        return t;
    }

    friend constexpr Vec3 operator*(const Mat3 &a, const Vec3 &v) {
        return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z,
                a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
                a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
    }
    friend constexpr Mat3 operator*(const Mat3 &a, const Mat3 &b) {
        Mat3 p;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                p(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c) + a(r, 2) * b(2, c);
        return p;
    }
    friend constexpr bool operator==(const Mat3 &, const Mat3 &) = default;
};

inline double determinant(const Mat3 &a) {
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

struct Dims {
    std::int64_t nx = 0, ny = 0, nz = 0;

    constexpr std::int64_t operator[](int i) const { return i == 0 ? nx : (i == 1 ? ny : nz); }
    constexpr std::size_t count() const { return static_cast<std::size_t>(nx * ny * nz); }
    friend constexpr bool operator==(const Dims &, const Dims &) = default;
};

/// Voxel lattice in world space. Node-centered: world(i) = origin + direction * (spacing .* i).
/// Direction columns are the world-space axis directions of the index axes.
struct Geometry {
    Dims dims;
    Vec3 spacing{1, 1, 1};
    Vec3 origin;
    Mat3 direction;

    /// Throws InputError when spacing, dims or direction violate the lattice invariants.
    void validate() const;

    constexpr std::size_t voxel_count() const { return dims.count(); }

    constexpr std::size_t linear(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return static_cast<std::size_t>(i + dims.nx * (j + dims.ny * k));
    }

    Vec3 index_to_world(const Vec3 &idx) const { return origin + direction * hadamard(spacing, idx); }

    Vec3 index_to_world(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return index_to_world(Vec3{static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)});
    }

    /// Continuous index of a world point (direction assumed orthonormal).
    Vec3 world_to_index(const Vec3 &p) const {
        const Vec3 local = direction.transposed() * (p - origin);
        return {local.x / spacing.x, local.y / spacing.y, local.z / spacing.z};
    }

    double voxel_volume() const { return spacing.x * spacing.y * spacing.z; }

    friend bool operator==(const Geometry &, const Geometry &) = default;
};

bool same_lattice(const Geometry &a, const Geometry &b, double tol = 1e-9);

} // namespace seqreg
