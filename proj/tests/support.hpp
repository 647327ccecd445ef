#pragma once

// Shared fixtures for the unit tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "seqreg/geometry.hpp"
#include "seqreg/volume.hpp"

namespace testing {

using namespace seqreg;

inline Geometry make_geometry(std::int64_t nx, std::int64_t ny, std::int64_t nz, Vec3 spacing = {1, 1, 1},
                              Vec3 origin = {}, Mat3 direction = Mat3::identity()) {
    Geometry g;
    g.dims = Dims{nx, ny, nz};
    g.spacing = spacing;
    g.origin = origin;
    g.direction = direction;
    return g;
}

/// Orthonormal rotation used for oblique-geometry tests.
inline Mat3 oblique_direction(double a = 0.3, double b = -0.2, double c = 0.45) {
    auto rx = Mat3::identity(), ry = Mat3::identity(), rz = Mat3::identity();
    rx(1, 1) = std::cos(a), rx(1, 2) = -std::sin(a), rx(2, 1) = std::sin(a), rx(2, 2) = std::cos(a);
    ry(0, 0) = std::cos(b), ry(0, 2) = std::sin(b), ry(2, 0) = -std::sin(b), ry(2, 2) = std::cos(b);
    rz(0, 0) = std::cos(c), rz(0, 1) = -std::sin(c), rz(1, 0) = std::sin(c), rz(1, 1) = std::cos(c);
    return rz * ry * rx;
}

template <class F>
Volume3D make_volume(const Geometry &g, F &&f) {
    Volume3D v(g);
    for (std::int64_t k = 0; k < g.dims.nz; ++k)
        for (std::int64_t j = 0; j < g.dims.ny; ++j)
            for (std::int64_t i = 0; i < g.dims.nx; ++i) v.at(i, j, k) = f(g.index_to_world(i, j, k));
    return v;
}

inline Volume3D random_volume(const Geometry &g, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Volume3D v(g);
    for (auto &x : v.values()) x = u(rng);
    return v;
}

inline VectorField3D random_field(const Geometry &g, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    VectorField3D f(g);
    for (auto &v : f.values()) v = Vec3{u(rng), u(rng), u(rng)};
    return f;
}

/// Smooth analytic test image: a few Gaussian blobs of different signs.
inline Volume3D smooth_blobs(const Geometry &g, std::uint64_t seed, int count = 4) {
    std::mt19937_64 rng(seed);
    const Vec3 lo = g.index_to_world(0, 0, 0);
    const Vec3 hi = g.index_to_world(g.dims.nx - 1, g.dims.ny - 1, g.dims.nz - 1);
    struct Blob {
        Vec3 c;
        double w, amp;
    };
    std::vector<Blob> blobs;
    std::uniform_real_distribution<double> t(0.25, 0.75), a(-1.0, 1.0), w(1.5, 3.0);
    for (int b = 0; b < count; ++b)
        blobs.push_back({lo + Vec3{t(rng) * (hi.x - lo.x), t(rng) * (hi.y - lo.y), t(rng) * (hi.z - lo.z)},
                         w(rng), a(rng)});
    return make_volume(g, [&](const Vec3 &p) {
        double v = 0.0;
        for (const auto &b : blobs) {
            const Vec3 d = p - b.c;
            v += b.amp * std::exp(-dot(d, d) / (2.0 * b.w * b.w));
        }
        return v;
    });
}

inline BinaryMask box_mask(const Geometry &g, std::int64_t lo, std::int64_t hi) {
    BinaryMask m(g);
    for (std::int64_t k = 0; k < g.dims.nz; ++k)
        for (std::int64_t j = 0; j < g.dims.ny; ++j)
            for (std::int64_t i = 0; i < g.dims.nx; ++i)
                m.set(g.linear(i, j, k), i >= lo && i <= hi && j >= lo && j <= hi && k >= lo && k <= hi);
    return m;
}

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string &tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("seqreg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;
    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace testing
