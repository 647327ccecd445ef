#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seqreg/geometry.hpp"

namespace seqreg {

enum class OobPolicy {
    Zero,  ///< lattice is padded with zeros; far-outside points sample 0
    Clamp, ///< continuous index clamped onto the lattice
};

/// Scalar volume, x-fastest voxel ordering.
class Volume3D {
public:
    Volume3D() = default;
    explicit Volume3D(Geometry geometry, double fill = 0.0);
    Volume3D(Geometry geometry, std::vector<double> voxels);

    const Geometry &geometry() const { return geometry_; }
    std::size_t size() const { return voxels_.size(); }

    std::span<const double> values() const { return voxels_; }
    std::span<double> values() { return voxels_; }

    double operator[](std::size_t n) const { return voxels_[n]; }
    double &operator[](std::size_t n) { return voxels_[n]; }
    double at(std::int64_t i, std::int64_t j, std::int64_t k) const { return voxels_[geometry_.linear(i, j, k)]; }
    double &at(std::int64_t i, std::int64_t j, std::int64_t k) { return voxels_[geometry_.linear(i, j, k)]; }

    /// Throws InputError if any voxel is NaN or infinite.
    void require_finite() const;

    friend bool operator==(const Volume3D &, const Volume3D &) = default;

private:
    Geometry geometry_;
    std::vector<double> voxels_;
};

/// {0,1} volume used for the registration domain and lesion annotations.
class BinaryMask {
public:
    BinaryMask() = default;
    explicit BinaryMask(Geometry geometry);
    BinaryMask(Geometry geometry, std::vector<std::uint8_t> voxels);

    const Geometry &geometry() const { return geometry_; }
    std::size_t size() const { return voxels_.size(); }

    std::span<const std::uint8_t> values() const { return voxels_; }
    std::span<std::uint8_t> values() { return voxels_; }

    bool operator[](std::size_t n) const { return voxels_[n] != 0; }
    bool at(std::int64_t i, std::int64_t j, std::int64_t k) const { return voxels_[geometry_.linear(i, j, k)] != 0; }
    void set(std::size_t n, bool on) { voxels_[n] = on ? 1 : 0; }

    std::size_t count() const;

    friend bool operator==(const BinaryMask &, const BinaryMask &) = default;

private:
    Geometry geometry_;
    std::vector<std::uint8_t> voxels_;
};

/// One world-space vector per voxel (gradients, displacements).
class VectorField3D {
public:
    VectorField3D() = default;
    explicit VectorField3D(Geometry geometry);
    VectorField3D(Geometry geometry, std::vector<Vec3> vectors);

    const Geometry &geometry() const { return geometry_; }
    std::size_t size() const { return vectors_.size(); }

    std::span<const Vec3> values() const { return vectors_; }
    std::span<Vec3> values() { return vectors_; }

    const Vec3 &operator[](std::size_t n) const { return vectors_[n]; }
    Vec3 &operator[](std::size_t n) { return vectors_[n]; }
    const Vec3 &at(std::int64_t i, std::int64_t j, std::int64_t k) const { return vectors_[geometry_.linear(i, j, k)]; }
    Vec3 &at(std::int64_t i, std::int64_t j, std::int64_t k) { return vectors_[geometry_.linear(i, j, k)]; }

    friend bool operator==(const VectorField3D &, const VectorField3D &) = default;

private:
    Geometry geometry_;
    std::vector<Vec3> vectors_;
};

BinaryMask threshold(const Volume3D &vol, double level);
Volume3D to_volume(const BinaryMask &mask);

// Sampling

double sample_trilinear(const Volume3D &vol, const Vec3 &world, OobPolicy policy);
Vec3 sample_trilinear(const VectorField3D &field, const Vec3 &world, OobPolicy policy);

/// Sampled vector and its derivative with respect to the world point.
/// jacobian(r, c) = d value_r / d world_c. At cell faces the derivative of the upper cell is used.
struct VectorSample {
    Vec3 value;
    Mat3 jacobian{std::array<double, 9>{0, 0, 0, 0, 0, 0, 0, 0, 0}};
};
VectorSample sample_trilinear_with_jacobian(const VectorField3D &field, const Vec3 &world, OobPolicy policy);

// Filters

/// Central differences in physical space, one-sided on the boundary. With a mask, voxels
/// outside it receive a zero vector (stencils still read unmasked neighbours).
VectorField3D gradient_central(const Volume3D &vol, const BinaryMask *mask = nullptr);

/// Separable Gaussian (sigma in mm), truncated at 3 sigma, renormalised, replicate edges.
Volume3D gaussian_smooth(const Volume3D &vol, double sigma_mm);

/// Normalised 1D kernel for a given sigma expressed in voxels; radius = ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma_voxels);

/// 2x mean pooling per axis (odd trailing voxels dropped), spacing doubled.
Volume3D downsample2(const Volume3D &vol);
/// Mean pooling followed by a >= 0.5 threshold.
BinaryMask downsample2(const BinaryMask &mask);
Geometry downsample2(const Geometry &geom);

Volume3D resample_to(const Volume3D &vol, const Geometry &ref, OobPolicy policy);

struct IndexBox {
    std::int64_t lo[3]{0, 0, 0};
    std::int64_t hi[3]{-1, -1, -1}; ///< inclusive

    bool empty() const { return hi[0] < lo[0]; }
};
IndexBox bounding_box(const BinaryMask &mask);
Vec3 centroid(const BinaryMask &mask);

} // namespace seqreg
