#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "seqreg/geometry.hpp"
#include "seqreg/volume.hpp"

namespace seqreg {

/// Intensities of one synthetic modality.
struct ContrastProfile {
    double background = 0.0;
    double gland = 1.0;
    double lesion = 0.5;
};

struct LesionSpec {
    Vec3 center_offset; ///< mm, relative to the gland center
    double radius = 4.0;
};

struct PhantomSpec {
    Dims dims{64, 64, 64};
    double spacing = 1.0;
    Vec3 gland_semi_axes{18.0, 14.0, 12.0};
    std::vector<LesionSpec> lesions{{{-5.0, 3.0, 1.0}, 4.0}, {{6.0, -4.0, -2.0}, 3.0}};
    double edge_width = 0.7; ///< mm, logistic edge scale
    double noise_sigma = 0.02;
    ContrastProfile t2{0.2, 1.0, 0.35};  ///< gland bright, lesion dark
    ContrastProfile adc{0.9, 0.5, 0.15}; ///< gland mid, lesion dark, distinct background
    std::uint64_t seed = 1;

    Geometry geometry() const;
    /// Throws InputError when a lesion leaves the gland or is smaller than two voxels.
    void validate() const;
};

struct PhantomCase {
    Volume3D t2_like;
    Volume3D adc_like;
    BinaryMask gland_mask;
    std::vector<BinaryMask> t2_lesions;
    std::vector<BinaryMask> adc_lesions;
    /// When present, the adc-like image and its lesions are rendered at x + u(x).
    std::optional<VectorField3D> ground_truth;
};

/// Ellipsoidal gland with spherical lesions, logistic edges and independent Gaussian noise per
/// modality. With a displacement field u, the adc-like volume and its lesion masks are rendered
/// at x + u(x), i.e. they equal the undeformed phantom warped by u.
PhantomCase generate_phantom(const PhantomSpec &spec, const VectorField3D *deformation = nullptr);

/// Sum of 3-6 random low-frequency separable sine modes rescaled so max |u| = max_amp; fields
/// with any non-positive Jacobian determinant are redrawn (at most 100 attempts).
VectorField3D generate_smooth_deformation(const Geometry &geom, double max_amp, std::uint64_t seed);

/// Deterministic 64-bit generator (SplitMix64) with Box-Muller normals, so phantoms and
/// misalignment draws are identical on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    /// Uniform integer in [lo, hi].
    std::int64_t integer(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next() % span);
    }
    double normal();

private:
    std::uint64_t state_;
    std::optional<double> spare_;
};

} // namespace seqreg
