#include <cmath>
#include <numbers>

#include <doctest.h>

#include "seqreg/error.hpp"
#include "seqreg/evalstat.hpp"
#include "seqreg/phantom.hpp"
#include "seqreg/transform.hpp"
#include "support.hpp"

using namespace seqreg;
using namespace testing;

namespace {

bool subset(const BinaryMask &a, const BinaryMask &b) {
    for (std::size_t n = 0; n < a.size(); ++n)
        if (a[n] && !b[n]) return false;
    return true;
}

double max_norm(const VectorField3D &f) {
    double m = 0.0;
    for (const auto &v : f.values()) m = std::max(m, norm(v));
    return m;
}

} // namespace

TEST_CASE("phantom generation is deterministic in the seed") {
    PhantomSpec spec;
    spec.seed = 7;
    const auto a = generate_phantom(spec), b = generate_phantom(spec);
    CHECK(a.t2_like == b.t2_like);
    CHECK(a.adc_like == b.adc_like);
    CHECK(a.gland_mask == b.gland_mask);
    spec.seed = 8;
    const auto c = generate_phantom(spec);
    CHECK_FALSE(a.t2_like == c.t2_like);
    CHECK(a.gland_mask == c.gland_mask);
}

TEST_CASE("phantom masks") {
    const PhantomSpec spec;
    const auto p = generate_phantom(spec);
    REQUIRE(p.t2_lesions.size() == spec.lesions.size());
    REQUIRE(p.adc_lesions.size() == spec.lesions.size());
    for (std::size_t l = 0; l < spec.lesions.size(); ++l) {
        CHECK(p.t2_lesions[l].count() > 0);
        CHECK(subset(p.t2_lesions[l], p.gland_mask));
        CHECK(p.t2_lesions[l] == p.adc_lesions[l]);
        const double r = spec.lesions[l].radius;
        const double analytic = 4.0 / 3.0 * std::numbers::pi * r * r * r;
        // small spheres voxelize coarsely
        CHECK(std::abs(static_cast<double>(p.t2_lesions[l].count()) - analytic) < 0.25 * analytic);
    }
    const auto &s = spec.gland_semi_axes;
    const double ellipsoid = 4.0 / 3.0 * std::numbers::pi * s.x * s.y * s.z;
    CHECK(std::abs(static_cast<double>(p.gland_mask.count()) - ellipsoid) < 0.1 * ellipsoid);
    CHECK_FALSE(p.ground_truth.has_value());
}

TEST_CASE("phantom contrast follows the modality profiles") {
    PhantomSpec spec;
    spec.noise_sigma = 0.0;
    const auto p = generate_phantom(spec);
    const auto g = spec.geometry();
    const Vec3 center = g.index_to_world(Vec3{31.5, 31.5, 31.5});
    const auto at = [&](const Volume3D &v, const Vec3 &offset) { return sample_trilinear(v, center + offset, OobPolicy::Zero); };
    // gland interior away from lesions, lesion center, background corner; logistic tails shift
    // plateau values by a few hundredths
    const Vec3 gland{0, 0, 8}, lesion = spec.lesions[0].center_offset, bg{-28, -28, -28};
    CHECK(std::abs(at(p.t2_like, gland) - spec.t2.gland) < 0.02);
    CHECK(std::abs(at(p.t2_like, lesion) - spec.t2.lesion) < 0.02);
    CHECK(std::abs(at(p.t2_like, bg) - spec.t2.background) < 0.02);
    CHECK(std::abs(at(p.adc_like, gland) - spec.adc.gland) < 0.02);
    CHECK(std::abs(at(p.adc_like, lesion) - spec.adc.lesion) < 0.02);
    CHECK(std::abs(at(p.adc_like, bg) - spec.adc.background) < 0.02);
}

TEST_CASE("phantom noise has the requested spread") {
    PhantomSpec spec, clean;
    spec.noise_sigma = 0.05;
    clean.noise_sigma = 0.0;
    const auto a = generate_phantom(spec), b = generate_phantom(clean);
    double s2 = 0.0;
    for (std::size_t n = 0; n < a.t2_like.size(); ++n) s2 += std::pow(a.t2_like[n] - b.t2_like[n], 2);
    CHECK(std::sqrt(s2 / static_cast<double>(a.t2_like.size())) == doctest::Approx(0.05).epsilon(0.02));
}

TEST_CASE("phantom spec validation") {
    PhantomSpec spec;
    spec.lesions = {{{15.0, 0.0, 0.0}, 4.0}};
    CHECK_THROWS_AS(generate_phantom(spec), InputError);
    spec.lesions = {{{0.0, 0.0, 0.0}, 1.5}};
    CHECK_THROWS_AS(generate_phantom(spec), InputError);
    spec.lesions = {};
    CHECK_NOTHROW(generate_phantom(spec));
    const VectorField3D wrong(make_geometry(8, 8, 8));
    CHECK_THROWS_AS(generate_phantom(PhantomSpec{}, &wrong), InputError);
}

TEST_CASE("deformed phantom equals the undeformed phantom warped by the field") {
    PhantomSpec spec;
    spec.noise_sigma = 0.0;
    const auto g = spec.geometry();
    const auto u = generate_smooth_deformation(g, 3.0, 5);
    const auto plain = generate_phantom(spec), moved = generate_phantom(spec, &u);
    REQUIRE(moved.ground_truth.has_value());
    CHECK(*moved.ground_truth == u);
    CHECK(moved.t2_like == plain.t2_like);
    const auto warped = warp(plain.adc_like, u, OobPolicy::Clamp);
    const auto inner = box_mask(g, 8, 55);
    double err = 0.0;
    for (std::size_t n = 0; n < warped.size(); ++n)
        if (inner[n]) err = std::max(err, std::abs(warped[n] - moved.adc_like[n]));
    // trilinear interpolation error of the logistic edges only
    CHECK(err < 0.1);
    for (std::size_t l = 0; l < spec.lesions.size(); ++l) {
        const auto w = warp_mask(plain.adc_lesions[l], u);
        CHECK(dice(w, moved.adc_lesions[l]) > 0.85);
    }
}

TEST_CASE("smooth deformation examples") {
    const auto g = PhantomSpec{}.geometry();
    SUBCASE("zero amplitude") {
        const auto u = generate_smooth_deformation(g, 0.0, 3);
        for (const auto &v : u.values()) CHECK(v == Vec3{});
    }
    SUBCASE("4 mm amplitude is exact and fold free") {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto u = generate_smooth_deformation(g, 4.0, seed);
            CHECK(max_norm(u) == doctest::Approx(4.0).epsilon(1e-12));
            BinaryMask all(g, std::vector<std::uint8_t>(g.voxel_count(), 1));
            CHECK(folding_fraction(u, all) == 0.0);
        }
    }
    SUBCASE("deterministic in the seed") {
        CHECK(generate_smooth_deformation(g, 2.0, 9) == generate_smooth_deformation(g, 2.0, 9));
        CHECK_FALSE(generate_smooth_deformation(g, 2.0, 9) == generate_smooth_deformation(g, 2.0, 10));
    }
    SUBCASE("negative amplitude") { CHECK_THROWS_AS(generate_smooth_deformation(g, -1.0, 1), InputError); }
}

TEST_CASE("SplitMix64 reference values") {
    // first outputs for seed 0 from the published reference implementation
    SplitMix64 r(0);
    CHECK(r.next() == 0xE220A8397B1DCDAFULL);
    CHECK(r.next() == 0x6E789E6AA1B965F4ULL);
    CHECK(r.next() == 0x06C45D188009454FULL);
    SplitMix64 u(42);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        const auto k = u.integer(-3, 4);
        CHECK(k >= -3);
        CHECK(k <= 4);
    }
}

TEST_CASE("SplitMix64 normals have unit moments") {
    SplitMix64 r(3);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
}
