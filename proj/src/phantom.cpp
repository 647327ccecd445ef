#include "seqreg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "seqreg/error.hpp"
#include "seqreg/transform.hpp"

namespace seqreg {

double SplitMix64::normal() {
    if (spare_) {
        const double v = *spare_;
        spare_.reset();
        return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    return r * std::cos(t);
}

Geometry PhantomSpec::geometry() const {
    Geometry g;
    g.dims = dims;
    g.spacing = Vec3{spacing, spacing, spacing};
    return g;
}

namespace {

Vec3 gland_center(const PhantomSpec &spec) {
    const auto g = spec.geometry();
    return g.index_to_world(Vec3{0.5 * static_cast<double>(spec.dims.nx - 1), 0.5 * static_cast<double>(spec.dims.ny - 1),
                                 0.5 * static_cast<double>(spec.dims.nz - 1)});
}

// Approximate signed distance (mm) to the ellipsoid surface; exact zero level set.
double gland_distance(const Vec3 &p, const Vec3 &center, const Vec3 &axes) {
    const Vec3 q = p - center;
    const double r = std::sqrt((q.x / axes.x) * (q.x / axes.x) + (q.y / axes.y) * (q.y / axes.y) +
                               (q.z / axes.z) * (q.z / axes.z));
    return (r - 1.0) * std::min({axes.x, axes.y, axes.z});
}

double inside_weight(double distance, double width) { return 1.0 / (1.0 + std::exp(distance / width)); }


double round_to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

} // namespace

void PhantomSpec::validate() const {
    geometry().validate();
    if (!(edge_width > 0.0) || !(noise_sigma >= 0.0)) throw InputError("phantom: edge width must be > 0, noise >= 0");
    for (int a = 0; a < 3; ++a)
        if (!(gland_semi_axes[a] > 0.0)) throw InputError("phantom: gland semi-axes must be > 0");
    for (const auto &l : lesions) {
        if (l.radius < 2.0 * spacing) throw InputError("phantom: lesion radius must be >= 2 voxels");
        // in axis-scaled coordinates the lesion fits in a ball of radius r / min_axis
        const double d = gland_distance(l.center_offset, Vec3{}, gland_semi_axes);
        if (d + l.radius > 0.0) throw InputError("phantom: lesion extends outside the gland");
    }
}

PhantomCase generate_phantom(const PhantomSpec &spec, const VectorField3D *deformation) {
    spec.validate();
    const auto geom = spec.geometry();
    if (deformation != nullptr && !same_lattice(deformation->geometry(), geom))
        throw InputError("phantom: deformation geometry differs from the phantom lattice");
    const Vec3 center = gland_center(spec);

    PhantomCase out{Volume3D(geom), Volume3D(geom), BinaryMask(geom), {}, {}, std::nullopt};
    for (std::size_t l = 0; l < spec.lesions.size(); ++l) {
        out.t2_lesions.emplace_back(geom);
        out.adc_lesions.emplace_back(geom);
    }

    auto render = [&](const ContrastProfile &c, const Vec3 &p, std::vector<BinaryMask> *lesion_masks,
                      std::size_t n, bool *in_gland) {
        const double dg = gland_distance(p, center, spec.gland_semi_axes);
        double v = c.background + (c.gland - c.background) * inside_weight(dg, spec.edge_width);
        if (in_gland != nullptr) *in_gland = dg <= 0.0;
        for (std::size_t l = 0; l < spec.lesions.size(); ++l) {
            const auto &les = spec.lesions[l];
            const double dl = norm(p - (center + les.center_offset)) - les.radius;
            v += (c.lesion - c.gland) * inside_weight(dl, spec.edge_width);
            if (lesion_masks != nullptr) (*lesion_masks)[l].set(n, dl <= 0.0);
        }
        return v;
    };

    for (std::int64_t k = 0; k < geom.dims.nz; ++k)
        for (std::int64_t j = 0; j < geom.dims.ny; ++j)
            for (std::int64_t i = 0; i < geom.dims.nx; ++i) {
                const std::size_t n = geom.linear(i, j, k);
                const Vec3 x = geom.index_to_world(i, j, k);
                bool gland = false;
                out.t2_like[n] = render(spec.t2, x, &out.t2_lesions, n, &gland);
                out.gland_mask.set(n, gland);
                const Vec3 xa = deformation != nullptr ? x + (*deformation)[n] : x;
                out.adc_like[n] = render(spec.adc, xa, &out.adc_lesions, n, nullptr);
            }

    // independent noise streams per modality
    SplitMix64 rng_t2(spec.seed * 2 + 0);
    SplitMix64 rng_adc(spec.seed * 2 + 1);
    for (std::size_t n = 0; n < geom.voxel_count(); ++n) {
        out.t2_like[n] = round_to_float(out.t2_like[n] + spec.noise_sigma * rng_t2.normal());
        out.adc_like[n] = round_to_float(out.adc_like[n] + spec.noise_sigma * rng_adc.normal());
    }
    if (deformation != nullptr) out.ground_truth = *deformation;
    return out;
}

VectorField3D generate_smooth_deformation(const Geometry &geom, double max_amp, std::uint64_t seed) {
    geom.validate();
    if (!(max_amp >= 0.0) || !std::isfinite(max_amp)) throw InputError("smooth deformation: max_amp must be >= 0");
    VectorField3D field(geom);
    if (max_amp == 0.0) return field;

    const Vec3 extent{geom.spacing.x * static_cast<double>(geom.dims.nx - 1),
                      geom.spacing.y * static_cast<double>(geom.dims.ny - 1),
                      geom.spacing.z * static_cast<double>(geom.dims.nz - 1)};
    SplitMix64 rng(seed);
    for (int attempt = 0; attempt < 100; ++attempt) {
        struct Mode {
            Vec3 direction;
            double amplitude;
            double freq[3];
            double phase[3];
        };
        const auto count = rng.integer(3, 6);
        std::vector<Mode> modes;
        for (std::int64_t m = 0; m < count; ++m) {
            Mode mode{};
            Vec3 d{rng.normal(), rng.normal(), rng.normal()};
            while (norm(d) < 1e-6) d = Vec3{rng.normal(), rng.normal(), rng.normal()};
            mode.direction = d * (1.0 / norm(d));
            mode.amplitude = 0.5 + rng.uniform();
            for (int a = 0; a < 3; ++a) {
                mode.freq[a] = 0.25 + 0.75 * rng.uniform(); // cycles across the field of view
                mode.phase[a] = 2.0 * std::numbers::pi * rng.uniform();
            }
            modes.push_back(mode);
        }
        double max_norm = 0.0;
        for (std::int64_t k = 0; k < geom.dims.nz; ++k)
            for (std::int64_t j = 0; j < geom.dims.ny; ++j)
                for (std::int64_t i = 0; i < geom.dims.nx; ++i) {
                    const double t[3] = {geom.spacing.x * static_cast<double>(i) / extent.x,
                                         geom.spacing.y * static_cast<double>(j) / extent.y,
                                         geom.spacing.z * static_cast<double>(k) / extent.z};
                    Vec3 u;
                    for (const auto &mode : modes) {
                        double s = mode.amplitude;
                        for (int a = 0; a < 3; ++a) s *= std::sin(2.0 * std::numbers::pi * mode.freq[a] * t[a] + mode.phase[a]);
                        u += mode.direction * s;
                    }
                    // modes are defined in index axes; map to world through the direction matrix
                    u = geom.direction * u;
                    field.at(i, j, k) = u;
                    max_norm = std::max(max_norm, norm(u));
                }
        if (!(max_norm > 0.0)) continue;
        const double scale = max_amp / max_norm;
        for (auto &v : field.values()) v *= scale;
        const auto det = jacobian_determinant(field);
        const bool folded = std::any_of(det.values().begin(), det.values().end(), [](double d) { return d <= 0.0; });
        if (!folded) return field;
    }
    throw NumericalError("smooth deformation: no fold-free field within 100 draws");
}

} // namespace seqreg
