// Serial reference against the OpenMP path for every kernel.

#include <omp.h>

#include <random>

#include <doctest.h>

#include "seqreg/kernels.hpp"
#include "seqreg/volume.hpp"
#include "support.hpp"

using namespace seqreg;
using namespace testing;
namespace k = seqreg::kernels;

namespace {

struct ThreadCount {
    explicit ThreadCount(int n) : saved_(omp_get_max_threads()) { omp_set_num_threads(n); }
    ~ThreadCount() { omp_set_num_threads(saved_); }
    int saved_;
};

const Geometry kGeom = make_geometry(17, 13, 11, {0.9, 1.2, 0.7}, {3, -2, 5}, oblique_direction());

} // namespace

TEST_CASE("compensated sum recovers cancelled terms") {
    const std::vector<double> v{1e16, 1.0, -1e16, 1.0};
    CHECK(k::sum(v, k::Exec::Serial) == 2.0);
    CHECK(k::sum(v, k::Exec::Parallel) == 2.0);
    CHECK(k::sum(std::vector<double>{}, k::Exec::Parallel) == 0.0);
}

TEST_CASE("parallel sum is bit-identical to serial for any thread count") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(100003);
    for (auto &x : v) x = u(rng) * std::pow(10.0, u(rng) * 8);
    const double ref = k::sum(v, k::Exec::Serial);
    for (int threads : {1, 2, 3, 4, 7, 16}) {
        ThreadCount tc(threads);
        CHECK(k::sum(v, k::Exec::Parallel) == ref);
    }
}

TEST_CASE("convolve_axis agrees between paths") {
    const auto v = random_volume(kGeom, 1);
    const auto kernel = gaussian_kernel(1.3);
    for (int axis = 0; axis < 3; ++axis) {
        std::vector<double> a(v.size()), b(v.size());
        k::convolve_axis(v.values(), a, kGeom.dims, axis, kernel, k::Exec::Serial);
        k::convolve_axis(v.values(), b, kGeom.dims, axis, kernel, k::Exec::Parallel);
        CHECK(a == b);
    }
}

TEST_CASE("gradient and jacobian kernels agree between paths") {
    const auto v = random_volume(kGeom, 2);
    VectorField3D ga(kGeom), gb(kGeom);
    k::gradient_central(v, nullptr, ga, k::Exec::Serial);
    k::gradient_central(v, nullptr, gb, k::Exec::Parallel);
    CHECK(ga == gb);

    const auto u = random_field(kGeom, 3, 0.2);
    Volume3D da(kGeom), db(kGeom);
    k::jacobian_determinant(u, da, k::Exec::Serial);
    k::jacobian_determinant(u, db, k::Exec::Parallel);
    CHECK(da == db);
}

TEST_CASE("sample_lattice agrees between paths") {
    const auto v = random_volume(kGeom, 4);
    auto ref = kGeom;
    ref.origin += Vec3{0.3, -0.7, 0.2};
    auto map = [](const Vec3 &p) { return p + Vec3{0.1 * std::sin(p.y), 0.2, -0.1}; };
    std::vector<double> a(ref.voxel_count()), b(ref.voxel_count());
    k::sample_lattice(v, ref, OobPolicy::Zero, map, a, k::Exec::Serial);
    k::sample_lattice(v, ref, OobPolicy::Zero, map, b, k::Exec::Parallel);
    CHECK(a == b);
}

TEST_CASE("ngf kernels agree between paths and across thread counts") {
    const auto fixed = random_volume(kGeom, 5), moving = random_volume(kGeom, 6);
    const auto gm = gradient_central(moving);
    const auto gf = gradient_central(fixed);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> t(-1.0, 18.0);
    std::vector<Vec3> fixed_grad(5000), points(5000);
    for (std::size_t n = 0; n < points.size(); ++n) {
        fixed_grad[n] = gf[n % gf.size()];
        points[n] = kGeom.index_to_world(Vec3{t(rng), t(rng) * 0.8, t(rng) * 0.6});
    }
    std::vector<double> ia(points.size()), ib(points.size());
    std::vector<Vec3> da(points.size()), db(points.size());
    const double sa = k::ngf_terms(fixed_grad, points, gm, OobPolicy::Zero, 0.1, ia, da, k::Exec::Serial);
    for (int threads : {1, 3, 8}) {
        ThreadCount tc(threads);
        const double sb = k::ngf_terms(fixed_grad, points, gm, OobPolicy::Zero, 0.1, ib, db, k::Exec::Parallel);
        CHECK(sa == sb);
        CHECK(ia == ib);
        CHECK(da == db);
    }
    std::vector<double> ca(points.size()), cb(points.size());
    k::ngf_cosine(fixed_grad, points, gm, OobPolicy::Clamp, 0.1, ca, da, k::Exec::Serial);
    k::ngf_cosine(fixed_grad, points, gm, OobPolicy::Clamp, 0.1, cb, db, k::Exec::Parallel);
    CHECK(ca == cb);
    CHECK(da == db);
}

TEST_CASE("ngf cosine squared matches the integrand") {
    const auto gm = gradient_central(random_volume(kGeom, 8));
    const auto gf = gradient_central(random_volume(kGeom, 9));
    std::vector<Vec3> points(gf.size());
    for (std::size_t n = 0; n < points.size(); ++n) points[n] = kGeom.index_to_world(Vec3{0.5, 0.25, 0.75}) + gm[n] * 0.1;
    std::vector<double> integrand(points.size()), cosine(points.size());
    std::vector<Vec3> di(points.size()), dc(points.size());
    k::ngf_terms(gf.values(), points, gm, OobPolicy::Zero, 0.05, integrand, di, k::Exec::Serial);
    k::ngf_cosine(gf.values(), points, gm, OobPolicy::Zero, 0.05, cosine, dc, k::Exec::Serial);
    for (std::size_t n = 0; n < points.size(); ++n) {
        CHECK(integrand[n] == doctest::Approx(1.0 - cosine[n] * cosine[n]).epsilon(1e-12).scale(1.0));
        // d(1 - c^2) = -2 c dc
        CHECK(norm(di[n] - dc[n] * (-2.0 * cosine[n])) <= 1e-12 * std::max(1.0, norm(di[n])));
    }
}

TEST_CASE("ngf cosine derivative with respect to the fixed gradient") {
    const auto gm = gradient_central(random_volume(kGeom, 11));
    const auto gf = gradient_central(random_volume(kGeom, 12));
    std::vector<Vec3> points(gf.size());
    for (std::size_t n = 0; n < points.size(); ++n) points[n] = kGeom.index_to_world(Vec3{0.5, 0.25, 0.75}) + gm[n] * 0.1;
    const std::size_t count = points.size();
    std::vector<double> c(count), cp(count), cm(count);
    std::vector<Vec3> dc(count), dfix(count), unused(count);
    k::ngf_cosine(gf.values(), points, gm, OobPolicy::Zero, 0.05, c, dc, k::Exec::Serial, dfix);
    std::vector<double> cq(count);
    std::vector<Vec3> dfix_par(count);
    k::ngf_cosine(gf.values(), points, gm, OobPolicy::Zero, 0.05, cq, unused, k::Exec::Parallel, dfix_par);
    CHECK(dfix == dfix_par);
    const double h = 1e-6;
    for (int a = 0; a < 3; ++a) {
        std::vector<Vec3> plus(gf.values().begin(), gf.values().end()), minus = plus;
        for (std::size_t n = 0; n < count; ++n) plus[n][a] += h, minus[n][a] -= h;
        k::ngf_cosine(plus, points, gm, OobPolicy::Zero, 0.05, cp, unused, k::Exec::Serial);
        k::ngf_cosine(minus, points, gm, OobPolicy::Zero, 0.05, cm, unused, k::Exec::Serial);
        for (std::size_t n = 0; n < count; ++n) CHECK(dfix[n][a] == doctest::Approx((cp[n] - cm[n]) / (2 * h)).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("laplacian agrees between paths") {
    const auto u = random_field(kGeom, 10);
    std::vector<Vec3> a(u.size()), b(u.size());
    k::laplacian(u.values(), kGeom.dims, kGeom.spacing, a, k::Exec::Serial);
    k::laplacian(u.values(), kGeom.dims, kGeom.spacing, b, k::Exec::Parallel);
    CHECK(a == b);
}

TEST_CASE("default exec switch") {
    const auto saved = k::default_exec();
    k::set_default_exec(k::Exec::Serial);
    CHECK(k::default_exec() == k::Exec::Serial);
    k::set_default_exec(k::Exec::Parallel);
    CHECK(k::default_exec() == k::Exec::Parallel);
    k::set_default_exec(saved);
}
