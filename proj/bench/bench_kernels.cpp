// Serial reference against OpenMP kernels on registration-sized inputs (64^3 image, 31^3 grid).
// Run with OMP_NUM_THREADS to vary the parallel width.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "seqreg/kernels.hpp"
#include "seqreg/volume.hpp"

using namespace seqreg;
namespace k = seqreg::kernels;

namespace {

Geometry cube(std::int64_t n) {
    Geometry g;
    g.dims = Dims{n, n, n};
    return g;
}

Volume3D noise_volume(const Geometry &g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Volume3D v(g);
    for (auto &x : v.values()) x = u(rng);
    return v;
}

VectorField3D noise_field(const Geometry &g, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    VectorField3D f(g);
    for (auto &v : f.values()) v = Vec3{u(rng), u(rng), u(rng)};
    return f;
}

k::Exec exec_of(const benchmark::State &state) { return state.range(0) ? k::Exec::Parallel : k::Exec::Serial; }

void BM_NgfTerms(benchmark::State &state) {
    const auto g = cube(64);
    const auto gm = gradient_central(noise_volume(g, 1));
    const auto gf = gradient_central(noise_volume(g, 2));
    std::vector<Vec3> points(g.voxel_count()), d(g.voxel_count());
    std::vector<double> integrand(g.voxel_count());
    const auto jitter = noise_field(g, 3, 0.4);
    for (std::size_t n = 0; n < points.size(); ++n)
        points[n] = g.index_to_world(static_cast<std::int64_t>(n % 64), static_cast<std::int64_t>((n / 64) % 64),
                                     static_cast<std::int64_t>(n / 4096)) +
                    jitter[n];
    for (auto _ : state)
        benchmark::DoNotOptimize(k::ngf_terms(gf.values(), points, gm, OobPolicy::Zero, 0.05, integrand, d, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(points.size()));
}

void BM_GradientCentral(benchmark::State &state) {
    const auto v = noise_volume(cube(64), 4);
    VectorField3D out(v.geometry());
    for (auto _ : state) {
        k::gradient_central(v, nullptr, out, exec_of(state));
        benchmark::ClobberMemory();
    }
}

void BM_ConvolveAxis(benchmark::State &state) {
    const auto v = noise_volume(cube(64), 5);
    std::vector<double> out(v.size());
    const auto kernel = gaussian_kernel(2.0);
    for (auto _ : state) {
        k::convolve_axis(v.values(), out, v.geometry().dims, 2, kernel, exec_of(state));
        benchmark::ClobberMemory();
    }
}

void BM_JacobianDeterminant(benchmark::State &state) {
    const auto f = noise_field(cube(64), 6, 0.1);
    Volume3D out(f.geometry());
    for (auto _ : state) {
        k::jacobian_determinant(f, out, exec_of(state));
        benchmark::ClobberMemory();
    }
}

void BM_CurvatureLaplacian(benchmark::State &state) {
    const auto g = cube(31);
    const auto u = noise_field(g, 7, 1.0);
    std::vector<Vec3> out(u.size());
    for (auto _ : state) {
        k::laplacian(u.values(), g.dims, g.spacing, out, exec_of(state));
        benchmark::ClobberMemory();
    }
}

void BM_CompensatedSum(benchmark::State &state) {
    const auto v = noise_volume(cube(64), 8);
    for (auto _ : state) benchmark::DoNotOptimize(k::sum(v.values(), exec_of(state)));
}

} // namespace

BENCHMARK(BM_NgfTerms)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientCentral)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvolveAxis)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_JacobianDeterminant)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CurvatureLaplacian)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CompensatedSum)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
