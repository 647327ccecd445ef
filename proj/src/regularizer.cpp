#include "seqreg/regularizer.hpp"

#include <algorithm>
#include <cmath>

#include "seqreg/error.hpp"
#include "seqreg/kernels.hpp"

namespace seqreg {

VectorField3D curvature_laplacian(const DisplacementGrid &grid) {
    const auto &g = grid.geometry();
    VectorField3D lap(g);
    kernels::laplacian(grid.control.values(), g.dims, g.spacing, lap.values(), kernels::default_exec());
    return lap;
}

CurvatureEvaluation curvature_evaluate(const DisplacementGrid &grid) {
    const auto &g = grid.geometry();
    const auto exec = kernels::default_exec();
    const double cell = g.voxel_volume();
    const auto lap = curvature_laplacian(grid);

    std::vector<double> sq(lap.size());
    for (std::size_t n = 0; n < lap.size(); ++n) sq[n] = dot(lap[n], lap[n]);

    CurvatureEvaluation out;
    out.energy = 0.5 * cell * kernels::sum(sq, exec);
    out.gradient = VectorField3D(g);
    kernels::laplacian(lap.values(), g.dims, g.spacing, out.gradient.values(), exec);
    for (auto &v : out.gradient.values()) v *= cell;
    return out;
}

double curvature_gradient_check(const DisplacementGrid &grid, double h, std::size_t max_components) {
    if (!(h > 0.0)) throw InputError("curvature_gradient_check: step must be > 0");
    const auto analytic = curvature_evaluate(grid);
    const std::size_t total = 3 * grid.control.size();
    const std::size_t count = max_components == 0 ? total : std::min(total, max_components);
    const std::size_t stride = std::max<std::size_t>(1, total / count);

    DisplacementGrid probe = grid;
    double max_err = 0.0, max_fd = 0.0;
    for (std::size_t c = 0, seen = 0; c < total && seen < count; c += stride, ++seen) {
        Vec3 &v = probe.control[c / 3];
        const int axis = static_cast<int>(c % 3);
        const double orig = v[axis];
        v[axis] = orig + h;
        const double ep = curvature_evaluate(probe).energy;
        v[axis] = orig - h;
        const double em = curvature_evaluate(probe).energy;
        v[axis] = orig;
        const double fd = (ep - em) / (2.0 * h);
        max_err = std::max(max_err, std::abs(fd - analytic.gradient[c / 3][axis]));
        max_fd = std::max(max_fd, std::abs(fd));
    }
    return max_fd > 0.0 ? max_err / max_fd : max_err;
}

} // namespace seqreg
