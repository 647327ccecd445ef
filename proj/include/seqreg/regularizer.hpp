#pragma once

#include <cstddef>

#include "seqreg/transform.hpp"
#include "seqreg/volume.hpp"

namespace seqreg {

/// Curvature energy of a control grid and its gradient with respect to every control vector.
struct CurvatureEvaluation {
    double energy = 0.0;
    VectorField3D gradient;
};

/// 7-point Laplacian of each displacement component on the control lattice (physical spacing,
/// replicate boundary).
VectorField3D curvature_laplacian(const DisplacementGrid &grid);

/// energy = 1/2 sum_p |Lap u(p)|^2 * cell volume; gradient = cell volume * Lap(Lap u).
/// The replicate-boundary Laplacian is symmetric, so the gradient is exact for the energy.
CurvatureEvaluation curvature_evaluate(const DisplacementGrid &grid);

/// Max |analytic - fd| / max |fd| over the checked gradient components. When `max_components`
/// is nonzero, a deterministic evenly strided subset of that many components is checked.
double curvature_gradient_check(const DisplacementGrid &grid, double h, std::size_t max_components = 0);

} // namespace seqreg
