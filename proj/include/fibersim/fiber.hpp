#pragma once

#include <utility>

#include "fibersim/spectral.hpp"

namespace fibersim {

struct FiberParams {
  double L = 2.0;
  double eps = 1e-3;
  double kappa = 1.0;
  double delta = 0.1;
  int N = 16;
  bool ellipsoidal = false;  // use c = -ln(eps^2) everywhere
};

void validate(const FiberParams& p);

struct FiberState {
  Nx3 X;
  Nx3 tau;
};

// Builds a state from tangents (normalized here) and the position of the first node.
FiberState fiber_from_tangents(const SpectralWorkspace& ws, const Nx3& tau, const V3& X0);
// Builds a state from positions; tangents are the normalized spectral derivative.
FiberState fiber_from_positions(const SpectralWorkspace& ws, const Nx3& X);

double regularized_drag_coeff(double s, const FiberParams& p);
Vec drag_coeffs(const Vec& s, const FiberParams& p);

Nx3 bending_force(const SpectralWorkspace& ws, const Nx3& X, double kappa);

std::pair<V3, V3> tangent_frame(const V3& tau);

double max_tangent_deviation(const Nx3& tau);

}  // namespace fibersim
