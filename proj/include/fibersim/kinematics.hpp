#pragma once

#include "fibersim/fiber.hpp"

namespace fibersim {

// Flattening convention for N x 3 arrays: entry (p, d) -> 3p + d.
Vec flatten(const Nx3& a);
Nx3 unflatten(const Vec& v);

struct KinematicOperators {
  int N = 0;
  Mat K;      // 3N x (2N+1)
  Mat Kstar;  // (2N+1) x 3N
  Mat J2N;    // 6N x 2(N-1), integral columns on the 2N grid (flattened)
};

KinematicOperators build_operators(const SpectralWorkspace& ws, const Nx3& tau);

// Omega = tau x d/ds(velocity), formed on the 2N grid and downsampled.
Nx3 compute_omega(const SpectralWorkspace& ws, const Nx3& tau_mid, const Nx3& velocity);

// Rodrigues rotation of each tangent by Omega*dt; X rebuilt with X(s_1) = anchor.
FiberState rotate_and_integrate(const SpectralWorkspace& ws, const Nx3& tau, const Nx3& Omega, double dt,
                                const V3& anchor);

V3 rodrigues(const V3& v, const V3& omega, double dt);

}  // namespace fibersim
