#pragma once

#include "fibersim/fiber.hpp"

namespace fibersim {

struct StokesKernelParams {
  double mu = 1.0;
  double b = 0.0;              // RPY sphere radius
  double doublet_coeff = 0.0;  // 2 b^2 / 3
};

// b = e^{3/2} eps L / 4 and doublet coefficient e^3 (eps L)^2 / 24.
StokesKernelParams kernel_params(const FiberParams& fp, double mu);

M3 local_drag_matrix(const V3& tau, double c, double mu);
V3 local_drag_velocity(const V3& tau, double c, const V3& f, double mu);

// Stokeslet plus doublet with coefficient dcoef, including the 1/(8 pi mu) factor.
M3 stokeslet_doublet(const V3& R, double dcoef, double mu);
M3 rpy_kernel(const V3& x, const V3& y, double b, double mu);

// Dense 3N x 3N finite-part operator for one fiber.
Mat finite_part_matrix(const SpectralWorkspace& ws, const Nx3& X, const Nx3& tau, double mu);
Nx3 finite_part_velocity(const SpectralWorkspace& ws, const Nx3& X, const Nx3& tau, const Nx3& f, double mu);

// Block-diagonal local drag operator for one fiber.
Mat local_drag_operator(const Nx3& tau, const Vec& c, double mu);

// Velocity at x from a fiber's nodes with weights w (quadrature on the node set).
V3 interfiber_velocity_direct(const V3& x, const Nx3& X, const Nx3& f, const Vec& w, const StokesKernelParams& kp);

// Centerline velocity at arclength s_star from nodal force density.
V3 centerline_velocity(const SpectralWorkspace& ws, const FiberParams& fp, const Nx3& X, const Nx3& tau,
                       const Nx3& f, const Nx3& fp_velocity, double s_star, double mu);

// Linear blend: 1 at d <= 2b (centerline), 0 at d >= 4b (interaction).
double centerline_weight(double d_hat, double b);
V3 blended_velocity(const V3& centerline, const V3& interaction, double d_hat, double b);

// Adaptive RPY line integral along a fiber given by a callable X(s), f(s).
struct LineIntegralResult {
  V3 value;
  double error_estimate;
};
LineIntegralResult rpy_line_integral_straight(double s, double L, const V3& tau, const V3& f, double b, double mu,
                                              double rtol);
LineIntegralResult rpy_line_integral(double s, const SpectralWorkspace& ws, const Nx3& X, const Nx3& f, double b,
                                     double mu, double rtol);

}  // namespace fibersim
