#include "fibersim/fiber.hpp"

#include <algorithm>
#include <cmath>

#include "fibersim/error.hpp"

namespace fibersim {

void validate(const FiberParams& p) {
  require(p.L > 0.0, ErrorCode::Parameter, "fiber length must be positive");
  require(p.eps > 0.0 && p.eps < 0.5, ErrorCode::Parameter, "slenderness must lie in (0, 0.5)");
  require(p.kappa >= 0.0, ErrorCode::Parameter, "bending modulus must be nonnegative");
  require(p.delta > 0.0 && p.delta <= 0.5, ErrorCode::Parameter, "delta must lie in (0, 0.5]");
  require(p.N >= 4, ErrorCode::Parameter, "fiber needs at least 4 nodes");
}

FiberState fiber_from_tangents(const SpectralWorkspace& ws, const Nx3& tau, const V3& X0) {
  require(tau.rows() == ws.N, ErrorCode::Dimension, "tangent array has wrong size");
  FiberState f;
  f.tau = tau.rowwise().normalized();
  Nx3 I = antiderivative(ws, f.tau);
  V3 shift = X0 - I.row(0).transpose();
  f.X = I.rowwise() + shift.transpose();
  return f;
}

FiberState fiber_from_positions(const SpectralWorkspace& ws, const Nx3& X) {
  require(X.rows() == ws.N, ErrorCode::Dimension, "position array has wrong size");
  FiberState f;
  f.X = X;
  f.tau = differentiate(ws, X).rowwise().normalized();
  return f;
}

double regularized_drag_coeff(double s, const FiberParams& p) {
  if (p.ellipsoidal) return -std::log(p.eps * p.eps);
  const double L = p.L;
  double sh = (s > L / 2.0) ? L - s : s;
  double eta = 2.0 * sh / L - 1.0;
  double w = std::tanh((eta + 1.0) / p.delta) - std::tanh((eta - 1.0) / p.delta) - 1.0;
  double sbar = w * sh + (1.0 - w * w) * p.delta * L / 2.0;
  double a = p.eps * L;
  return std::log(4.0 * sbar * (L - sbar) / (a * a));
}

Vec drag_coeffs(const Vec& s, const FiberParams& p) {
  Vec c(s.size());
  for (int i = 0; i < s.size(); ++i) c(i) = regularized_drag_coeff(s(i), p);
  return c;
}

Nx3 bending_force(const SpectralWorkspace& ws, const Nx3& X, double kappa) {
  require(X.rows() == ws.N, ErrorCode::Dimension, "bending_force: row count mismatch");
  return kappa * (ws.Fop * X);
}

std::pair<V3, V3> tangent_frame(const V3& tau) {
  double theta = 0.0;
  if (std::abs(tau(0)) > 1e-14 || std::abs(tau(1)) > 1e-14) theta = std::atan2(tau(1), tau(0));
  double phi = std::asin(std::clamp(tau(2), -1.0, 1.0));
  double ct = std::cos(theta), st = std::sin(theta), cp = std::cos(phi), sp = std::sin(phi);
  V3 n1(-st, ct, 0.0);
  V3 n2(-ct * sp, -st * sp, cp);
  return {n1, n2};
}

double max_tangent_deviation(const Nx3& tau) {
  double m = 0.0;
  for (int p = 0; p < tau.rows(); ++p) m = std::max(m, std::abs(tau.row(p).norm() - 1.0));
  return m;
}

}  // namespace fibersim
