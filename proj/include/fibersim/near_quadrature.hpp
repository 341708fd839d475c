#pragma once

#include <complex>
#include <functional>

#include "fibersim/mobility.hpp"

namespace fibersim {

using cplx = std::complex<double>;

enum class Route { DirectN, Direct32, Special1, Special2 };
const char* route_name(Route r);

struct NearOptions {
  double gate_direct = 0.1575;  // d~/L at or above: N-point quadrature stands
  double gate_upsampled = 0.072;  // d~/L at or above: 32-point direct quadrature
  double rho_crit = 1.1268;     // Bernstein radius accepting 32-point direct quadrature
  double two_panel = 8.8;       // d^/(eps L) at or below: two panels
  int n_uniform = 16;
  int n_up = 32;
  bool blend = true;
};

struct QuadratureDecision {
  Route route = Route::DirectN;
  bool correction_needed = false;
  bool root_found = false;
  double d_tilde = 0.0;
  cplx eta_star{0.0, 0.0};
  double s_star = 0.0;
  double d_hat = 0.0;
  double centerline_weight = 0.0;
};

// Source fiber geometry prepared for near evaluation (coefficients on [-1,1]).
struct SourceFiber {
  std::shared_ptr<const SpectralWorkspace> ws;
  FiberParams params;
  Nx3 X, tau;
  Nx3 cX, cXd;
  Nx3 Xuniform;
  Mat fp_matrix;  // 3N x 3N finite-part operator for centerline blending; empty means zero
};

SourceFiber make_source(std::shared_ptr<const SpectralWorkspace> ws, const FiberParams& fp, const Nx3& X,
                        const Nx3& tau, Mat fp_matrix = Mat());

// Minimum over uniformly spaced samples; index of the minimizer through argmin.
double coarse_distance(const V3& x, const SourceFiber& src, int* argmin = nullptr, int n_uniform = 16);

Route decide_route(double d_tilde, double L, const NearOptions& opt);

// Newton iteration for sum_d (X_d(eta) - x_d)^2 = 0 from a real initial parameter.
bool complex_root(const V3& x, const Nx3& cX, const Nx3& cXd, double eta0, cplx& root);

double bernstein_radius(cplx eta);

// Singular moments int_{-1}^{1} t^k |t - root|^{-m} dt for k < n, m in {1,3,5}.
void singular_moments(cplx root, int n, Vec& I1, Vec& I3, Vec& I5);

// Weights on the n_up-point type-1 panel nodes for the 1/R, 1/R^3, 1/R^5 kernel parts
// (panel parameter t in [-1,1]; multiply by the arclength Jacobian separately).
void special_weights(cplx root, Vec& w1, Vec& w3, Vec& w5, int n_up = 32);

// 3 x 3n map from sampled forces to the S_D velocity at x, with separate weights for each kernel part.
Mat split_kernel_matrix(const V3& x, const Nx3& pts, const Vec& w1, const Vec& w3, const Vec& w5,
                        const StokesKernelParams& kp);

// 3 x 3N map from nodal force density to the velocity at x from the fiber integral of S_D using the
// full dispatch (blending included when enabled).
Mat interaction_matrix(const V3& x, const SourceFiber& src, const StokesKernelParams& kp, const NearOptions& opt,
                       QuadratureDecision* decision = nullptr);
V3 interaction_velocity(const V3& x, const SourceFiber& src, const Nx3& f, const StokesKernelParams& kp,
                        const NearOptions& opt, QuadratureDecision* decision = nullptr);

// 3 x 3N correction map for an Ewald velocity at x from fiber src: accurate quadrature (and blending)
// minus the N-point RPY sum already present in the Ewald result. `image` maps a displacement to its
// nearest periodic image (empty for free space). Returns an empty matrix when no correction is needed.
Mat correction_matrix(const V3& x, const SourceFiber& src, const StokesKernelParams& kp, const NearOptions& opt,
                      const std::function<V3(const V3&)>& image, QuadratureDecision* decision = nullptr);
V3 corrected_interaction_velocity(const V3& x, const SourceFiber& src, const Nx3& f, const StokesKernelParams& kp,
                                  const NearOptions& opt, const std::function<V3(const V3&)>& image,
                                  QuadratureDecision* decision = nullptr);

// Reference: direct quadrature of S_D on an n-point type-1 grid.
V3 refined_interaction_velocity(const V3& x, const SourceFiber& src, const Nx3& f, const StokesKernelParams& kp,
                                int n);

}  // namespace fibersim
