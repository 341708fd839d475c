#pragma once

#include <functional>
#include <vector>

#include "fibersim/hydro.hpp"
#include "fibersim/kinematics.hpp"

namespace fibersim {

// u0 = rate(t) (y, 0, 0); strain(t) is its time integral.
struct ShearFlow {
  double gamma0_dot = 0.0;
  double omega = 0.0;
  double t_off = -1.0;  // flow switched off for t >= t_off when t_off >= 0

  double rate(double t) const;
  double strain(double t) const;
};

struct StepperOptions {
  double dt = 0.01;
  int gmres_iters = 0;       // fixed iteration budget per step (0: block-diagonal only)
  bool converged_start = true;  // converge GMRES in the first two steps
  double start_tol = 1e-6;
  int start_max_iters = 100;
  double pinv_tol = 1e-10;
};

struct StepDiagnostics {
  long hydro_evals = 0;
  int gmres_iters = 0;
  double gmres_rel_residual = 0.0;
  double max_tangent_deviation = 0.0;
  double max_constraint_residual = 0.0;  // max over fibers of |K* lambda|
};

// Explicit force densities (gravity, cross-linkers) at the extrapolated midpoint.
using ExtraForce = std::function<std::vector<Nx3>(const std::vector<Nx3>& Xmid, double t_mid)>;

struct SaddleBlocks {
  KinematicOperators ops;
  Mat Mld;       // 3N x 3N block-diagonal local drag
  Mat Minv;      // inverse of Mld
  Mat B;         // K - dt/2 Mld F K
  Mat FK;        // F K
  Mat Spinv;     // pseudo-inverse of K* Minv B
};

SaddleBlocks build_saddle_blocks(const SpectralWorkspace& ws, const FiberParams& fp, const Nx3& tau, double mu,
                                 double dt, double pinv_tol);
// Solves [-Mld, B; K*, 0] (lambda, alpha) = (a, b).
void solve_saddle(const SaddleBlocks& sb, const Vec& a, const Vec& b, Vec& lambda, Vec& alpha);

class Stepper {
 public:
  Stepper(const FiberParams& fp, std::vector<FiberState> fibers, NonlocalHydro& hydro, const StepperOptions& opt,
          const ShearFlow& flow, ExtraForce extra = nullptr);

  StepDiagnostics step();

  double time() const { return t_; }
  long step_count() const { return n_; }
  const std::vector<FiberState>& fibers() const { return fibers_; }
  // Midpoint quantities of the last step (for stress).
  const std::vector<Nx3>& X_mid() const { return Xmid_; }
  const std::vector<Nx3>& lambda_mid() const { return lam_; }
  const std::vector<Nx3>& extra_mid() const { return extra_mid_; }
  double t_mid() const { return t_ - opt_.dt / 2.0; }
  const StepperOptions& options() const { return opt_; }
  void set_flow(const ShearFlow& flow) { flow_ = flow; }
  const ShearFlow& flow() const { return flow_; }
  void set_iterations(int m) { opt_.gmres_iters = m; }

 private:
  FiberParams fp_;
  std::shared_ptr<const SpectralWorkspace> ws_;
  std::vector<FiberState> fibers_, prev_;
  NonlocalHydro& hydro_;
  StepperOptions opt_;
  ShearFlow flow_;
  ExtraForce extra_;
  Mat Fop_;
  double t_ = 0.0;
  long n_ = 0;
  std::vector<Nx3> lam_, lam_prev_;
  std::vector<Nx3> Xmid_, extra_mid_;
};

// Right-preconditioned GMRES with modified Gram-Schmidt; zero initial guess; no restarts.
struct GmresResult {
  Vec x;
  int iterations = 0;
  double rel_residual = 0.0;
};
GmresResult gmres(const std::function<Vec(const Vec&)>& A, const std::function<Vec(const Vec&)>& Pinv,
                  const Vec& b, int max_iters, double rel_tol);

}  // namespace fibersim
