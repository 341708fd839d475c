#pragma once

#include <memory>
#include <vector>

#include "fibersim/spectral.hpp"

namespace fibersim {

struct ShearedDomain {
  V3 Lbox = V3::Constant(1.0);
  double g = 0.0;  // dimensionless strain

  double volume() const { return Lbox.prod(); }
  // Strain reduced to [-1/2, 1/2]; the lattice is unchanged under g -> g + 1.
  double reduced_strain() const;
  V3 to_sheared(const V3& x) const;
  V3 from_sheared(const V3& xp) const;
  // Nearest periodic image of a displacement (Euclidean metric).
  V3 minimum_image(const V3& dx) const;
};

double safety_factor(double g);
double hasimoto_screen(double k, double xi);

struct EwaldOptions {
  double xi = 0.0;          // 0 selects a default from the box size
  double tol = 1e-3;        // relative truncation tolerance for near/far splitting
  double nufft_tol = 1e-8;  // accuracy of the gridded Fourier transform
  bool dense = false;       // direct k-space sum (oracle path)
};

class EwaldPlan {
 public:
  EwaldPlan(const V3& Lbox, double b, double mu, const EwaldOptions& opt);

  double xi() const { return xi_; }
  double rstar() const { return rstar_; }
  double kmax() const { return kmax_; }
  double b() const { return b_; }
  double mu() const { return mu_; }
  const EwaldOptions& options() const { return opt_; }
  const V3& box() const { return L_; }

  // Free-space far kernel A(r) I + B(r) rr.
  void far_free(double r, double& A, double& B) const;
  // Near kernel for displacement R (RPY minus the free-space far part).
  M3 near_kernel(const V3& R) const;
  // Fourier multiplier scalar: sinc^2(kb) H(k) / (mu k^2).
  double far_multiplier(double k) const;

  std::vector<V3> far_field(const std::vector<V3>& x, const std::vector<V3>& F, const ShearedDomain& dom) const;
  std::vector<V3> near_field(const std::vector<V3>& x, const std::vector<V3>& F, const ShearedDomain& dom) const;
  std::vector<V3> velocities(const std::vector<V3>& x, const std::vector<V3>& F, const ShearedDomain& dom) const;

 private:
  std::vector<V3> far_dense(const std::vector<V3>& x, const std::vector<V3>& F, const ShearedDomain& dom) const;
  std::vector<V3> far_gridded(const std::vector<V3>& x, const std::vector<V3>& F, const ShearedDomain& dom) const;
  void build_table(double rmax);

  V3 L_;
  double b_, mu_;
  EwaldOptions opt_;
  double xi_ = 0.0, rstar_ = 0.0, kmax_ = 0.0;
  double table_h_ = 0.0;
  std::vector<double> tabA_, tabB_;
};

// Periodic RPY velocities of all fiber nodes with forces F = f w, followed by removal of the
// free-space same-fiber RPY sum. `fiber_of` maps each point to its fiber index. The mean force is
// removed before summation.
std::vector<V3> periodic_rpy_velocities(const EwaldPlan& plan, const ShearedDomain& dom, const std::vector<V3>& x,
                                        std::vector<V3> F, const std::vector<int>& fiber_of);

}  // namespace fibersim
