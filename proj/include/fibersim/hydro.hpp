#pragma once

#include <memory>
#include <vector>

#include "fibersim/near_quadrature.hpp"
#include "fibersim/periodic_ewald.hpp"

namespace fibersim {

// LocalDrag: nonlocal mobility is zero. IntraFiber: finite part only. Full: finite part plus
// inter-fiber interactions.
enum class HydroMode { LocalDrag, IntraFiber, Full };
const char* hydro_mode_name(HydroMode m);

struct HydroOptions {
  HydroMode mode = HydroMode::Full;
  bool finite_part = true;
  bool periodic = false;
  V3 Lbox = V3::Constant(1.0);
  EwaldOptions ewald;
  bool near_corrections = true;
  NearOptions near;
  double mu = 1.0;
};

// Applies the nonlocal mobility M_NL at a frozen configuration. Every call to apply() counts as
// one hydrodynamic evaluation.
class NonlocalHydro {
 public:
  NonlocalHydro(const FiberParams& fp, const HydroOptions& opt);

  void set_configuration(const std::vector<Nx3>& X, const std::vector<Nx3>& tau, double strain);
  std::vector<Nx3> apply(const std::vector<Nx3>& f);

  long evaluations() const { return evals_; }
  const HydroOptions& options() const { return opt_; }
  const FiberParams& fiber_params() const { return fp_; }
  const StokesKernelParams& kernel() const { return kp_; }
  const EwaldPlan* plan() const { return plan_.get(); }
  size_t near_pair_count() const { return pairs_.size(); }
  bool is_zero() const { return opt_.mode == HydroMode::LocalDrag; }

 private:
  struct NearPair {
    int target_fiber, target_node, source_fiber;
    Mat C;  // 3 x 3N
  };

  FiberParams fp_;
  HydroOptions opt_;
  StokesKernelParams kp_;
  std::shared_ptr<const SpectralWorkspace> ws_;
  std::unique_ptr<EwaldPlan> plan_;
  ShearedDomain dom_;
  std::vector<Nx3> X_;
  std::vector<Mat> fp_mats_;
  std::vector<NearPair> pairs_;
  long evals_ = 0;
};

}  // namespace fibersim
