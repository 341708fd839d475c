#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fibersim/config.hpp"
#include "fibersim/network.hpp"
#include "fibersim/stepper.hpp"

namespace fibersim {

// Initial geometries.
std::vector<FiberState> quartet_fibers(int N, double L = 2.0, double d = 0.2);
std::vector<FiberState> three_fibers(int N, double L = 2.0);
// Straight fibers with uniform centers in [0, Ld)^3 and isotropic directions.
std::vector<FiberState> random_straight_fibers(int count, int N, double L, double Ld, std::uint64_t seed);

// Non-finite state, tangent-norm drift above 1e-6, or curvature above 50/L.
struct StabilityProxy {
  double max_tangent_deviation = 1e-6;
  double max_curvature_times_L = 50.0;
};
bool is_unstable(const std::vector<FiberState>& fibers, const SpectralWorkspace& ws, const StabilityProxy& p = {});

struct StressSample {
  double t = 0.0;
  double strain = 0.0;
  M3 fiber = M3::Zero();
  M3 cl = M3::Zero();
  double fluid21 = 0.0;  // mu times the shear rate
};

// Full simulation assembled from a configuration.
class Simulation {
 public:
  // Links are bound from the initial state unless given.
  explicit Simulation(const RunConfig& cfg, std::vector<FiberState> initial = {},
                      std::optional<std::vector<CrossLink>> links = std::nullopt);
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  StepDiagnostics step();
  long total_steps() const;
  const RunConfig& config() const { return cfg_; }
  const Stepper& stepper() const { return *stepper_; }
  Stepper& stepper() { return *stepper_; }
  const NonlocalHydro& hydro() const { return *hydro_; }
  const std::vector<CrossLink>& links() const { return links_; }
  const SpectralWorkspace& workspace() const { return *ws_; }
  const NetworkParams& network() const { return np_; }
  double volume() const;
  // Stress at the midpoint of the last step.
  StressSample stress() const;

 private:
  RunConfig cfg_;
  std::shared_ptr<const SpectralWorkspace> ws_;
  std::unique_ptr<NonlocalHydro> hydro_;
  std::unique_ptr<Stepper> stepper_;
  std::vector<CrossLink> links_;
  NetworkParams np_;
  ShearFlow flow_;
};

struct RunSummary {
  long steps = 0;
  long hydro_evals = 0;
  long max_evals_per_step = 0;
  double max_tangent_deviation = 0.0;
  double max_constraint_residual = 0.0;
  bool stable = true;
  long unstable_step = -1;
  double wall_seconds = 0.0;
  std::vector<StressSample> stress;
  std::vector<FiberState> final_state;
  std::vector<std::vector<Nx3>> snapshots;  // every snapshot_every steps (and the initial state)
  bool has_moduli = false;
  Moduli moduli;
};

struct RunOptions {
  bool stop_when_unstable = true;
  bool keep_snapshots = false;
  bool record_stress = true;
  StabilityProxy proxy;
};

// Runs to cfg.T; writes manifest.json, trajectory CSVs, stress.csv, moduli.json and diagnostics.log
// when cfg.output_dir is set.
RunSummary run_scenario(const RunConfig& cfg, const RunOptions& ro = {}, std::vector<FiberState> initial = {});

// L2 norm of X1 - X2 over a 1000-point type-2 grid (Clenshaw-Curtis weights).
double l2_difference(const Nx3& X1, const Nx3& X2, double L);

struct ConvergenceTable {
  std::vector<double> dts;
  std::vector<double> errors;  // errors[i] compares dts[i] with dts[i+1]
  std::vector<double> ratios;
  double fitted_slope = 0.0;
  std::vector<long> evals_per_step;
};
// Successive-refinement errors on fiber `fiber`, maximized over the times k * dts[0].
ConvergenceTable temporal_convergence(const RunConfig& base, const std::vector<double>& dts, int fiber = 0);

// Error of fiber `fiber` against a reference trajectory, maximized over the times k * sample_dt.
double trajectory_error(const RunConfig& cfg, const RunConfig& ref, double sample_dt, int fiber = 0);
double trajectory_error(const RunConfig& cfg, const std::vector<Nx3>& ref, double sample_dt, int fiber = 0);
// Positions of one fiber at times k * sample_dt, k >= 1.
std::vector<Nx3> sampled_trajectory(const RunConfig& cfg, double sample_dt, int fiber = 0);

struct NearQuadStudy {
  int fibers = 0;
  int targets_per_fiber = 0;
  std::vector<double> digits_short, digits_long;
  double frac_short_3 = 0.0, frac_long_3 = 0.0;
  double reference_self_consistency = 0.0;
  std::map<std::string, int> routes_short, routes_long;
};
NearQuadStudy near_quadrature_study(std::uint64_t seed, int nfibers = 100, int ntargets = 100, int nref = 6000);
// Writes near_quad.json and near_quad_digits.csv.
void write_near_quadrature_study(const NearQuadStudy& st, const std::string& dir);

// Relative velocity discrepancy between the 4-point sheared and 8-point rectangular cells.
double hexagonal_lattice_check(double nufft_tol);

struct FinitePartOracle {
  double max_node_relative = 0.0;   // |u_p - o_p| / |o_p|
  double max_fiber_relative = 0.0;  // max_p |u_p - o_p| / max_p |o_p|
};
// Finite-part velocity (f = tau) against a singularity-subtracted 10^4-point composite oracle at
// interior nodes of random fibers.
FinitePartOracle finite_part_oracle_check(int nfibers, int N, std::uint64_t seed, int skip_ends = 4);

// Max error between the RPY line integral and local-drag SBT on a straight fiber at interior points.
double sbt_matching_error(double eps, double L = 2.0);
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);

struct NetworkState {
  std::vector<FiberState> fibers;
  std::vector<CrossLink> links;
};
// Runs the configured network without flow under local drag for time T at step dt.
NetworkState equilibrate_network(const RunConfig& cfg, double T, double dt);

struct RelaxationResult {
  std::vector<double> t, v;  // normalized mean fiber velocity after the flow stops
  TwoExpFit fit;
  double wall_seconds = 0.0;
};
// Oscillatory shear until cfg.t_off, then relaxation until cfg.T with snapshots every `spacing`.
RelaxationResult relaxation_run(const RunConfig& cfg, double spacing = 0.05, double window = 0.05,
                                const NetworkState* start = nullptr);

// Moduli over whole periods after `wait` from the stress of a run.
Moduli moduli_after(const std::vector<StressSample>& s, double omega, double gamma0, double wait);

const char* version_string();

}  // namespace fibersim
