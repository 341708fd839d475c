#pragma once

#include <cstdint>
#include <string>

#include "fibersim/hydro.hpp"
#include "fibersim/fiber.hpp"

namespace fibersim {

struct RunConfig {
  std::string scenario = "quartet";  // quartet | three_fibers | suspension | mesh
  FiberParams fiber;
  double mu = 1.0;

  bool periodic = false;
  double Ld = 2.4;

  double gamma0_dot = 0.0;
  double omega = 0.0;
  double t_off = -1.0;

  double dt = 0.01;
  double T = 1.0;
  int gmres_iters = 0;
  bool converged_start = true;

  HydroMode hydro = HydroMode::Full;
  bool finite_part = true;
  bool near_corrections = true;
  double ewald_xi = 0.0;
  double ewald_tol = 1e-3;
  double nufft_tol = 1e-6;

  int fiber_count = 0;  // used by suspension and mesh
  int links = 0;
  double Kc = 1.0;
  double ell = 0.5;
  double sigma_over_L = 0.1;

  double gravity[3] = {0.0, 0.0, 0.0};
  std::uint64_t seed = 1;

  std::string output_dir;
  int snapshot_every = 0;  // 0: initial and final only
  bool emit_plots = false;
};

// Parses a JSON document; unknown keys and out-of-range values raise ErrorCode::Config.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);
// Hex digest of the canonical JSON form.
std::string config_hash(const RunConfig& cfg);
void validate(const RunConfig& cfg);

HydroMode parse_hydro_mode(const std::string& s);

}  // namespace fibersim
