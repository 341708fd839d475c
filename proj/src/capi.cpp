#include "fibersim/fibersim.h"

#include <algorithm>
#include <cmath>
#include <new>
#include <numbers>
#include <string>

#include "fibersim/error.hpp"
#include "fibersim/harness.hpp"

struct fs_simulation {
  fibersim::Simulation sim;
  explicit fs_simulation(const fibersim::RunConfig& cfg) : sim(cfg) {}
};

namespace {

thread_local std::string g_last_error;

int to_status(fibersim::ErrorCode c) {
  switch (c) {
    case fibersim::ErrorCode::Config: return FS_ERR_CONFIG;
    case fibersim::ErrorCode::Numerical: return FS_ERR_NUMERICAL;
    case fibersim::ErrorCode::Acceptance: return FS_ERR_ACCEPTANCE;
    case fibersim::ErrorCode::Parameter: return FS_ERR_PARAMETER;
    case fibersim::ErrorCode::Dimension: return FS_ERR_DIMENSION;
  }
  return FS_ERR_INTERNAL;
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return FS_OK;
  } catch (const fibersim::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FS_ERR_INTERNAL;
  } catch (const std::ios_base::failure& e) {
    g_last_error = e.what();
    return FS_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FS_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  fibersim::require(p != nullptr, fibersim::ErrorCode::Parameter, std::string(what) + " is null");
}

}  // namespace

extern "C" {

const char* fs_version(void) { return fibersim::version_string(); }

const char* fs_last_error(void) { return g_last_error.c_str(); }

int fs_simulation_create(const char* config_json, fs_simulation** out) {
  return guarded([&] {
    need(config_json, "config");
    need(out, "out");
    *out = new fs_simulation(fibersim::parse_config(config_json));
  });
}

int fs_simulation_create_from_file(const char* path, fs_simulation** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new fs_simulation(fibersim::load_config(path));
  });
}

void fs_simulation_destroy(fs_simulation* sim) { delete sim; }

int fs_simulation_step(fs_simulation* sim, fs_step_info* info) {
  return guarded([&] {
    need(sim, "simulation");
    fibersim::StepDiagnostics d = sim->sim.step();
    if (info) {
      info->hydro_evals = d.hydro_evals;
      info->gmres_iters = d.gmres_iters;
      info->gmres_rel_residual = d.gmres_rel_residual;
      info->max_tangent_deviation = d.max_tangent_deviation;
      info->time = sim->sim.stepper().time();
    }
  });
}

int fs_simulation_shape(const fs_simulation* sim, int* fibers, int* nodes) {
  return guarded([&] {
    need(sim, "simulation");
    if (fibers) *fibers = static_cast<int>(sim->sim.stepper().fibers().size());
    if (nodes) *nodes = sim->sim.config().fiber.N;
  });
}

int fs_simulation_positions(const fs_simulation* sim, double* out, size_t len) {
  return guarded([&] {
    need(sim, "simulation");
    need(out, "out");
    const auto& f = sim->sim.stepper().fibers();
    const size_t N = static_cast<size_t>(sim->sim.config().fiber.N);
    fibersim::require(len >= f.size() * N * 3, fibersim::ErrorCode::Dimension, "position buffer too small");
    for (size_t i = 0; i < f.size(); ++i) std::copy(f[i].X.data(), f[i].X.data() + 3 * N, out + i * 3 * N);
  });
}

int fs_simulation_time(const fs_simulation* sim, double* t) {
  return guarded([&] {
    need(sim, "simulation");
    need(t, "t");
    *t = sim->sim.stepper().time();
  });
}

int fs_simulation_stress(const fs_simulation* sim, double out[9]) {
  return guarded([&] {
    need(sim, "simulation");
    need(out, "out");
    fibersim::StressSample s = sim->sim.stress();
    fibersim::M3 tot = s.fiber + s.cl;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) out[3 * a + b] = tot(a, b);
  });
}

int fs_simulation_hydro_evaluations(const fs_simulation* sim, long* count) {
  return guarded([&] {
    need(sim, "simulation");
    need(count, "count");
    *count = sim->sim.hydro().evaluations();
  });
}

int fs_run(const char* config_path, const char* output_dir, int emit_plots, fs_run_summary* out) {
  return guarded([&] {
    need(config_path, "config path");
    fibersim::RunConfig cfg = fibersim::load_config(config_path);
    if (output_dir) cfg.output_dir = output_dir;
    if (emit_plots) cfg.emit_plots = true;
    fibersim::RunSummary s = fibersim::run_scenario(cfg);
    if (out) {
      out->steps = s.steps;
      out->hydro_evals = s.hydro_evals;
      out->max_evals_per_step = s.max_evals_per_step;
      out->max_tangent_deviation = s.max_tangent_deviation;
      out->stable = s.stable ? 1 : 0;
      out->has_moduli = s.has_moduli ? 1 : 0;
      out->G_elastic = s.moduli.G1;
      out->G_viscous = s.moduli.G2;
      out->wall_seconds = s.wall_seconds;
    }
    fibersim::require(s.stable, fibersim::ErrorCode::Numerical,
                      "run became unstable at step " + std::to_string(s.unstable_step));
  });
}

int fs_study_near_quad(uint64_t seed, int nfibers, int ntargets, const char* output_dir, fs_near_quad_result* out) {
  return guarded([&] {
    fibersim::NearQuadStudy st = fibersim::near_quadrature_study(seed, nfibers, ntargets);
    if (output_dir) fibersim::write_near_quadrature_study(st, output_dir);
    if (out) {
      out->frac_short_3 = st.frac_short_3;
      out->frac_long_3 = st.frac_long_3;
      out->min_digits_short = st.digits_short.empty()
                                  ? 0.0
                                  : *std::min_element(st.digits_short.begin(), st.digits_short.end());
      out->reference_self_consistency = st.reference_self_consistency;
    }
  });
}

int fs_check_hex_lattice(double nufft_tol, double* max_rel_error) {
  return guarded([&] {
    need(max_rel_error, "out");
    fibersim::require(nufft_tol > 0.0 && nufft_tol < 1.0, fibersim::ErrorCode::Parameter, "tolerance must lie in (0,1)");
    *max_rel_error = fibersim::hexagonal_lattice_check(nufft_tol);
  });
}

int fs_converge(const char* config_path, const double* dts, int ndts, double* errors, double* slope) {
  return guarded([&] {
    need(config_path, "config path");
    need(dts, "dts");
    fibersim::RunConfig cfg = fibersim::load_config(config_path);
    std::vector<double> d(dts, dts + ndts);
    fibersim::ConvergenceTable tab = fibersim::temporal_convergence(cfg, d);
    if (errors) std::copy(tab.errors.begin(), tab.errors.end(), errors);
    if (slope) *slope = tab.fitted_slope;
  });
}

int fs_moduli(const char* config_path, const double* omegas, int n, double* G_elastic, double* G_viscous) {
  return guarded([&] {
    need(config_path, "config path");
    need(omegas, "omegas");
    fibersim::RunConfig base = fibersim::load_config(config_path);
    fibersim::require(base.omega > 0.0 && base.gamma0_dot > 0.0, fibersim::ErrorCode::Config,
                      "moduli need an oscillatory flow in the configuration");
    const double gamma0 = base.gamma0_dot / base.omega;
    for (int k = 0; k < n; ++k) {
      fibersim::RunConfig c = base;
      c.omega = omegas[k];
      c.gamma0_dot = gamma0 * omegas[k];
      double period = 2.0 * std::numbers::pi / omegas[k];
      double wait = std::max(1.0, period);
      c.T = wait + 3.0 * period;
      c.dt = std::min(base.dt, period / 20.0);
      c.dt = period / std::ceil(period / c.dt);
      c.T = std::round(c.T / c.dt) * c.dt;
      c.output_dir.clear();
      fibersim::RunSummary s = fibersim::run_scenario(c);
      fibersim::require(s.stable, fibersim::ErrorCode::Numerical, "moduli run became unstable");
      fibersim::Moduli m = fibersim::moduli_after(s.stress, c.omega, gamma0, wait);
      if (G_elastic) G_elastic[k] = m.G1;
      if (G_viscous) G_viscous[k] = m.G2;
    }
  });
}

}  // extern "C"
