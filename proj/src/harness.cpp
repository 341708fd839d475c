#include "fibersim/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "fibersim/error.hpp"
#include "fibersim/random_fibers.hpp"
#include "fibersim/rng.hpp"

namespace fibersim {

using nlohmann::json;

namespace {
constexpr double kPi = std::numbers::pi;

FiberState straight(const SpectralWorkspace& ws, const V3& dir, const V3& center) {
  const V3 u = dir.normalized();
  Nx3 X(ws.N, 3);
  for (int p = 0; p < ws.N; ++p) X.row(p) = (center + (ws.s()(p) - 0.5 * ws.L) * u).transpose();
  return fiber_from_positions(ws, X);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace

const char* version_string() { return "fibersim 1.0.0"; }

std::vector<FiberState> quartet_fibers(int N, double L, double d) {
  auto ws = workspace(N, L);
  std::vector<FiberState> v;
  for (V3 c : {V3(d, 0, 0), V3(-d, 0, 0), V3(0, d, 0), V3(0, -d, 0)}) v.push_back(straight(*ws, V3(0, 0, 1), c));
  return v;
}

std::vector<FiberState> three_fibers(int N, double L) {
  auto ws = workspace(N, L);
  return {straight(*ws, V3(1, 0, 0), V3(0, -0.6, -0.04)), straight(*ws, V3(0, 1, 0), V3(0, 0, 0)),
          straight(*ws, V3(1, 0, 0), V3(0, 0.6, 0.06))};
}

std::vector<FiberState> random_straight_fibers(int count, int N, double L, double Ld, std::uint64_t seed) {
  require(count > 0 && Ld > 0.0, ErrorCode::Parameter, "random fibers: count and box must be positive");
  auto ws = workspace(N, L);
  CounterRng rng(seed, 0x5eed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> G(0.0, 1.0);
  std::vector<FiberState> v;
  v.reserve(count);
  for (int i = 0; i < count; ++i) {
    V3 c(U(rng) * Ld, U(rng) * Ld, U(rng) * Ld);
    V3 dir;
    do {
      dir = V3(G(rng), G(rng), G(rng));
    } while (dir.norm() < 1e-8);
    v.push_back(straight(*ws, dir, c));
  }
  return v;
}

bool is_unstable(const std::vector<FiberState>& fibers, const SpectralWorkspace& ws, const StabilityProxy& p) {
  for (const auto& f : fibers) {
    if (!f.X.allFinite() || !f.tau.allFinite()) return true;
    if (max_tangent_deviation(f.tau) > p.max_tangent_deviation) return true;
    Nx3 Xss = ws.D * f.tau;
    if (Xss.rowwise().norm().maxCoeff() * ws.L > p.max_curvature_times_L) return true;
  }
  return false;
}

Simulation::Simulation(const RunConfig& cfg, std::vector<FiberState> initial,
                       std::optional<std::vector<CrossLink>> links)
    : cfg_(cfg) {
  validate(cfg_);
  const FiberParams& fp = cfg_.fiber;
  ws_ = fibersim::workspace(fp.N, fp.L);
  if (initial.empty()) {
    if (cfg_.scenario == "quartet")
      initial = quartet_fibers(fp.N, fp.L);
    else if (cfg_.scenario == "three_fibers")
      initial = three_fibers(fp.N, fp.L);
    else
      initial = random_straight_fibers(cfg_.fiber_count, fp.N, fp.L, cfg_.Ld, cfg_.seed);
  }
  HydroOptions ho;
  ho.mode = cfg_.hydro;
  ho.finite_part = cfg_.finite_part;
  ho.periodic = cfg_.periodic;
  ho.Lbox = V3::Constant(cfg_.Ld);
  ho.ewald.xi = cfg_.ewald_xi;
  ho.ewald.tol = cfg_.ewald_tol;
  ho.ewald.nufft_tol = cfg_.nufft_tol;
  ho.near_corrections = cfg_.near_corrections;
  ho.mu = cfg_.mu;
  hydro_ = std::make_unique<NonlocalHydro>(fp, ho);

  flow_ = ShearFlow{cfg_.gamma0_dot, cfg_.omega, cfg_.t_off};
  np_.sigma = cfg_.sigma_over_L * fp.L;
  np_.periodic = cfg_.periodic;
  np_.Lbox = V3::Constant(cfg_.Ld);
  if (links) {
    links_ = std::move(*links);
  } else if (cfg_.links > 0) {
    std::vector<Nx3> X;
    for (const auto& f : initial) X.push_back(f.X);
    links_ = bind_links(X, *ws_, cfg_.links, cfg_.ell, cfg_.Kc, cfg_.seed, np_);
  }

  const V3 grav(cfg_.gravity[0], cfg_.gravity[1], cfg_.gravity[2]);
  const bool has_grav = grav.squaredNorm() > 0.0;
  ExtraForce extra;
  if (has_grav || !links_.empty()) {
    extra = [this, grav, has_grav](const std::vector<Nx3>& Xm, double tm) {
      std::vector<Nx3> f = links_.empty()
                               ? std::vector<Nx3>(Xm.size(), Nx3::Zero(ws_->N, 3))
                               : cl_force_density(links_, Xm, *ws_, np_, flow_.strain(tm));
      if (has_grav)
        for (auto& fi : f) fi.rowwise() += grav.transpose();
      return f;
    };
  }
  StepperOptions so;
  so.dt = cfg_.dt;
  so.gmres_iters = cfg_.gmres_iters;
  so.converged_start = cfg_.converged_start;
  stepper_ = std::make_unique<Stepper>(fp, std::move(initial), *hydro_, so, flow_, extra);
}

StepDiagnostics Simulation::step() { return stepper_->step(); }

long Simulation::total_steps() const { return std::lround(cfg_.T / cfg_.dt); }

double Simulation::volume() const { return cfg_.periodic ? std::pow(cfg_.Ld, 3) : 1.0; }

StressSample Simulation::stress() const {
  StressSample s;
  require(stepper_->step_count() > 0, ErrorCode::Parameter, "stress is defined after the first step");
  s.t = stepper_->t_mid();
  s.strain = flow_.strain(s.t);
  const double V = volume();
  s.fiber = fiber_stress(stepper_->X_mid(), stepper_->lambda_mid(), *ws_, cfg_.fiber.kappa * ws_->Fop, V);
  if (!links_.empty()) s.cl = cl_stress(links_, stepper_->X_mid(), *ws_, np_, s.strain, V);
  s.fluid21 = cfg_.mu * flow_.rate(s.t);
  return s;
}

Moduli moduli_after(const std::vector<StressSample>& s, double omega, double gamma0, double wait) {
  require(!s.empty(), ErrorCode::Parameter, "moduli: empty stress series");
  const double period = 2.0 * kPi / omega;
  const double dt = s.size() > 1 ? s[1].t - s[0].t : 2.0 * s[0].t;
  const double tend = s.back().t + dt / 2.0;
  const double periods = std::floor((tend - wait) / period + 1e-9);
  require(periods >= 1.0, ErrorCode::Parameter, "moduli: run shorter than one period after the wait");
  std::vector<double> t, y;
  for (const auto& x : s)
    if (x.t >= wait && x.t < wait + periods * period - 1e-12) {
      t.push_back(x.t);
      y.push_back(x.fiber(1, 0) + x.cl(1, 0));
    }
  return moduli_from_series(t, y, omega, gamma0, periods * period);
}

namespace {

void write_snapshot(const std::string& dir, long step, const std::vector<FiberState>& fibers,
                    const SpectralWorkspace& ws) {
  char name[64];
  std::snprintf(name, sizeof name, "trajectory_%06ld.csv", step);
  std::ofstream out(std::filesystem::path(dir) / name);
  out.precision(17);
  out << "fiber,node,x,y,z\n";
  for (size_t i = 0; i < fibers.size(); ++i)
    for (int p = 0; p < fibers[i].X.rows(); ++p)
      out << i << ',' << p << ',' << fibers[i].X(p, 0) << ',' << fibers[i].X(p, 1) << ',' << fibers[i].X(p, 2)
          << '\n';
  std::snprintf(name, sizeof name, "trajectory_%06ld_coef.csv", step);
  std::ofstream cf(std::filesystem::path(dir) / name);
  cf.precision(17);
  cf << "fiber,k,cx,cy,cz\n";
  for (size_t i = 0; i < fibers.size(); ++i) {
    Nx3 c = ws.toCoef * fibers[i].X;
    for (int k = 0; k < c.rows(); ++k) cf << i << ',' << k << ',' << c(k, 0) << ',' << c(k, 1) << ',' << c(k, 2) << '\n';
  }
}

}  // namespace

RunSummary run_scenario(const RunConfig& cfg, const RunOptions& ro, std::vector<FiberState> initial) {
  auto t0 = std::chrono::steady_clock::now();
  Simulation sim(cfg, std::move(initial));
  RunSummary sum;
  const bool write = !cfg.output_dir.empty();
  std::ofstream log;
  if (write) {
    std::filesystem::create_directories(cfg.output_dir);
    log.open(std::filesystem::path(cfg.output_dir) / "diagnostics.log");
    log << "# step t hydro_evals gmres_iters gmres_rel_residual max_tangent_deviation max_constraint_residual\n";
    write_snapshot(cfg.output_dir, 0, sim.stepper().fibers(), sim.workspace());
  }
  auto snapshot_state = [&]() {
    std::vector<Nx3> X;
    for (const auto& f : sim.stepper().fibers()) X.push_back(f.X);
    sum.snapshots.push_back(std::move(X));
  };
  if (ro.keep_snapshots) snapshot_state();

  const long nsteps = sim.total_steps();
  for (long n = 0; n < nsteps; ++n) {
    StepDiagnostics d;
    try {
      d = sim.step();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Numerical || !ro.stop_when_unstable) throw;
      sum.stable = false;
      sum.unstable_step = n;
      if (write) log << "# step " << n << " failed: " << e.what() << '\n';
      break;
    }
    ++sum.steps;
    sum.hydro_evals += d.hydro_evals;
    if (n >= 2) sum.max_evals_per_step = std::max(sum.max_evals_per_step, d.hydro_evals);
    sum.max_tangent_deviation = std::max(sum.max_tangent_deviation, d.max_tangent_deviation);
    sum.max_constraint_residual = std::max(sum.max_constraint_residual, d.max_constraint_residual);
    if (ro.record_stress) sum.stress.push_back(sim.stress());
    if (write) {
      log << n + 1 << ' ' << sim.stepper().time() << ' ' << d.hydro_evals << ' ' << d.gmres_iters << ' '
          << d.gmres_rel_residual << ' ' << d.max_tangent_deviation << ' ' << d.max_constraint_residual << '\n';
    }
    bool snap = cfg.snapshot_every > 0 && (n + 1) % cfg.snapshot_every == 0;
    if (snap && ro.keep_snapshots) snapshot_state();
    if (write && (snap || n + 1 == nsteps)) write_snapshot(cfg.output_dir, n + 1, sim.stepper().fibers(), sim.workspace());
    if (is_unstable(sim.stepper().fibers(), sim.workspace(), ro.proxy)) {
      sum.stable = false;
      sum.unstable_step = n + 1;
      if (ro.stop_when_unstable) break;
    }
  }
  sum.final_state = sim.stepper().fibers();
  const double period = cfg.omega > 0.0 ? 2.0 * kPi / cfg.omega : 0.0;
  if (cfg.omega > 0.0 && cfg.gamma0_dot > 0.0 && !sum.stress.empty() && cfg.T >= period - 1e-12 && sum.stable) {
    double periods = std::floor(cfg.T / period + 1e-9);
    double wait = cfg.T - periods * period > 1e-9 ? cfg.T - periods * period : 0.0;
    sum.moduli = moduli_after(sum.stress, cfg.omega, cfg.gamma0_dot / cfg.omega, wait);
    sum.has_moduli = true;
  }
  sum.wall_seconds = seconds_since(t0);

  if (write) {
    std::ofstream st(std::filesystem::path(cfg.output_dir) / "stress.csv");
    st.precision(12);
    st << "t,sigma21_fiber,sigma21_cl,sigma21_fluid,sigma12_total\n";
    for (const auto& s : sum.stress)
      st << s.t << ',' << s.fiber(1, 0) << ',' << s.cl(1, 0) << ',' << s.fluid21 << ',' << s.fiber(0, 1) + s.cl(0, 1)
         << '\n';
    if (sum.has_moduli) {
      json m = {{"omega", cfg.omega},
                {"gamma0", cfg.gamma0_dot / cfg.omega},
                {"G_elastic", sum.moduli.G1},
                {"G_viscous", sum.moduli.G2},
                {"G_viscous_fluid", cfg.omega * cfg.mu},
                {"hydro_mode", hydro_mode_name(cfg.hydro)}};
      std::ofstream(std::filesystem::path(cfg.output_dir) / "moduli.json") << m.dump(2) << '\n';
    }
    json man = {{"version", version_string()},
                {"config_hash", config_hash(cfg)},
                {"config", json::parse(config_to_json(cfg))},
                {"steps", sum.steps},
                {"hydro_evaluations", sum.hydro_evals},
                {"max_evaluations_per_step", sum.max_evals_per_step},
                {"max_tangent_deviation", sum.max_tangent_deviation},
                {"links", sim.links().size()},
                {"stable", sum.stable},
                {"wall_seconds", sum.wall_seconds}};
    std::ofstream(std::filesystem::path(cfg.output_dir) / "manifest.json") << man.dump(2) << '\n';
    if (cfg.emit_plots) {
      std::ofstream pl(std::filesystem::path(cfg.output_dir) / "stress.gp");
      pl << "set datafile separator ','\nset xlabel 't'\nset ylabel 'sigma21'\n"
            "plot 'stress.csv' using 1:($2+$3) with lines title 'fiber+CL', '' using 1:4 with lines title 'fluid'\n";
    }
  }
  return sum;
}

double l2_difference(const Nx3& X1, const Nx3& X2, double L) {
  static std::mutex mtx;
  static std::map<double, ChebGrid> grids;
  const ChebGrid* g;
  {
    std::lock_guard<std::mutex> lk(mtx);
    auto it = grids.find(L);
    if (it == grids.end()) it = grids.emplace(L, make_grid(1000, GridKind::Type2, L)).first;
    g = &it->second;
  }
  auto ws1 = workspace(static_cast<int>(X1.rows()), L);
  auto ws2 = workspace(static_cast<int>(X2.rows()), L);
  Nx3 d = eval_series(ws1->toCoef * X1, g->x) - eval_series(ws2->toCoef * X2, g->x);
  return std::sqrt(d.rowwise().squaredNorm().dot(g->w));
}

namespace {

std::vector<Nx3> sample_trajectory(const RunConfig& cfg, double sample_dt, int fiber, long* evals_per_step) {
  Simulation sim(cfg);
  double r = sample_dt / cfg.dt;
  long every = std::lround(r);
  require(every >= 1 && std::abs(r - every) < 1e-8, ErrorCode::Parameter,
          "sample spacing must be a multiple of the time step");
  std::vector<Nx3> out;
  long maxe = 0;
  const long nsteps = sim.total_steps();
  for (long n = 0; n < nsteps; ++n) {
    StepDiagnostics d = sim.step();
    if (n >= 2) maxe = std::max(maxe, d.hydro_evals);
    if ((n + 1) % every == 0) out.push_back(sim.stepper().fibers().at(fiber).X);
  }
  if (evals_per_step) *evals_per_step = maxe;
  return out;
}

double max_difference(const std::vector<Nx3>& a, const std::vector<Nx3>& b, double L) {
  require(a.size() == b.size(), ErrorCode::Dimension, "trajectory sample counts differ");
  double e = 0.0;
  for (size_t k = 0; k < a.size(); ++k) e = std::max(e, l2_difference(a[k], b[k], L));
  return e;
}

}  // namespace

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::Parameter, "slope fit needs two or more points");
  const int n = static_cast<int>(x.size());
  Mat A(n, 2);
  Vec b(n);
  for (int i = 0; i < n; ++i) {
    A(i, 0) = std::log(x[i]);
    A(i, 1) = 1.0;
    b(i) = std::log(y[i]);
  }
  Vec c = A.colPivHouseholderQr().solve(b);
  return c(0);
}

ConvergenceTable temporal_convergence(const RunConfig& base, const std::vector<double>& dts, int fiber) {
  require(dts.size() >= 3, ErrorCode::Parameter, "convergence needs at least three time steps");
  ConvergenceTable tab;
  tab.dts = dts;
  std::vector<std::vector<Nx3>> traj;
  for (double dt : dts) {
    RunConfig c = base;
    c.dt = dt;
    long e = 0;
    traj.push_back(sample_trajectory(c, dts.front(), fiber, &e));
    tab.evals_per_step.push_back(e);
  }
  for (size_t i = 0; i + 1 < dts.size(); ++i) tab.errors.push_back(max_difference(traj[i], traj[i + 1], base.fiber.L));
  for (size_t i = 0; i + 1 < tab.errors.size(); ++i) tab.ratios.push_back(tab.errors[i] / tab.errors[i + 1]);
  std::vector<double> x(dts.begin(), dts.end() - 1);
  tab.fitted_slope = fitted_slope(x, tab.errors);
  return tab;
}

double trajectory_error(const RunConfig& cfg, const RunConfig& ref, double sample_dt, int fiber) {
  return trajectory_error(cfg, sampled_trajectory(ref, sample_dt, fiber), sample_dt, fiber);
}

double trajectory_error(const RunConfig& cfg, const std::vector<Nx3>& ref, double sample_dt, int fiber) {
  return max_difference(sample_trajectory(cfg, sample_dt, fiber, nullptr), ref, cfg.fiber.L);
}

std::vector<Nx3> sampled_trajectory(const RunConfig& cfg, double sample_dt, int fiber) {
  return sample_trajectory(cfg, sample_dt, fiber, nullptr);
}

NearQuadStudy near_quadrature_study(std::uint64_t seed, int nfibers, int ntargets, int nref) {
  NearQuadStudy st;
  st.fibers = nfibers;
  st.targets_per_fiber = ntargets;
  RandomFiberSpec spec;
  auto fibers = generate_random_fibers(spec, nfibers, seed).fibers;
  FiberParams fp;
  fp.L = spec.L;
  fp.N = spec.N;
  fp.eps = 1e-3;
  auto ws = workspace(fp.N, fp.L);
  StokesKernelParams kp = kernel_params(fp, 1.0 / (8.0 * kPi));
  NearOptions opt;
  opt.blend = false;
  CounterRng rng(seed, 0x7a46);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> G(0.0, 1.0);
  const double eL = fp.eps * fp.L;
  double consistency = 0.0;
  int checked = 0;
  for (const auto& f : fibers) {
    SourceFiber src = make_source(ws, fp, f.X, f.tau);
    Nx3 cT = ws->toCoef * f.tau;
    for (int band = 0; band < 2; ++band) {
      for (int k = 0; k < ntargets; ++k) {
        double e = 2.0 * U(rng) - 1.0;
        V3 X = eval_interp(src.cX, e);
        V3 T = eval_interp(cT, e).normalized();
        V3 n(G(rng), G(rng), G(rng));
        n -= n.dot(T) * T;
        n.normalize();
        double d = band == 0 ? (2.0 + 8.0 * U(rng)) * eL : (0.01 + 0.19 * U(rng)) * fp.L;
        V3 x = X + d * n;
        QuadratureDecision dec;
        V3 u = interaction_velocity(x, src, f.tau, kp, opt, &dec);
        V3 ur = refined_interaction_velocity(x, src, f.tau, kp, nref);
        double err = (u - ur).norm() / ur.norm();
        double digits = -std::log10(std::max(err, 1e-16));
        (band == 0 ? st.digits_short : st.digits_long).push_back(digits);
        (band == 0 ? st.routes_short : st.routes_long)[route_name(dec.route)]++;
        if (band == 0 && checked < 10) {
          V3 u2 = refined_interaction_velocity(x, src, f.tau, kp, 2 * nref);
          consistency = std::max(consistency, (ur - u2).norm() / u2.norm());
          ++checked;
        }
      }
    }
  }
  auto frac = [](const std::vector<double>& v) {
    int c = 0;
    for (double x : v) c += x >= 3.0;
    return v.empty() ? 0.0 : static_cast<double>(c) / v.size();
  };
  st.frac_short_3 = frac(st.digits_short);
  st.frac_long_3 = frac(st.digits_long);
  st.reference_self_consistency = consistency;
  return st;
}

void write_near_quadrature_study(const NearQuadStudy& st, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto histogram = [](const std::vector<double>& v) {
    std::vector<int> h(17, 0);
    for (double x : v) h[std::clamp(static_cast<int>(std::floor(x)), 0, 16)]++;
    return h;
  };
  json j = {{"fibers", st.fibers},
            {"targets_per_fiber", st.targets_per_fiber},
            {"fraction_3_digits_short", st.frac_short_3},
            {"fraction_3_digits_long", st.frac_long_3},
            {"reference_self_consistency", st.reference_self_consistency},
            {"histogram_short", histogram(st.digits_short)},
            {"histogram_long", histogram(st.digits_long)},
            {"routes_short", st.routes_short},
            {"routes_long", st.routes_long}};
  std::ofstream(std::filesystem::path(dir) / "near_quad.json") << j.dump(2) << '\n';
  std::ofstream csv(std::filesystem::path(dir) / "near_quad_digits.csv");
  csv << "band,digits\n";
  for (double d : st.digits_short) csv << "short," << d << '\n';
  for (double d : st.digits_long) csv << "long," << d << '\n';
}

double hexagonal_lattice_check(double nufft_tol) {
  std::vector<V3> x1 = {{0, 0, 0}, {1, 0, 0}, {0.5, 1, 0}, {1.5, 1, 0}};
  std::vector<V3> F1 = {V3::Constant(1), V3::Constant(-1), V3::Constant(2), V3::Constant(-2)};
  std::vector<V3> x2 = x1, F2 = F1;
  for (V3 v : {V3(1, 2, 0), V3(0, 2, 0), V3(1.5, 3, 0), V3(0.5, 3, 0)}) x2.push_back(v);
  for (int i = 0; i < 4; ++i) F2.push_back(F1[i]);
  ShearedDomain d1{V3(2, 2, 2), 0.5}, d2{V3(2, 4, 2), 0.0};
  EwaldOptions o;
  o.xi = 5.0;
  o.tol = 1e-8;
  o.nufft_tol = nufft_tol;
  EwaldPlan p1(d1.Lbox, 1e-2, 3.0, o), p2(d2.Lbox, 1e-2, 3.0, o);
  auto u1 = p1.velocities(x1, F1, d1);
  auto u2 = p2.velocities(x2, F2, d2);
  double e = 0.0;
  for (int i = 0; i < 4; ++i) e = std::max(e, (u1[i] - u2[i]).norm() / u2[i].norm());
  return e;
}

FinitePartOracle finite_part_oracle_check(int nfibers, int N, std::uint64_t seed, int skip_ends) {
  using boost::math::quadrature::gauss;
  RandomFiberSpec spec;
  spec.N = N;
  auto fibers = generate_random_fibers(spec, nfibers, seed).fibers;
  auto ws = workspace(N, spec.L);
  const double mu = 1.0, L = spec.L;
  const int panels = 250;  // per side, 20 points each
  FinitePartOracle res;
  for (const auto& fb : fibers) {
    Nx3 u = finite_part_velocity(*ws, fb.X, fb.tau, fb.tau, mu);
    // Continuous curve: exact antiderivative of the tangent interpolant, so |X'| = 1 at the nodes.
    Nx3 cf = ws->toCoef * fb.tau;
    Nx3 cX = (cheb_coef_antiderivative(N) * cf) * (0.5 * L);
    cX.row(0) += fb.X.row(0) - eval_interp(cX, ws->grid.x(0)).transpose();
    double node = 0.0, diff = 0.0, omax = 0.0;
    for (int p = skip_ends; p < N - skip_ends; ++p) {
      const double s = ws->s()(p);
      V3 xs = fb.X.row(p).transpose(), tp = fb.tau.row(p).transpose();
      M3 Ip = M3::Identity() + tp * tp.transpose();
      auto g = [&](double sp) -> V3 {
        double e = 2.0 * sp / L - 1.0;
        V3 R = xs - eval_interp(cX, e);
        double r = R.norm();
        V3 Rh = R / r;
        return (M3::Identity() + Rh * Rh.transpose()) / r * eval_interp(cf, e) - Ip * tp / std::abs(sp - s);
      };
      const auto& xg = gauss<double, 20>::abscissa();
      const auto& wg = gauss<double, 20>::weights();
      V3 o = V3::Zero();
      for (auto [a, b] : {std::pair{0.0, s}, std::pair{s, L}}) {
        const double h = (b - a) / panels;
        for (int k = 0; k < panels; ++k) {
          const double c = a + (k + 0.5) * h;
          for (size_t i = 0; i < xg.size(); ++i) o += 0.5 * h * wg[i] * (g(c - 0.5 * h * xg[i]) + g(c + 0.5 * h * xg[i]));
        }
      }
      o /= 8.0 * kPi * mu;
      double e = (o - V3(u.row(p).transpose())).norm();
      node = std::max(node, e / o.norm());
      diff = std::max(diff, e);
      omax = std::max(omax, o.norm());
    }
    res.max_node_relative = std::max(res.max_node_relative, node);
    res.max_fiber_relative = std::max(res.max_fiber_relative, diff / omax);
  }
  return res;
}

double sbt_matching_error(double eps, double L) {
  const double mu = 1.0;
  const V3 tau(1, 0, 0), f(0.3, 1.0, -0.5);
  FiberParams fp;
  fp.eps = eps;
  fp.L = L;
  StokesKernelParams kp = kernel_params(fp, mu);
  double err = 0.0;
  for (double frac : {0.25, 0.4, 0.5, 0.65}) {
    double s = frac * L;
    LineIntegralResult r = rpy_line_integral_straight(s, L, tau, f, kp.b, mu, 1e-11);
    double c = std::log(4.0 * s * (L - s) / std::pow(eps * L, 2));
    err = std::max(err, (r.value - local_drag_velocity(tau, c, f, mu)).norm());
  }
  return err;
}

NetworkState equilibrate_network(const RunConfig& cfg, double T, double dt) {
  RunConfig c = cfg;
  c.hydro = HydroMode::LocalDrag;
  c.gamma0_dot = 0.0;
  c.omega = 0.0;
  c.gravity[0] = c.gravity[1] = c.gravity[2] = 0.0;
  c.dt = dt;
  c.T = T;
  Simulation sim(c);
  for (long n = 0; n < sim.total_steps(); ++n) sim.step();
  require(!is_unstable(sim.stepper().fibers(), sim.workspace()), ErrorCode::Numerical,
          "equilibration became unstable");
  return {sim.stepper().fibers(), sim.links()};
}

RelaxationResult relaxation_run(const RunConfig& cfg, double spacing, double window, const NetworkState* start) {
  require(cfg.t_off > 0.0 && cfg.t_off < cfg.T, ErrorCode::Parameter, "relaxation needs 0 < t_off < T");
  auto t0 = std::chrono::steady_clock::now();
  auto owned = start ? std::make_unique<Simulation>(cfg, start->fibers, start->links) : std::make_unique<Simulation>(cfg);
  Simulation& sim = *owned;
  double r = spacing / cfg.dt;
  long every = std::lround(r);
  require(every >= 1 && std::abs(r - every) < 1e-8, ErrorCode::Parameter, "spacing must be a multiple of dt");
  long off_step = std::lround(cfg.t_off / cfg.dt);
  std::vector<std::vector<Nx3>> snaps;
  const long nsteps = sim.total_steps();
  for (long n = 0; n < nsteps; ++n) {
    sim.step();
    long done = n + 1;
    if (done >= off_step && (done - off_step) % every == 0) {
      std::vector<Nx3> X;
      for (const auto& f : sim.stepper().fibers()) X.push_back(f.X);
      snaps.push_back(std::move(X));
    }
  }
  RelaxationResult res;
  std::vector<double> v = mean_fiber_velocity(snaps, sim.workspace(), spacing, window);
  require(!v.empty() && v[0] > 0.0, ErrorCode::Numerical, "relaxation: no motion after the flow stops");
  for (size_t k = 0; k < v.size(); ++k) {
    res.t.push_back(k * spacing);
    res.v.push_back(v[k] / v[0]);
  }
  res.fit = fit_two_exponentials(res.t, res.v);
  res.wall_seconds = seconds_since(t0);
  return res;
}

}  // namespace fibersim
