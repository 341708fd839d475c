#include "fibersim/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fibersim/error.hpp"

namespace fibersim {

using nlohmann::json;

namespace {

const std::set<std::string> kScenarios{"quartet", "three_fibers", "suspension", "mesh"};

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  require(obj.is_object(), ErrorCode::Config, where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    require(allowed.count(it.key()) > 0, ErrorCode::Config, where + ": unknown key '" + it.key() + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

HydroMode parse_hydro_mode(const std::string& s) {
  if (s == "local") return HydroMode::LocalDrag;
  if (s == "intra") return HydroMode::IntraFiber;
  if (s == "full") return HydroMode::Full;
  throw Error(ErrorCode::Config, "unknown hydro mode '" + s + "' (local | intra | full)");
}

namespace {
const char* mode_key(HydroMode m) {
  switch (m) {
    case HydroMode::LocalDrag: return "local";
    case HydroMode::IntraFiber: return "intra";
    default: return "full";
  }
}
}  // namespace

void validate(const RunConfig& c) {
  require(kScenarios.count(c.scenario) > 0, ErrorCode::Config, "unknown scenario '" + c.scenario + "'");
  try {
    validate(c.fiber);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  require(c.mu > 0.0, ErrorCode::Config, "mu must be positive");
  require(!c.periodic || c.Ld > 0.0, ErrorCode::Config, "domain.Ld must be positive");
  require(c.dt > 0.0 && c.T >= 0.0, ErrorCode::Config, "stepper.dt must be positive and stepper.T non-negative");
  require(c.gmres_iters >= 0, ErrorCode::Config, "stepper.gmres_iters must be non-negative");
  require(c.ewald_tol > 0.0 && c.ewald_tol < 1.0 && c.nufft_tol > 0.0 && c.nufft_tol < 1.0, ErrorCode::Config,
          "ewald tolerances must lie in (0,1)");
  require(c.omega >= 0.0, ErrorCode::Config, "flow.omega must be non-negative");
  if (c.scenario == "suspension" || c.scenario == "mesh")
    require(c.fiber_count > 0 && c.periodic, ErrorCode::Config, "suspension and mesh need fibers.count > 0 and a periodic domain");
  require(c.links >= 0 && c.Kc >= 0.0 && c.ell > 0.0 && c.sigma_over_L > 0.0, ErrorCode::Config,
          "network parameters out of range");
  require(c.links == 0 || c.periodic, ErrorCode::Config, "cross-linkers need a periodic domain");
  require(c.snapshot_every >= 0, ErrorCode::Config, "output.snapshot_every must be non-negative");
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, std::string("config parse error: ") + e.what());
  }
  check_keys(j, "config", {"scenario", "fiber", "domain", "flow", "stepper", "hydro", "ewald", "network", "fibers",
                           "gravity", "seed", "output"});
  RunConfig c;
  read(j, "scenario", c.scenario);
  read(j, "seed", c.seed);
  if (j.contains("fiber")) {
    const json& f = j["fiber"];
    check_keys(f, "fiber", {"N", "L", "eps", "kappa", "delta", "ellipsoidal"});
    read(f, "N", c.fiber.N);
    read(f, "L", c.fiber.L);
    read(f, "eps", c.fiber.eps);
    read(f, "kappa", c.fiber.kappa);
    read(f, "delta", c.fiber.delta);
    read(f, "ellipsoidal", c.fiber.ellipsoidal);
  }
  if (j.contains("domain")) {
    const json& d = j["domain"];
    check_keys(d, "domain", {"boundary", "Ld"});
    std::string b = c.periodic ? "periodic" : "free";
    read(d, "boundary", b);
    require(b == "free" || b == "periodic", ErrorCode::Config, "domain.boundary must be free or periodic");
    c.periodic = (b == "periodic");
    read(d, "Ld", c.Ld);
  }
  if (j.contains("flow")) {
    const json& f = j["flow"];
    check_keys(f, "flow", {"gamma0_dot", "omega", "t_off"});
    read(f, "gamma0_dot", c.gamma0_dot);
    read(f, "omega", c.omega);
    read(f, "t_off", c.t_off);
  }
  if (j.contains("stepper")) {
    const json& s = j["stepper"];
    check_keys(s, "stepper", {"dt", "T", "gmres_iters", "converged_start"});
    read(s, "dt", c.dt);
    read(s, "T", c.T);
    read(s, "gmres_iters", c.gmres_iters);
    read(s, "converged_start", c.converged_start);
  }
  if (j.contains("hydro")) {
    const json& h = j["hydro"];
    check_keys(h, "hydro", {"mode", "finite_part", "near_corrections", "mu"});
    std::string m = mode_key(c.hydro);
    read(h, "mode", m);
    c.hydro = parse_hydro_mode(m);
    read(h, "finite_part", c.finite_part);
    read(h, "near_corrections", c.near_corrections);
    read(h, "mu", c.mu);
  }
  if (j.contains("ewald")) {
    const json& e = j["ewald"];
    check_keys(e, "ewald", {"xi", "tol", "nufft_tol"});
    read(e, "xi", c.ewald_xi);
    read(e, "tol", c.ewald_tol);
    read(e, "nufft_tol", c.nufft_tol);
  }
  if (j.contains("network")) {
    const json& n = j["network"];
    check_keys(n, "network", {"links", "Kc", "ell", "sigma_over_L"});
    read(n, "links", c.links);
    read(n, "Kc", c.Kc);
    read(n, "ell", c.ell);
    read(n, "sigma_over_L", c.sigma_over_L);
  }
  if (j.contains("fibers")) {
    const json& f = j["fibers"];
    check_keys(f, "fibers", {"count"});
    read(f, "count", c.fiber_count);
  }
  if (j.contains("gravity")) {
    std::vector<double> g;
    read(j, "gravity", g);
    require(g.size() == 3, ErrorCode::Config, "gravity must have three components");
    for (int d = 0; d < 3; ++d) c.gravity[d] = g[d];
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    check_keys(o, "output", {"dir", "snapshot_every", "emit_plots"});
    read(o, "dir", c.output_dir);
    read(o, "snapshot_every", c.snapshot_every);
    read(o, "emit_plots", c.emit_plots);
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Config, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  j["seed"] = c.seed;
  j["fiber"] = {{"N", c.fiber.N}, {"L", c.fiber.L}, {"eps", c.fiber.eps}, {"kappa", c.fiber.kappa},
                {"delta", c.fiber.delta}, {"ellipsoidal", c.fiber.ellipsoidal}};
  j["domain"] = {{"boundary", c.periodic ? "periodic" : "free"}, {"Ld", c.Ld}};
  j["flow"] = {{"gamma0_dot", c.gamma0_dot}, {"omega", c.omega}, {"t_off", c.t_off}};
  j["stepper"] = {{"dt", c.dt}, {"T", c.T}, {"gmres_iters", c.gmres_iters}, {"converged_start", c.converged_start}};
  j["hydro"] = {{"mode", mode_key(c.hydro)}, {"finite_part", c.finite_part},
                {"near_corrections", c.near_corrections}, {"mu", c.mu}};
  j["ewald"] = {{"xi", c.ewald_xi}, {"tol", c.ewald_tol}, {"nufft_tol", c.nufft_tol}};
  j["network"] = {{"links", c.links}, {"Kc", c.Kc}, {"ell", c.ell}, {"sigma_over_L", c.sigma_over_L}};
  j["fibers"] = {{"count", c.fiber_count}};
  j["gravity"] = {c.gravity[0], c.gravity[1], c.gravity[2]};
  j["output"] = {{"dir", c.output_dir}, {"snapshot_every", c.snapshot_every}, {"emit_plots", c.emit_plots}};
  return j.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.output_dir.clear();
  std::string s = json::parse(config_to_json(c)).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fibersim
