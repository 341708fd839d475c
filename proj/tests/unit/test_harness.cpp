#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fibersim/error.hpp"
#include "fibersim/fibersim.h"
#include "fibersim/harness.hpp"

using namespace fibersim;

TEST_CASE("config parsing, validation and hashing") {
  RunConfig c = parse_config(R"({"scenario": "three_fibers", "fiber": {"N": 24, "kappa": 0.01},
                                  "domain": {"boundary": "periodic", "Ld": 2.4},
                                  "stepper": {"dt": 0.05, "T": 0.1, "gmres_iters": 1},
                                  "hydro": {"mode": "full"}})");
  CHECK(c.fiber.N == 24);
  CHECK(c.periodic);
  CHECK(c.gmres_iters == 1);
  RunConfig d = parse_config(config_to_json(c));
  CHECK(config_hash(c) == config_hash(d));
  d.dt = 0.025;
  CHECK(config_hash(c) != config_hash(d));
  auto code = [](const char* s) {
    try {
      parse_config(s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Parameter;
  };
  CHECK(code(R"({"scenario": "nope"})") == ErrorCode::Config);
  CHECK(code(R"({"fiber": {"bogus": 1}})") == ErrorCode::Config);
  CHECK(code(R"({"stepper": {"dt": -1}})") == ErrorCode::Config);
  CHECK(code("{not json") == ErrorCode::Config);
}

TEST_CASE("falling quartet without nonlocal terms falls straight down") {
  RunConfig c;
  c.scenario = "quartet";
  c.hydro = HydroMode::LocalDrag;
  c.fiber.ellipsoidal = true;
  c.gravity[2] = -5.0;
  c.dt = 5e-3;
  c.T = 0.25;
  RunSummary s = run_scenario(c);
  auto init = quartet_fibers(16);
  for (int i = 0; i < 4; ++i) {
    Nx3 d = s.final_state[i].X - init[i].X;
    CHECK(d.leftCols(2).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(d(0, 2) < 0.0);
  }
}

TEST_CASE("falling quartet trajectory (frozen)") {
  RunConfig c;
  c.scenario = "quartet";
  c.hydro = HydroMode::Full;
  c.finite_part = false;
  c.near_corrections = false;
  c.fiber.ellipsoidal = true;
  c.gravity[2] = -5.0;
  c.dt = 0.025;
  c.T = 0.25;
  RunSummary s = run_scenario(c);
  // Frozen from this configuration; guards against unintended changes.
  CHECK(s.final_state[0].X(0, 2) == doctest::Approx(-2.9982495754436731).epsilon(1e-10));
}

TEST_CASE("l2 difference on the fine grid") {
  auto a = three_fibers(16), b = three_fibers(24);
  CHECK(l2_difference(a[0].X, b[0].X, 2.0) < 1e-12);
  Nx3 s = a[0].X;
  s.col(2).array() += 0.1;
  CHECK(l2_difference(a[0].X, s, 2.0) == doctest::Approx(0.1 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("run writes the output bundle") {
  auto dir = std::filesystem::temp_directory_path() / "fibersim_unit_run";
  std::filesystem::remove_all(dir);
  RunConfig c;
  c.scenario = "mesh";
  c.periodic = true;
  c.Ld = 2.0;
  c.fiber_count = 8;
  c.links = 10;
  c.hydro = HydroMode::LocalDrag;
  c.fiber.kappa = 0.01;
  c.omega = 2.0 * 3.141592653589793;
  c.gamma0_dot = 0.2 * 3.141592653589793;
  c.dt = 0.05;
  c.T = 1.0;
  c.snapshot_every = 10;
  c.output_dir = dir.string();
  c.emit_plots = true;
  RunSummary s = run_scenario(c);
  CHECK(s.has_moduli);
  for (const char* f : {"manifest.json", "stress.csv", "moduli.json", "diagnostics.log", "trajectory_000000.csv",
                        "trajectory_000010_coef.csv", "trajectory_000020.csv", "stress.gp"})
    CHECK(std::filesystem::exists(dir / f));
  RunSummary t = run_scenario(c);
  REQUIRE(s.stress.size() == t.stress.size());
  for (size_t k = 0; k < s.stress.size(); ++k) CHECK(s.stress[k].cl == t.stress[k].cl);
  std::filesystem::remove_all(dir);
}

TEST_CASE("C API round trip") {
  fs_simulation* sim = nullptr;
  REQUIRE(fs_simulation_create(R"({"scenario": "quartet", "hydro": {"mode": "local"}, "gravity": [0, 0, -5],
                                   "stepper": {"dt": 0.01, "T": 0.1}})",
                               &sim) == FS_OK);
  int F = 0, N = 0;
  CHECK(fs_simulation_shape(sim, &F, &N) == FS_OK);
  CHECK(F == 4);
  fs_step_info info{};
  CHECK(fs_simulation_step(sim, &info) == FS_OK);
  CHECK(info.hydro_evals == 1);
  std::vector<double> X(F * N * 3);
  CHECK(fs_simulation_positions(sim, X.data(), X.size()) == FS_OK);
  CHECK(fs_simulation_positions(sim, X.data(), 3) == FS_ERR_DIMENSION);
  fs_simulation_destroy(sim);
  CHECK(fs_simulation_create("{\"scenario\": 3}", &sim) == FS_ERR_CONFIG);
  CHECK(std::string(fs_last_error()).size() > 0);
  double e = 0.0;
  CHECK(fs_check_hex_lattice(0.0, &e) == FS_ERR_PARAMETER);
}

TEST_CASE("shipped configurations parse and validate") {
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(FIBERSIM_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(validate(load_config(e.path().string())));
    ++n;
  }
  CHECK(n >= 4);
}
