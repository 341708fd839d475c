#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fibersim/fibersim.h"

namespace {

int report(int status) {
  if (status != FS_OK) std::fprintf(stderr, "error (%d): %s\n", status, fs_last_error());
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-linked fiber suspension simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fs_version());

  std::string config, outdir;
  bool emit_plots = false;
  auto* run = app.add_subcommand("run", "Simulate a scenario from a JSON configuration");
  run->add_option("config", config, "Configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output-dir", outdir, "Output directory (overrides the configuration)");
  run->add_flag("--emit-plots", emit_plots, "Write gnuplot-ready tables");

  auto* study = app.add_subcommand("study", "Accuracy studies");
  study->require_subcommand(1);
  std::uint64_t seed = 1;
  int nfibers = 100, ntargets = 100;
  std::string study_out = "near_quad_study";
  auto* nq = study->add_subcommand("near-quad", "Near-fiber quadrature accuracy on random fibers");
  nq->add_option("--seed", seed, "Random seed")->required();
  nq->add_option("--fibers", nfibers, "Number of fibers")->check(CLI::PositiveNumber);
  nq->add_option("--targets", ntargets, "Targets per fiber and band")->check(CLI::PositiveNumber);
  nq->add_option("-o,--output-dir", study_out, "Output directory");

  auto* check = app.add_subcommand("check", "Consistency checks");
  check->require_subcommand(1);
  double tol = 1e-8;
  double expect = -1.0;
  auto* hex = check->add_subcommand("hex-lattice", "Sheared versus rectangular periodic cell");
  hex->add_option("--tol", tol, "Fourier-space tolerance")->required();
  hex->add_option("--expect", expect, "Fail with the acceptance code when the error exceeds this value");

  std::vector<double> dts;
  auto* conv = app.add_subcommand("converge", "Successive-refinement temporal convergence table");
  conv->add_option("config", config, "Configuration file")->required()->check(CLI::ExistingFile);
  conv->add_option("--dts", dts, "Time steps, coarsest first")->required()->expected(3, -1);

  std::vector<double> omegas;
  auto* mod = app.add_subcommand("moduli", "Elastic and viscous moduli over a frequency sweep");
  mod->add_option("config", config, "Configuration file")->required()->check(CLI::ExistingFile);
  mod->add_option("--omegas", omegas, "Angular frequencies")->required()->expected(1, -1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : FS_ERR_CONFIG;
  }

  if (*run) {
    fs_run_summary s{};
    int st = fs_run(config.c_str(), outdir.empty() ? nullptr : outdir.c_str(), emit_plots ? 1 : 0, &s);
    if (st == FS_OK || st == FS_ERR_NUMERICAL)
      std::printf("steps %ld  hydro evaluations %ld  max per step %ld  max tangent deviation %.3e  %s\n", s.steps,
                  s.hydro_evals, s.max_evals_per_step, s.max_tangent_deviation, s.stable ? "stable" : "unstable");
    if (st == FS_OK && s.has_moduli) std::printf("G' %.6g  G'' %.6g\n", s.G_elastic, s.G_viscous);
    return report(st);
  }
  if (*nq) {
    fs_near_quad_result r{};
    int st = fs_study_near_quad(seed, nfibers, ntargets, study_out.c_str(), &r);
    if (st == FS_OK)
      std::printf("short band: %.2f%% >= 3 digits (min %.2f)  long band: %.2f%% >= 3 digits  reference drift %.2e\n",
                  100.0 * r.frac_short_3, r.min_digits_short, 100.0 * r.frac_long_3, r.reference_self_consistency);
    return report(st);
  }
  if (*hex) {
    double err = 0.0;
    int st = fs_check_hex_lattice(tol, &err);
    if (st != FS_OK) return report(st);
    std::printf("tolerance %.1e  max relative discrepancy %.3e\n", tol, err);
    if (expect > 0.0 && err > expect) {
      std::fprintf(stderr, "discrepancy exceeds %.1e\n", expect);
      return FS_ERR_ACCEPTANCE;
    }
    return FS_OK;
  }
  if (*conv) {
    std::vector<double> err(dts.size() - 1);
    double slope = 0.0;
    int st = fs_converge(config.c_str(), dts.data(), static_cast<int>(dts.size()), err.data(), &slope);
    if (st != FS_OK) return report(st);
    std::printf("%12s %14s %8s\n", "dt", "error", "ratio");
    for (size_t i = 0; i < err.size(); ++i) {
      if (i == 0)
        std::printf("%12g %14.6e %8s\n", dts[i], err[i], "-");
      else
        std::printf("%12g %14.6e %8.3f\n", dts[i], err[i], err[i - 1] / err[i]);
    }
    std::printf("fitted slope %.3f\n", slope);
    return FS_OK;
  }
  if (*mod) {
    std::vector<double> g1(omegas.size()), g2(omegas.size());
    int st = fs_moduli(config.c_str(), omegas.data(), static_cast<int>(omegas.size()), g1.data(), g2.data());
    if (st != FS_OK) return report(st);
    std::printf("%12s %14s %14s\n", "omega", "G'", "G''");
    for (size_t k = 0; k < omegas.size(); ++k) std::printf("%12g %14.6e %14.6e\n", omegas[k], g1[k], g2[k]);
    return FS_OK;
  }
  return FS_OK;
}
