#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fibersim/periodic_ewald.hpp"
#include "fibersim/fiber.hpp"

namespace fibersim {

struct CrossLink {
  int i = 0, j = 0;
  double si = 0.0, sj = 0.0;
  double Kc = 1.0;
  double ell = 0.5;
  std::array<int, 3> image{0, 0, 0};  // lattice offset of fiber j's anchor, in sheared lattice units
};

// Lattice vector of an integer image at strain g.
V3 lattice_shift(const std::array<int, 3>& n, const V3& Lbox, double g);

// Gaussian smoothing weights delta_h(s_p - s_star) with discrete unit mass sum_p delta w_p = 1.
Vec smoothing_kernel(const SpectralWorkspace& ws, double s_star, double sigma);

struct NetworkParams {
  double sigma = 0.2;  // Gaussian width (length)
  bool periodic = true;
  V3 Lbox = V3::Constant(1.0);
};

// Force densities on all fibers from the cross-linkers at strain g.
std::vector<Nx3> cl_force_density(const std::vector<CrossLink>& links, const std::vector<Nx3>& X,
                                  const SpectralWorkspace& ws, const NetworkParams& np, double g);

// Force density on the two fibers of one link (fiber j shifted to the link's image).
void link_force(const CrossLink& c, const Nx3& Xi, const Nx3& Xj_image, const SpectralWorkspace& ws, double sigma,
                Nx3& fi, Nx3& fj);

// Random binding between 16 uniformly spaced sites per fiber; pairs closer than ell (minimum image at
// strain 0) are linked until count links exist.
std::vector<CrossLink> bind_links(const std::vector<Nx3>& X, const SpectralWorkspace& ws, int count, double ell,
                                  double Kc, std::uint64_t seed, const NetworkParams& np,
                                  long max_attempts = -1);

// Batchelor stress (3x3) at strain g from lambda, bending force and cross-linker forces.
M3 fiber_stress(const std::vector<Nx3>& X, const std::vector<Nx3>& lambda, const SpectralWorkspace& ws,
                const Mat& Fop, double volume);
M3 cl_stress(const std::vector<CrossLink>& links, const std::vector<Nx3>& X, const SpectralWorkspace& ws,
             const NetworkParams& np, double g, double volume);

struct Moduli {
  double G1 = 0.0;  // elastic
  double G2 = 0.0;  // viscous (fiber part)
};
// Midpoint-rule projections of sigma21 samples at times t onto sin and cos; T must be a whole
// number of periods.
Moduli moduli_from_series(const std::vector<double>& t, const std::vector<double>& sigma21, double omega,
                          double gamma0, double T);

// Mean fiber L2 displacement over a window: snapshots[k] is the configuration at time k*spacing;
// window/spacing must be a whole number.
std::vector<double> mean_fiber_velocity(const std::vector<std::vector<Nx3>>& snapshots, const SpectralWorkspace& ws,
                                        double spacing, double window = 0.05);

struct TwoExpFit {
  double a1 = 0.0, tau1 = 0.0, a2 = 0.0, tau2 = 0.0;
  double rms = 0.0;
};
// Least-squares fit y(t) ~ a1 exp(-t/tau1) + a2 exp(-t/tau2), tau1 <= tau2.
TwoExpFit fit_two_exponentials(const std::vector<double>& t, const std::vector<double>& y);

}  // namespace fibersim
