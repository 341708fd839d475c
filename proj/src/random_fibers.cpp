#include "fibersim/random_fibers.hpp"

#include <cmath>
#include <random>

#include "fibersim/error.hpp"
#include "fibersim/rng.hpp"

namespace fibersim {

RandomFiberResult generate_random_fibers(const RandomFiberSpec& spec, int count, std::uint64_t seed) {
  require(spec.ncoef >= 1 && spec.N >= 4 && spec.L > 0.0 && count >= 0, ErrorCode::Parameter,
          "invalid random fiber specification");
  auto ws = workspace(spec.N, spec.L);
  Mat T = cheb_vandermonde(ws->grid.x, spec.ncoef);
  CounterRng rng(seed, 0x7a11);
  std::normal_distribution<double> normal(0.0, 1.0);
  RandomFiberResult out;
  const int kmax = std::min(spec.ncoef, spec.N) - 1;
  while (static_cast<int>(out.fibers.size()) < count) {
    require(!(out.draws >= 100000 && out.fibers.size() * 100 < out.draws), ErrorCode::Parameter,
            "random fiber acceptance rate below 1%");
    ++out.draws;
    Nx3 c(spec.ncoef, 3);
    for (int k = 0; k < spec.ncoef; ++k)
      for (int d = 0; d < 3; ++d) {
        double z = normal(rng);
        c(k, d) = (spec.max_modes >= 0 && k > spec.max_modes) ? 0.0 : z * std::exp(-spec.decay * k);
      }
    Nx3 tau = T * c;
    if (tau.rowwise().norm().minCoeff() < 1e-8) continue;
    FiberState f = fiber_from_tangents(*ws, tau, V3::Zero());
    Nx3 a = ws->toCoef * f.X;
    bool ok = true;
    for (int k = 2; k <= kmax && ok; ++k) ok = a.row(k).norm() <= std::exp(-spec.gate * k);
    if (!ok) continue;
    // Center the fiber at the origin.
    V3 mean = (ws->w().transpose() * f.X).transpose() / spec.L;
    f.X.rowwise() -= mean.transpose();
    out.fibers.push_back(std::move(f));
  }
  return out;
}

}  // namespace fibersim
