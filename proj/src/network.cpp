#include "fibersim/network.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <unsupported/Eigen/NumericalDiff>
#include <unsupported/Eigen/NonLinearOptimization>

#include "fibersim/error.hpp"
#include "fibersim/rng.hpp"

namespace fibersim {

V3 lattice_shift(const std::array<int, 3>& n, const V3& Lbox, double g) {
  return V3(n[0] * Lbox(0) + g * n[1] * Lbox(1), n[1] * Lbox(1), n[2] * Lbox(2));
}

Vec smoothing_kernel(const SpectralWorkspace& ws, double s_star, double sigma) {
  require(sigma > 0.0, ErrorCode::Parameter, "smoothing width must be positive");
  Vec d = (ws.s().array() - s_star).square();
  Vec g = (-d.array() / (2.0 * sigma * sigma)).exp();
  double Z = g.dot(ws.w());
  require(Z > 0.0, ErrorCode::Numerical, "smoothing kernel has zero mass");
  return g / Z;
}

namespace {
V3 interp_at(const SpectralWorkspace& ws, const Nx3& X, double s) {
  return eval_interp(ws.toCoef * X, 2.0 * s / ws.L - 1.0);
}
}  // namespace

void link_force(const CrossLink& c, const Nx3& Xi, const Nx3& Xj, const SpectralWorkspace& ws, double sigma, Nx3& fi,
                Nx3& fj) {
  V3 d = interp_at(ws, Xi, c.si) - interp_at(ws, Xj, c.sj);
  double r = d.norm();
  require(r > 1e-12, ErrorCode::Numerical, "degenerate cross-linker: anchors coincide");
  double k = -c.Kc * (1.0 - c.ell / r);
  Vec di = smoothing_kernel(ws, c.si, sigma), dj = smoothing_kernel(ws, c.sj, sigma);
  const Vec& w = ws.w();
  V3 Xbi = (Xi.transpose() * di.cwiseProduct(w));
  V3 Xbj = (Xj.transpose() * dj.cwiseProduct(w));
  fi = k * (di.asDiagonal() * (Xi.rowwise() - Xbj.transpose()));
  fj = k * (dj.asDiagonal() * (Xj.rowwise() - Xbi.transpose()));
}

std::vector<Nx3> cl_force_density(const std::vector<CrossLink>& links, const std::vector<Nx3>& X,
                                  const SpectralWorkspace& ws, const NetworkParams& np, double g) {
  const int F = static_cast<int>(X.size());
  std::vector<Nx3> f(F, Nx3::Zero(ws.N, 3));
  Nx3 fi, fj;
  for (const auto& c : links) {
    require(c.i >= 0 && c.i < F && c.j >= 0 && c.j < F && c.i != c.j, ErrorCode::Parameter, "invalid link fibers");
    Nx3 Xj = X[c.j];
    if (np.periodic) Xj.rowwise() += lattice_shift(c.image, np.Lbox, g).transpose();
    link_force(c, X[c.i], Xj, ws, np.sigma, fi, fj);
    f[c.i] += fi;
    f[c.j] += fj;
  }
  return f;
}

std::vector<CrossLink> bind_links(const std::vector<Nx3>& X, const SpectralWorkspace& ws, int count, double ell,
                                  double Kc, std::uint64_t seed, const NetworkParams& np, long max_attempts) {
  const int F = static_cast<int>(X.size());
  require(count >= 0 && ell > 0.0, ErrorCode::Parameter, "invalid binding request");
  std::vector<CrossLink> links;
  if (count == 0) return links;
  require(F >= 2, ErrorCode::Parameter, "binding needs at least two fibers");
  const int ns = 16;
  Vec su = Vec::LinSpaced(ns, 0.0, ws.L);
  std::vector<Nx3> sites(F);
  for (int i = 0; i < F; ++i) sites[i] = eval_series(ws.toCoef * X[i], Vec::LinSpaced(ns, -1.0, 1.0));
  ShearedDomain dom{np.Lbox, 0.0};
  CounterRng rng(seed, 0xb1d);
  std::uniform_int_distribution<int> fib(0, F - 1), site(0, ns - 1);
  if (max_attempts < 0) max_attempts = 5000L * count + 100000L;
  long attempts = 0;
  while (static_cast<int>(links.size()) < count) {
    require(attempts++ < max_attempts, ErrorCode::Parameter,
            "cross-linker binding failed: " + std::to_string(links.size()) + " of " + std::to_string(count) +
                " links after " + std::to_string(max_attempts) + " attempts");
    int i = fib(rng), j = fib(rng);
    int a = site(rng), b = site(rng);
    if (i == j) continue;
    V3 d = sites[i].row(a).transpose() - sites[j].row(b).transpose();
    V3 dm = np.periodic ? dom.minimum_image(d) : d;
    if (dm.norm() >= ell) continue;
    CrossLink c;
    c.i = i;
    c.j = j;
    c.si = su(a);
    c.sj = su(b);
    c.Kc = Kc;
    c.ell = ell;
    V3 shift = d - dm;
    c.image = {static_cast<int>(std::lround(shift(0) / np.Lbox(0))), static_cast<int>(std::lround(shift(1) / np.Lbox(1))),
               static_cast<int>(std::lround(shift(2) / np.Lbox(2)))};
    links.push_back(c);
  }
  return links;
}

M3 fiber_stress(const std::vector<Nx3>& X, const std::vector<Nx3>& lambda, const SpectralWorkspace& ws,
                const Mat& Fop, double volume) {
  require(X.size() == lambda.size(), ErrorCode::Dimension, "stress: size mismatch");
  M3 s = M3::Zero();
  const Vec& w = ws.w();
  for (size_t i = 0; i < X.size(); ++i) {
    Nx3 f = lambda[i] + Fop * X[i];
    s += X[i].transpose() * w.asDiagonal() * f;
  }
  return -s / volume;
}

M3 cl_stress(const std::vector<CrossLink>& links, const std::vector<Nx3>& X, const SpectralWorkspace& ws,
             const NetworkParams& np, double g, double volume) {
  M3 s = M3::Zero();
  const Vec& w = ws.w();
  Nx3 fi, fj;
  for (const auto& c : links) {
    Nx3 Xj = X[c.j];
    if (np.periodic) Xj.rowwise() += lattice_shift(c.image, np.Lbox, g).transpose();
    link_force(c, X[c.i], Xj, ws, np.sigma, fi, fj);
    s += X[c.i].transpose() * w.asDiagonal() * fi + Xj.transpose() * w.asDiagonal() * fj;
  }
  return -s / volume;
}

Moduli moduli_from_series(const std::vector<double>& t, const std::vector<double>& sigma21, double omega,
                          double gamma0, double T) {
  require(t.size() == sigma21.size() && !t.empty(), ErrorCode::Dimension, "moduli: series size mismatch");
  require(omega > 0.0 && gamma0 > 0.0 && T > 0.0, ErrorCode::Parameter, "moduli: parameters must be positive");
  double periods = omega * T / (2.0 * std::numbers::pi);
  require(std::abs(periods - std::round(periods)) < 1e-8 && std::round(periods) >= 1.0, ErrorCode::Parameter,
          "moduli: T must be a whole number of periods");
  const double h = T / static_cast<double>(t.size());
  Moduli m;
  for (size_t k = 0; k < t.size(); ++k) {
    m.G1 += sigma21[k] * std::sin(omega * t[k]);
    m.G2 += sigma21[k] * std::cos(omega * t[k]);
  }
  m.G1 *= 2.0 * h / (gamma0 * T);
  m.G2 *= 2.0 * h / (gamma0 * T);
  return m;
}

std::vector<double> mean_fiber_velocity(const std::vector<std::vector<Nx3>>& snapshots, const SpectralWorkspace& ws,
                                        double spacing, double window) {
  require(spacing > 0.0 && window > 0.0, ErrorCode::Parameter, "velocity window must be positive");
  double lagd = window / spacing;
  long lag = std::lround(lagd);
  require(lag >= 1 && std::abs(lagd - lag) < 1e-8, ErrorCode::Parameter, "window must be a multiple of the spacing");
  require(static_cast<long>(snapshots.size()) > lag, ErrorCode::Parameter, "insufficient snapshots for the window");
  std::vector<double> v;
  const Vec& w = ws.w();
  for (size_t k = 0; k + lag < snapshots.size(); ++k) {
    const auto& a = snapshots[k];
    const auto& b = snapshots[k + lag];
    require(a.size() == b.size() && !a.empty(), ErrorCode::Dimension, "snapshot fiber counts differ");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += std::sqrt((a[i] - b[i]).rowwise().squaredNorm().dot(w));
    v.push_back(acc / a.size());
  }
  return v;
}

namespace {
struct TwoExpFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  const std::vector<double>& t;
  const std::vector<double>& y;
  TwoExpFunctor(const std::vector<double>& t_, const std::vector<double>& y_) : t(t_), y(y_) {}
  int inputs() const { return 4; }
  int values() const { return static_cast<int>(t.size()); }
  int operator()(const InputType& p, ValueType& r) const {
    for (size_t k = 0; k < t.size(); ++k)
      r(k) = p(0) * std::exp(-t[k] * std::exp(-p(1))) + p(2) * std::exp(-t[k] * std::exp(-p(3))) - y[k];
    return 0;
  }
};

// Amplitudes by linear least squares for fixed time constants.
double amp_fit(const std::vector<double>& t, const std::vector<double>& y, double t1, double t2, double& a1,
               double& a2) {
  Mat A(t.size(), 2);
  Vec b(t.size());
  for (size_t k = 0; k < t.size(); ++k) {
    A(k, 0) = std::exp(-t[k] / t1);
    A(k, 1) = std::exp(-t[k] / t2);
    b(k) = y[k];
  }
  Vec c = A.colPivHouseholderQr().solve(b);
  a1 = c(0);
  a2 = c(1);
  return (A * c - b).squaredNorm();
}
}  // namespace

TwoExpFit fit_two_exponentials(const std::vector<double>& t, const std::vector<double>& y) {
  require(t.size() == y.size() && t.size() >= 4, ErrorCode::Parameter, "fit needs at least four samples");
  TwoExpFit best;
  double bres = 1e300;
  const int ng = 60;
  for (int i = 0; i < ng; ++i)
    for (int j = i + 1; j < ng; ++j) {
      double t1 = std::pow(10.0, -2.0 + 4.0 * i / (ng - 1.0));
      double t2 = std::pow(10.0, -2.0 + 4.0 * j / (ng - 1.0));
      double a1, a2;
      double r = amp_fit(t, y, t1, t2, a1, a2);
      if (r < bres) {
        bres = r;
        best = {a1, t1, a2, t2, 0.0};
      }
    }
  TwoExpFunctor fn(t, y);
  Eigen::NumericalDiff<TwoExpFunctor> nd(fn);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<TwoExpFunctor>> lm(nd);
  Eigen::VectorXd p(4);
  p << best.a1, std::log(best.tau1), best.a2, std::log(best.tau2);
  lm.minimize(p);
  Vec r(t.size());
  fn(p, r);
  if (r.squaredNorm() < bres && p.allFinite()) {
    best = {p(0), std::exp(p(1)), p(2), std::exp(p(3)), 0.0};
    bres = r.squaredNorm();
  }
  if (best.tau1 > best.tau2) {
    std::swap(best.tau1, best.tau2);
    std::swap(best.a1, best.a2);
  }
  best.rms = std::sqrt(bres / t.size());
  return best;
}

}  // namespace fibersim
