#include "fibersim/periodic_ewald.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <fftw3.h>

#include "fibersim/error.hpp"
#include "fibersim/mobility.hpp"

namespace fibersim {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_half(double v, double L) { return v - L * std::nearbyint(v / L); }

double wrap_unit(double v, double L) {
  double w = v - L * std::floor(v / L);
  return (w >= L) ? 0.0 : w;
}

// j0(x) - j1(x)/x and j2(x), with series near the origin.
void bessel_pair(double x, double& a, double& c) {
  if (x < 0.05) {
    double x2 = x * x;
    double j0 = 1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0;
    double j1x = 1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0 - x2 * x2 * x2 / 45360.0;
    a = j0 - j1x;
    c = x2 / 15.0 - x2 * x2 / 210.0 + x2 * x2 * x2 / 7560.0;
    return;
  }
  double s = std::sin(x), co = std::cos(x);
  double j0 = s / x;
  double j1 = s / (x * x) - co / x;
  double j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * co / (x * x);
  a = j0 - j1 / x;
  c = j2;
}

int fft_size(int n) {
  for (int m = std::max(n, 8);; ++m) {
    int r = m;
    for (int p : {2, 3, 5}) while (r % p == 0) r /= p;
    if (r == 1 && m % 2 == 0) return m;
  }
}

}  // namespace

double ShearedDomain::reduced_strain() const {
  double period = Lbox(0) / Lbox(1);
  return g - period * std::nearbyint(g / period);
}

V3 ShearedDomain::to_sheared(const V3& x) const { return V3(x(0) - g * x(1), x(1), x(2)); }

V3 ShearedDomain::from_sheared(const V3& xp) const { return V3(xp(0) + g * xp(1), xp(1), xp(2)); }

V3 ShearedDomain::minimum_image(const V3& dx) const {
  double gr = reduced_strain();
  double dy = wrap_half(dx(1), Lbox(1));
  double shift_y = dy - dx(1);
  double dxx = dx(0) + gr * shift_y;
  dxx = wrap_half(dxx, Lbox(0));
  double dz = wrap_half(dx(2), Lbox(2));
  return V3(dxx, dy, dz);
}

double safety_factor(double g) { return 1.0 + 0.5 * (g * g + std::sqrt(g * g * (g * g + 4.0))); }

double hasimoto_screen(double k, double xi) {
  double q = k * k / (4.0 * xi * xi);
  return (1.0 + q) * std::exp(-q);
}

EwaldPlan::EwaldPlan(const V3& Lbox, double b, double mu, const EwaldOptions& opt)
    : L_(Lbox), b_(b), mu_(mu), opt_(opt) {
  require(b > 0.0 && mu > 0.0, ErrorCode::Parameter, "Ewald plan needs b > 0 and mu > 0");
  require((Lbox.array() > 0.0).all(), ErrorCode::Parameter, "box lengths must be positive");
  require(opt.tol > 0.0 && opt.tol < 1.0, ErrorCode::Parameter, "Ewald tolerance must lie in (0,1)");
  const double Lmin = Lbox.minCoeff();
  const double logt = std::log(1.0 / opt.tol);
  xi_ = opt.xi;
  if (xi_ <= 0.0) xi_ = 1.2 * std::sqrt(logt) / (Lmin / (4.0 * safety_factor(0.5)));
  for (int attempt = 0; attempt < 40; ++attempt) {
    build_table(Lmin / 2.0);
    // Smallest radius beyond which the near kernel stays below tol relative to the Stokeslet.
    const int n = static_cast<int>(tabA_.size());
    int last_bad = -1;
    for (int i = 1; i < n; ++i) {
      double r = i * table_h_;
      M3 K = near_kernel(V3(r, 0.0, 0.0));
      double rel = K.cwiseAbs().maxCoeff() * 8.0 * kPi * mu_ * r;
      if (rel > opt.tol) last_bad = i;
    }
    if (last_bad < n - 2) {
      rstar_ = std::max(last_bad + 1, 1) * table_h_;
      break;
    }
    require(opt.xi <= 0.0, ErrorCode::Parameter, "splitting parameter too small for this box and tolerance");
    xi_ *= 1.25;
  }
  require(rstar_ > 0.0, ErrorCode::Parameter, "could not select a near-field cutoff");
  double q = logt + std::log1p(logt);
  kmax_ = 2.0 * xi_ * std::sqrt(q);
}

void EwaldPlan::build_table(double rmax) {
  const int n = 4096;
  table_h_ = rmax / (n - 1);
  tabA_.assign(n, 0.0);
  tabB_.assign(n, 0.0);
  const double kcut = 2.0 * xi_ * std::sqrt(40.0);
  const int panels = std::max(64, static_cast<int>(std::ceil(kcut * rmax / kPi)) * 2);
  using GL = boost::math::quadrature::gauss<double, 20>;
  const auto& ab = GL::abscissa();
  const auto& wt = GL::weights();
  std::vector<double> knodes, kweights;
  const double hp = kcut / panels;
  for (int p = 0; p < panels; ++p) {
    double mid = (p + 0.5) * hp, half = 0.5 * hp;
    for (size_t j = 0; j < ab.size(); ++j) {
      double xs[2] = {mid - half * ab[j], mid + half * ab[j]};
      int cnt = (ab[j] == 0.0) ? 1 : 2;
      for (int t = 0; t < cnt; ++t) {
        knodes.push_back(xs[t]);
        kweights.push_back(half * wt[j]);
      }
    }
  }
  std::vector<double> g(knodes.size());
  for (size_t j = 0; j < knodes.size(); ++j) {
    double k = knodes[j];
    double kb = k * b_;
    double sinc = (kb < 1e-8) ? 1.0 : std::sin(kb) / kb;
    g[j] = kweights[j] * sinc * sinc * hasimoto_screen(k, xi_) / mu_ / (2.0 * kPi * kPi);
  }
  for (int i = 0; i < n; ++i) {
    double r = i * table_h_;
    double A = 0.0, B = 0.0;
    for (size_t j = 0; j < knodes.size(); ++j) {
      double a, c;
      bessel_pair(knodes[j] * r, a, c);
      A += g[j] * a;
      B += g[j] * c;
    }
    tabA_[i] = A;
    tabB_[i] = B;
  }
}

void EwaldPlan::far_free(double r, double& A, double& B) const {
  double t = r / table_h_;
  int n = static_cast<int>(tabA_.size());
  require(t <= n - 1 + 1e-9, ErrorCode::Numerical, "near-field table range exceeded");
  int i = std::clamp(static_cast<int>(std::floor(t)), 1, n - 3);
  double u = t - i;
  // Cubic Lagrange on i-1..i+2.
  double w0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
  double w1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
  double w2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
  double w3 = (u + 1.0) * u * (u - 1.0) / 6.0;
  A = w0 * tabA_[i - 1] + w1 * tabA_[i] + w2 * tabA_[i + 1] + w3 * tabA_[i + 2];
  B = w0 * tabB_[i - 1] + w1 * tabB_[i] + w2 * tabB_[i + 1] + w3 * tabB_[i + 2];
}

M3 EwaldPlan::near_kernel(const V3& R) const {
  double r = R.norm();
  double A, B;
  far_free(r, A, B);
  M3 K = rpy_kernel(R, V3::Zero(), b_, mu_) - A * M3::Identity();
  if (r > 0.0) K -= B * (R * R.transpose()) / (r * r);
  return K;
}

double EwaldPlan::far_multiplier(double k) const {
  double kb = k * b_;
  double sinc = (kb < 1e-8) ? 1.0 : std::sin(kb) / kb;
  return sinc * sinc * hasimoto_screen(k, xi_) / (mu_ * k * k);
}

std::vector<V3> EwaldPlan::near_field(const std::vector<V3>& x, const std::vector<V3>& F,
                                      const ShearedDomain& dom) const {
  require(x.size() == F.size(), ErrorCode::Dimension, "near_field: size mismatch");
  require(rstar_ < dom.Lbox.minCoeff() / 2.0, ErrorCode::Parameter, "near-field cutoff exceeds half the box");
  const size_t n = x.size();
  std::vector<V3> u(n, V3::Zero());
  const double r2 = rstar_ * rstar_;
  for (size_t i = 0; i < n; ++i) {
    u[i] += near_kernel(V3::Zero()) * F[i];
    for (size_t j = i + 1; j < n; ++j) {
      V3 R = dom.minimum_image(x[i] - x[j]);
      if (R.squaredNorm() > r2) continue;
      M3 K = near_kernel(R);
      u[i] += K * F[j];
      u[j] += K * F[i];
    }
  }
  return u;
}

std::vector<V3> EwaldPlan::far_dense(const std::vector<V3>& x, const std::vector<V3>& F,
                                     const ShearedDomain& dom) const {
  const double g = dom.reduced_strain();
  const V3& L = dom.Lbox;
  int mx = static_cast<int>(std::ceil(kmax_ * L(0) / (2 * kPi)));
  int my = static_cast<int>(std::ceil(kmax_ * (1.0 + std::abs(g) * L(1) / L(0)) * L(1) / (2 * kPi)));
  int mz = static_cast<int>(std::ceil(kmax_ * L(2) / (2 * kPi)));
  const size_t n = x.size();
  std::vector<V3> xp(n);
  for (size_t i = 0; i < n; ++i) xp[i] = V3(x[i](0) - g * x[i](1), x[i](1), x[i](2));
  std::vector<V3> u(n, V3::Zero());
  const double V = dom.volume();
  for (int a = -mx; a <= mx; ++a)
    for (int b = -my; b <= my; ++b)
      for (int c = -mz; c <= mz; ++c) {
        V3 kp(2 * kPi * a / L(0), 2 * kPi * b / L(1), 2 * kPi * c / L(2));
        V3 k(kp(0), kp(1) - g * kp(0), kp(2));
        double kn = k.norm();
        if (kn == 0.0 || kn > kmax_) continue;
        V3 kh = k / kn;
        M3 P = (M3::Identity() - kh * kh.transpose()) * far_multiplier(kn);
        Eigen::Vector3cd S = Eigen::Vector3cd::Zero();
        for (size_t j = 0; j < n; ++j) S += F[j].cast<std::complex<double>>() * std::polar(1.0, -kp.dot(xp[j]));
        Eigen::Vector3cd PS = P.cast<std::complex<double>>() * S;
        for (size_t i = 0; i < n; ++i) u[i] += (PS * std::polar(1.0, kp.dot(xp[i]))).real() / V;
      }
  return u;
}

std::vector<V3> EwaldPlan::far_gridded(const std::vector<V3>& x, const std::vector<V3>& F,
                                       const ShearedDomain& dom) const {
  const double g = dom.reduced_strain();
  const V3& L = dom.Lbox;
  int m[3];
  m[0] = static_cast<int>(std::ceil(kmax_ * L(0) / (2 * kPi)));
  m[1] = static_cast<int>(std::ceil(kmax_ * (1.0 + std::abs(g) * L(1) / L(0)) * L(1) / (2 * kPi)));
  m[2] = static_cast<int>(std::ceil(kmax_ * L(2) / (2 * kPi)));
  const int P = std::max(4, static_cast<int>(std::ceil(std::log(1.0 / opt_.nufft_tol) / 1.28)));
  int M[3];
  double h[3], alpha[3];
  for (int d = 0; d < 3; ++d) {
    M[d] = fft_size(std::max(3 * (2 * m[d] + 1), P + 2));
    h[d] = L(d) / M[d];
    alpha[d] = 5.13 / P / (h[d] * h[d]);
  }
  const size_t ntot = static_cast<size_t>(M[0]) * M[1] * M[2];
  const int Mc = M[2] / 2 + 1;
  const size_t nc = static_cast<size_t>(M[0]) * M[1] * Mc;
  double* grid[3];
  fftw_complex* spec[3];
  for (int d = 0; d < 3; ++d) {
    grid[d] = fftw_alloc_real(ntot);
    spec[d] = fftw_alloc_complex(nc);
    std::fill(grid[d], grid[d] + ntot, 0.0);
  }
  fftw_plan fwd = fftw_plan_dft_r2c_3d(M[0], M[1], M[2], grid[0], spec[0], FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_dft_c2r_3d(M[0], M[1], M[2], spec[0], grid[0], FFTW_ESTIMATE);

  const size_t n = x.size();
  std::vector<int> start(3 * n);
  std::vector<double> wts(3 * n * P);
  for (size_t i = 0; i < n; ++i) {
    V3 xp(wrap_unit(x[i](0) - g * x[i](1), L(0)), wrap_unit(x[i](1), L(1)), wrap_unit(x[i](2), L(2)));
    for (int d = 0; d < 3; ++d) {
      int i0 = static_cast<int>(std::ceil(xp(d) / h[d] - P / 2.0));
      start[3 * i + d] = i0;
      for (int t = 0; t < P; ++t) {
        double dx = (i0 + t) * h[d] - xp(d);
        wts[(3 * i + d) * P + t] = std::exp(-alpha[d] * dx * dx);
      }
    }
  }
  auto idx = [&](int a, int b, int c) {
    a = ((a % M[0]) + M[0]) % M[0];
    b = ((b % M[1]) + M[1]) % M[1];
    c = ((c % M[2]) + M[2]) % M[2];
    return (static_cast<size_t>(a) * M[1] + b) * M[2] + c;
  };
  for (size_t i = 0; i < n; ++i) {
    const double* wx = &wts[(3 * i) * P];
    const double* wy = &wts[(3 * i + 1) * P];
    const double* wz = &wts[(3 * i + 2) * P];
    for (int a = 0; a < P; ++a)
      for (int b = 0; b < P; ++b) {
        double wab = wx[a] * wy[b];
        for (int c = 0; c < P; ++c) {
          size_t id = idx(start[3 * i] + a, start[3 * i + 1] + b, start[3 * i + 2] + c);
          double w = wab * wz[c];
          for (int d = 0; d < 3; ++d) grid[d][id] += w * F[i](d);
        }
      }
  }
  for (int d = 0; d < 3; ++d) fftw_execute_dft_r2c(fwd, grid[d], spec[d]);

  const double hvol = h[0] * h[1] * h[2];
  const double V = dom.volume();
  for (int a = 0; a < M[0]; ++a) {
    int ma = (a <= M[0] / 2) ? a : a - M[0];
    for (int b = 0; b < M[1]; ++b) {
      int mb = (b <= M[1] / 2) ? b : b - M[1];
      for (int c = 0; c < Mc; ++c) {
        size_t id = (static_cast<size_t>(a) * M[1] + b) * Mc + c;
        V3 kp(2 * kPi * ma / L(0), 2 * kPi * mb / L(1), 2 * kPi * c / L(2));
        V3 k(kp(0), kp(1) - g * kp(0), kp(2));
        double kn = k.norm();
        bool nyq = (2 * std::abs(ma) == M[0]) || (2 * std::abs(mb) == M[1]) || (2 * c == M[2]);
        if (kn == 0.0 || kn > kmax_ || nyq) {
          for (int d = 0; d < 3; ++d) spec[d][id][0] = spec[d][id][1] = 0.0;
          continue;
        }
        double win = 1.0;
        for (int d = 0; d < 3; ++d) win *= std::sqrt(kPi / alpha[d]) * std::exp(-kp(d) * kp(d) / (4.0 * alpha[d]));
        double s = far_multiplier(kn) / (win * win) * hvol / V;
        V3 kh = k / kn;
        Eigen::Vector3cd H;
        for (int d = 0; d < 3; ++d) H(d) = std::complex<double>(spec[d][id][0], spec[d][id][1]);
        std::complex<double> kdotH = kh(0) * H(0) + kh(1) * H(1) + kh(2) * H(2);
        for (int d = 0; d < 3; ++d) {
          std::complex<double> v = s * (H(d) - kh(d) * kdotH);
          spec[d][id][0] = v.real();
          spec[d][id][1] = v.imag();
        }
      }
    }
  }
  for (int d = 0; d < 3; ++d) fftw_execute_dft_c2r(bwd, spec[d], grid[d]);

  std::vector<V3> u(n, V3::Zero());
  for (size_t i = 0; i < n; ++i) {
    const double* wx = &wts[(3 * i) * P];
    const double* wy = &wts[(3 * i + 1) * P];
    const double* wz = &wts[(3 * i + 2) * P];
    V3 acc = V3::Zero();
    for (int a = 0; a < P; ++a)
      for (int b = 0; b < P; ++b) {
        double wab = wx[a] * wy[b];
        for (int c = 0; c < P; ++c) {
          size_t id = idx(start[3 * i] + a, start[3 * i + 1] + b, start[3 * i + 2] + c);
          double w = wab * wz[c];
          for (int d = 0; d < 3; ++d) acc(d) += w * grid[d][id];
        }
      }
    u[i] = acc * hvol;
  }
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
  for (int d = 0; d < 3; ++d) {
    fftw_free(grid[d]);
    fftw_free(spec[d]);
  }
  return u;
}

std::vector<V3> EwaldPlan::far_field(const std::vector<V3>& x, const std::vector<V3>& F,
                                     const ShearedDomain& dom) const {
  require(x.size() == F.size(), ErrorCode::Dimension, "far_field: size mismatch");
  require((dom.Lbox - L_).norm() < 1e-12 * L_.norm(), ErrorCode::Parameter, "plan built for a different box");
  return opt_.dense ? far_dense(x, F, dom) : far_gridded(x, F, dom);
}

std::vector<V3> EwaldPlan::velocities(const std::vector<V3>& x, const std::vector<V3>& F,
                                      const ShearedDomain& dom) const {
  auto uf = far_field(x, F, dom);
  auto un = near_field(x, F, dom);
  for (size_t i = 0; i < uf.size(); ++i) uf[i] += un[i];
  return uf;
}

std::vector<V3> periodic_rpy_velocities(const EwaldPlan& plan, const ShearedDomain& dom, const std::vector<V3>& x,
                                        std::vector<V3> F, const std::vector<int>& fiber_of) {
  require(x.size() == F.size() && x.size() == fiber_of.size(), ErrorCode::Dimension,
          "periodic_rpy_velocities: size mismatch");
  const size_t n = x.size();
  if (n == 0) return {};
  V3 mean = V3::Zero();
  for (const auto& f : F) mean += f;
  mean /= static_cast<double>(n);
  for (auto& f : F) f -= mean;
  auto u = plan.velocities(x, F, dom);
  // Points of one fiber are contiguous.
  size_t i0 = 0;
  while (i0 < n) {
    size_t i1 = i0;
    while (i1 < n && fiber_of[i1] == fiber_of[i0]) ++i1;
    for (size_t p = i0; p < i1; ++p)
      for (size_t q = i0; q < i1; ++q) u[p] -= rpy_kernel(x[p], x[q], plan.b(), plan.mu()) * F[q];
    i0 = i1;
  }
  return u;
}

}  // namespace fibersim
