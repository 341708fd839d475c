#include "fibersim/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fibersim/error.hpp"

namespace fibersim {

namespace {
constexpr double kPi = std::numbers::pi;
}

StokesKernelParams kernel_params(const FiberParams& fp, double mu) {
  require(mu > 0.0, ErrorCode::Parameter, "viscosity must be positive");
  StokesKernelParams kp;
  kp.mu = mu;
  double a = fp.eps * fp.L;
  kp.b = std::exp(1.5) * a / 4.0;
  kp.doublet_coeff = std::exp(3.0) / 24.0 * a * a;
  return kp;
}

M3 local_drag_matrix(const V3& tau, double c, double mu) {
  M3 tt = tau * tau.transpose();
  M3 I = M3::Identity();
  return (c * (I + tt) + (I - 3.0 * tt)) / (8.0 * kPi * mu);
}

V3 local_drag_velocity(const V3& tau, double c, const V3& f, double mu) { return local_drag_matrix(tau, c, mu) * f; }

M3 stokeslet_doublet(const V3& R, double dcoef, double mu) {
  double r = R.norm();
  V3 Rh = R / r;
  M3 rr = Rh * Rh.transpose();
  M3 I = M3::Identity();
  return ((I + rr) / r + dcoef * (I - 3.0 * rr) / (r * r * r)) / (8.0 * kPi * mu);
}

M3 rpy_kernel(const V3& x, const V3& y, double b, double mu) {
  V3 R = x - y;
  double r = R.norm();
  if (r >= 2.0 * b) return stokeslet_doublet(R, 2.0 * b * b / 3.0, mu);
  M3 out = (4.0 / (3.0 * b) - 3.0 * r / (8.0 * b * b)) * M3::Identity();
  if (r > 0.0) out += (1.0 / (8.0 * b * b * r)) * (R * R.transpose());
  return out / (8.0 * kPi * mu);
}

Mat finite_part_matrix(const SpectralWorkspace& ws, const Nx3& X, const Nx3& tau, double mu) {
  const int N = ws.N;
  require(X.rows() == N && tau.rows() == N, ErrorCode::Dimension, "finite_part_matrix: size mismatch");
  const double pref = (ws.L / 2.0) / (8.0 * kPi * mu);
  Nx3 Xss = ws.D * tau;
  Mat M = Mat::Zero(3 * N, 3 * N);
  const M3 I = M3::Identity();
  for (int p = 0; p < N; ++p) {
    V3 tp = tau.row(p).transpose();
    M3 Ip = I + tp * tp.transpose();
    M3 diag = M3::Zero();
    for (int q = 0; q < N; ++q) {
      if (q == p) continue;
      double bq = ws.bfp(q, p);
      double ds = ws.grid.s(q) - ws.grid.s(p);
      V3 R = X.row(p).transpose() - X.row(q).transpose();
      double r = R.norm();
      require(r > 0.0, ErrorCode::Numerical, "finite part: coincident nodes");
      V3 Rh = R / r;
      M.block<3, 3>(3 * p, 3 * q) += pref * bq * (I + Rh * Rh.transpose()) * (std::abs(ds) / (r * ds));
      diag -= pref * bq * Ip / ds;
    }
    double bp = ws.bfp(p, p);
    V3 xs = Xss.row(p).transpose();
    diag += pref * bp * 0.5 * (tp * xs.transpose() + xs * tp.transpose());
    M.block<3, 3>(3 * p, 3 * p) += diag;
    for (int q = 0; q < N; ++q) M.block<3, 3>(3 * p, 3 * q) += pref * bp * ws.D(p, q) * Ip;
  }
  require(M.allFinite(), ErrorCode::Numerical, "finite part: non-finite entries");
  return M;
}

Nx3 finite_part_velocity(const SpectralWorkspace& ws, const Nx3& X, const Nx3& tau, const Nx3& f, double mu) {
  Mat M = finite_part_matrix(ws, X, tau, mu);
  Vec fv = Eigen::Map<const Vec>(f.data(), f.size());
  Vec u = M * fv;
  return Eigen::Map<const Nx3>(u.data(), ws.N, 3);
}

Mat local_drag_operator(const Nx3& tau, const Vec& c, double mu) {
  const int N = static_cast<int>(tau.rows());
  Mat M = Mat::Zero(3 * N, 3 * N);
  for (int p = 0; p < N; ++p) M.block<3, 3>(3 * p, 3 * p) = local_drag_matrix(tau.row(p).transpose(), c(p), mu);
  return M;
}

V3 interfiber_velocity_direct(const V3& x, const Nx3& X, const Nx3& f, const Vec& w,
                              const StokesKernelParams& kp) {
  V3 u = V3::Zero();
  for (int q = 0; q < X.rows(); ++q) {
    V3 R = x - X.row(q).transpose();
    u += stokeslet_doublet(R, kp.doublet_coeff, kp.mu) * f.row(q).transpose() * w(q);
  }
  return u;
}

V3 centerline_velocity(const SpectralWorkspace& ws, const FiberParams& fp, const Nx3& X, const Nx3& tau,
                       const Nx3& f, const Nx3& fp_velocity, double s_star, double mu) {
  (void)X;
  double x = 2.0 * s_star / ws.L - 1.0;
  V3 t = eval_interp(ws.toCoef * tau, x).normalized();
  V3 fs = eval_interp(ws.toCoef * f, x);
  V3 ufp = eval_interp(ws.toCoef * fp_velocity, x);
  return local_drag_velocity(t, regularized_drag_coeff(s_star, fp), fs, mu) + ufp;
}

double centerline_weight(double d_hat, double b) {
  if (d_hat <= 2.0 * b) return 1.0;
  if (d_hat >= 4.0 * b) return 0.0;
  return (4.0 * b - d_hat) / (2.0 * b);
}

V3 blended_velocity(const V3& centerline, const V3& interaction, double d_hat, double b) {
  double w = centerline_weight(d_hat, b);
  return w * centerline + (1.0 - w) * interaction;
}

namespace {

template <class Fn>
LineIntegralResult integrate_pieces(const Fn& integrand, std::vector<double> cuts, double rtol) {
  using boost::math::quadrature::gauss_kronrod;
  std::sort(cuts.begin(), cuts.end());
  LineIntegralResult res{V3::Zero(), 0.0};
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    double a = cuts[i], b = cuts[i + 1];
    if (b - a <= 0.0) continue;
    for (int d = 0; d < 3; ++d) {
      double err = 0.0;
      double v = gauss_kronrod<double, 61>::integrate([&](double s) { return integrand(s)(d); }, a, b, 12, rtol, &err);
      res.value(d) += v;
      res.error_estimate = std::max(res.error_estimate, err);
    }
  }
  require(std::isfinite(res.value.norm()), ErrorCode::Numerical, "line integral failed");
  return res;
}

std::vector<double> split_points(double s, double L, double b) {
  std::vector<double> cuts{0.0, L};
  for (double c : {s - 2.0 * b, s, s + 2.0 * b})
    if (c > 0.0 && c < L) cuts.push_back(c);
  // Graded cuts resolve the 1/r^3 decay just outside the overlap region.
  for (double fac : {4.0, 8.0, 16.0, 64.0, 256.0}) {
    for (double c : {s - fac * b, s + fac * b})
      if (c > 0.0 && c < L) cuts.push_back(c);
  }
  return cuts;
}

}  // namespace

LineIntegralResult rpy_line_integral_straight(double s, double L, const V3& tau, const V3& f, double b, double mu,
                                              double rtol) {
  V3 xs = s * tau;
  auto integrand = [&](double sp) -> V3 { return rpy_kernel(xs, sp * tau, b, mu) * f; };
  return integrate_pieces(integrand, split_points(s, L, b), rtol);
}

LineIntegralResult rpy_line_integral(double s, const SpectralWorkspace& ws, const Nx3& X, const Nx3& f, double b,
                                     double mu, double rtol) {
  Nx3 cX = ws.toCoef * X;
  Nx3 cf = ws.toCoef * f;
  const double L = ws.L;
  V3 xs = eval_interp(cX, 2.0 * s / L - 1.0);
  auto integrand = [&](double sp) -> V3 {
    double x = 2.0 * sp / L - 1.0;
    return rpy_kernel(xs, eval_interp(cX, x), b, mu) * eval_interp(cf, x);
  };
  return integrate_pieces(integrand, split_points(s, L, b), rtol);
}

}  // namespace fibersim
