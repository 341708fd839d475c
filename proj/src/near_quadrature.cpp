#include "fibersim/near_quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "fibersim/error.hpp"
#include "fibersim/kinematics.hpp"

namespace fibersim {

namespace {

constexpr double kPi = std::numbers::pi;

struct PanelBasis {
  Vec t;   // type-1 nodes on [-1,1]
  Vec w;   // quadrature weights on [-1,1]
  Eigen::PartialPivLU<Mat> VT;  // transpose of the monomial Vandermonde
};

const PanelBasis& panel_basis(int n) {
  static std::mutex m;
  static std::map<int, std::unique_ptr<PanelBasis>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;
  auto pb = std::make_unique<PanelBasis>();
  ChebGrid g = make_grid(n, GridKind::Type1, 2.0);
  pb->t = g.x;
  pb->w = g.w;
  Mat V(n, n);
  for (int j = 0; j < n; ++j) {
    double v = 1.0;
    for (int k = 0; k < n; ++k) {
      V(j, k) = v;
      v *= g.x(j);
    }
  }
  pb->VT.compute(V.transpose());
  auto& ref = *pb;
  cache.emplace(n, std::move(pb));
  return ref;
}

// Evaluates X(eta) and dX/deta for complex eta.
void eval_complex(const Nx3& cX, const Nx3& cXd, cplx eta, std::array<cplx, 3>& X, std::array<cplx, 3>& Xd) {
  const int n = static_cast<int>(cX.rows());
  for (int d = 0; d < 3; ++d) {
    Vec c = cX.col(d);
    Vec cd = cXd.col(d);
    X[d] = clenshaw<cplx>(c.data(), n, eta);
    Xd[d] = clenshaw<cplx>(cd.data(), n, eta);
  }
}

Mat rpy_direct_matrix(const V3& x, const SourceFiber& src, const StokesKernelParams& kp) {
  const int N = static_cast<int>(src.X.rows());
  Mat C(3, 3 * N);
  const Vec& w = src.ws->w();
  for (int q = 0; q < N; ++q) C.block<3, 3>(0, 3 * q) = rpy_kernel(x, src.X.row(q).transpose(), kp.b, kp.mu) * w(q);
  return C;
}

Mat sd_direct_matrix(const V3& x, const SourceFiber& src, const StokesKernelParams& kp) {
  const int N = static_cast<int>(src.X.rows());
  Mat C(3, 3 * N);
  const Vec& w = src.ws->w();
  for (int q = 0; q < N; ++q)
    C.block<3, 3>(0, 3 * q) = stokeslet_doublet(x - src.X.row(q).transpose(), kp.doublet_coeff, kp.mu) * w(q);
  return C;
}

// Expands a map on sampled points through the interpolation matrix P (samples x N).
Mat through_interp(const Mat& Cs, const Mat& P) {
  const int n = static_cast<int>(P.rows()), N = static_cast<int>(P.cols());
  Mat C = Mat::Zero(3, 3 * N);
  for (int j = 0; j < n; ++j)
    for (int q = 0; q < N; ++q) C.block<3, 3>(0, 3 * q) += P(j, q) * Cs.block<3, 3>(0, 3 * j);
  return C;
}

// Quadrature over the parameter panel [ea, eb] of the source fiber.
Mat panel_matrix(const V3& x, const SourceFiber& src, const StokesKernelParams& kp, double ea, double eb,
                 cplx root, bool have_root, const NearOptions& opt) {
  const PanelBasis& pb = panel_basis(opt.n_up);
  const double c = 0.5 * (ea + eb), h = 0.5 * (eb - ea);
  Vec eta = (c + h * pb.t.array()).matrix();
  Mat P = cheb_vandermonde(eta, src.ws->N) * src.ws->toCoef;
  Nx3 pts = P * src.X;
  const double jac = h * src.ws->L / 2.0;
  Vec w1, w3, w5;
  bool special = false;
  if (have_root) {
    cplx tr = (root - c) / h;
    if (bernstein_radius(tr) < opt.rho_crit) {
      special_weights(tr, w1, w3, w5, opt.n_up);
      w1 *= jac;
      w3 *= jac;
      w5 *= jac;
      special = true;
    }
  }
  if (!special) {
    w1 = pb.w * jac;
    w3 = w1;
    w5 = w1;
  }
  return through_interp(split_kernel_matrix(x, pts, w1, w3, w5, kp), P);
}

// Accurate S_D map at x (already shifted to the nearest image) with the decision record.
Mat dispatch(const V3& x, const SourceFiber& src, const StokesKernelParams& kp, const NearOptions& opt,
             double d_tilde, int argmin, QuadratureDecision& dec) {
  const double L = src.ws->L;
  dec.d_tilde = d_tilde;
  dec.route = decide_route(d_tilde, L, opt);
  dec.correction_needed = dec.route != Route::DirectN;
  if (dec.route == Route::DirectN || dec.route == Route::Direct32) {
    dec.s_star = L * argmin / (opt.n_uniform - 1.0);
    dec.d_hat = d_tilde;
    if (dec.route == Route::DirectN) return sd_direct_matrix(x, src, kp);
    return panel_matrix(x, src, kp, -1.0, 1.0, cplx(0.0), false, opt);
  }

  double eta0 = -1.0 + 2.0 * argmin / (opt.n_uniform - 1.0);
  cplx root;
  dec.root_found = complex_root(x, src.cX, src.cXd, eta0, root);
  if (!dec.root_found) {
    // Discrete minimization on a fine sampling.
    const int nf = 128;
    double best = 1e300, bs = 0.0;
    for (int i = 0; i < nf; ++i) {
      double e = -1.0 + 2.0 * i / (nf - 1.0);
      double d = (eval_interp(src.cX, e) - x).norm();
      if (d < best) {
        best = d;
        bs = e;
      }
    }
    dec.eta_star = cplx(bs, 0.0);
    dec.s_star = (bs + 1.0) * L / 2.0;
    dec.d_hat = best;
    dec.route = Route::Direct32;
    return panel_matrix(x, src, kp, -1.0, 1.0, cplx(0.0), false, opt);
  }
  dec.eta_star = root;
  double er = std::clamp(root.real(), -1.0, 1.0);
  dec.s_star = (er + 1.0) * L / 2.0;
  dec.d_hat = (eval_interp(src.cX, er) - x).norm();

  if (bernstein_radius(root) >= opt.rho_crit) {
    dec.route = Route::Direct32;
    return panel_matrix(x, src, kp, -1.0, 1.0, root, false, opt);
  }
  if (dec.d_hat > opt.two_panel * src.params.eps * L) {
    dec.route = Route::Special1;
    return panel_matrix(x, src, kp, -1.0, 1.0, root, true, opt);
  }
  dec.route = Route::Special2;
  double split = std::clamp(root.real(), -0.5, 0.5);
  return panel_matrix(x, src, kp, -1.0, split, root, true, opt) + panel_matrix(x, src, kp, split, 1.0, root, true, opt);
}

Mat blend_in(const SourceFiber& src, const StokesKernelParams& kp, const NearOptions& opt, const Mat& C,
             QuadratureDecision& dec) {
  if (!opt.blend || dec.route == Route::DirectN) return C;
  double cw = centerline_weight(dec.d_hat, kp.b);
  dec.centerline_weight = cw;
  if (cw <= 0.0) return C;
  const auto& ws = *src.ws;
  const int N = ws.N;
  double xs = 2.0 * dec.s_star / ws.L - 1.0;
  Vec xv(1);
  xv(0) = xs;
  Mat v = cheb_vandermonde(xv, N) * ws.toCoef;  // 1 x N interpolation row
  V3 t = (v * src.tau).transpose().normalized();
  M3 Mld = local_drag_matrix(t, regularized_drag_coeff(dec.s_star, src.params), kp.mu);
  Mat CL = Mat::Zero(3, 3 * N);
  for (int q = 0; q < N; ++q) CL.block<3, 3>(0, 3 * q) = v(0, q) * Mld;
  if (src.fp_matrix.size() > 0)
    for (int q = 0; q < N; ++q) CL += v(0, q) * src.fp_matrix.middleRows(3 * q, 3);
  return cw * CL + (1.0 - cw) * C;
}

}  // namespace

const char* route_name(Route r) {
  switch (r) {
    case Route::DirectN: return "direct-N";
    case Route::Direct32: return "direct-32";
    case Route::Special1: return "special-1";
    case Route::Special2: return "special-2";
  }
  return "?";
}

SourceFiber make_source(std::shared_ptr<const SpectralWorkspace> ws, const FiberParams& fp, const Nx3& X,
                        const Nx3& tau, Mat fp_matrix) {
  const int N = ws->N;
  require(X.rows() == N && tau.rows() == N, ErrorCode::Dimension, "make_source: size mismatch");
  require(fp_matrix.size() == 0 || (fp_matrix.rows() == 3 * N && fp_matrix.cols() == 3 * N), ErrorCode::Dimension,
          "make_source: finite-part matrix has wrong size");
  SourceFiber s;
  s.ws = ws;
  s.params = fp;
  s.X = X;
  s.tau = tau;
  s.cX = ws->toCoef * X;
  s.cXd = cheb_coef_derivative(N) * s.cX;
  s.Xuniform = eval_series(s.cX, Vec::LinSpaced(16, -1.0, 1.0));
  s.fp_matrix = std::move(fp_matrix);
  return s;
}

double coarse_distance(const V3& x, const SourceFiber& src, int* argmin, int n_uniform) {
  const Nx3* pts = &src.Xuniform;
  Nx3 tmp;
  if (n_uniform != src.Xuniform.rows()) {
    tmp = eval_series(src.cX, Vec::LinSpaced(n_uniform, -1.0, 1.0));
    pts = &tmp;
  }
  double best = 1e300;
  int bi = 0;
  for (int i = 0; i < pts->rows(); ++i) {
    double d = (pts->row(i).transpose() - x).norm();
    if (d < best) {
      best = d;
      bi = i;
    }
  }
  if (argmin) *argmin = bi;
  return best;
}

Route decide_route(double d_tilde, double L, const NearOptions& opt) {
  double r = d_tilde / L;
  if (r >= opt.gate_direct) return Route::DirectN;
  if (r >= opt.gate_upsampled) return Route::Direct32;
  return Route::Special1;  // refined after root finding
}

bool complex_root(const V3& x, const Nx3& cX, const Nx3& cXd, double eta0, cplx& root) {
  double scale = std::max(1.0, cX.cwiseAbs().maxCoeff());
  const double ftol = 1e-24 * scale * scale;
  auto attempt = [&](cplx eta) -> bool {
    std::array<cplx, 3> X, Xd;
    for (int it = 0; it < 50; ++it) {
      eval_complex(cX, cXd, eta, X, Xd);
      cplx F = 0.0, Fp = 0.0;
      for (int d = 0; d < 3; ++d) {
        cplx r = X[d] - x(d);
        F += r * r;
        Fp += 2.0 * r * Xd[d];
      }
      if (std::abs(F) <= ftol) break;
      if (std::abs(Fp) == 0.0) return false;
      cplx step = F / Fp;
      eta -= step;
      if (!std::isfinite(eta.real()) || !std::isfinite(eta.imag()) || std::abs(eta) > 10.0) return false;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(eta))) break;
    }
    eval_complex(cX, cXd, eta, X, Xd);
    cplx F = 0.0;
    for (int d = 0; d < 3; ++d) F += (X[d] - x(d)) * (X[d] - x(d));
    if (std::abs(F) > 1e-12 * scale * scale) return false;
    root = eta.imag() < 0.0 ? std::conj(eta) : eta;
    return true;
  };
  if (attempt(cplx(eta0, 0.02))) return true;
  for (double dr : {0.1, -0.1})
    for (double di : {0.05, -0.05})
      if (attempt(cplx(eta0 + dr, di))) return true;
  return false;
}

double bernstein_radius(cplx eta) {
  cplx s = std::sqrt(eta * eta - 1.0);
  double r1 = std::abs(eta + s), r2 = std::abs(eta - s);
  return std::max(r1, r2);
}

void singular_moments(cplx root, int n, Vec& I1, Vec& I3, Vec& I5) {
  const double a = root.real();
  const double b = std::max(std::abs(root.imag()), 1e-300);
  const double b2 = b * b;
  const double e2 = a * a + b2;
  auto Q = [&](double t) { return (t - a) * (t - a) + b2; };
  const double qp = Q(1.0), qm = Q(-1.0);
  const double sp = std::sqrt(qp), sm = std::sqrt(qm);
  I1.resize(n);
  I3.resize(n);
  I5.resize(n);

  I1(0) = std::asinh((1.0 - a) / b) + std::asinh((1.0 + a) / b);
  if (n > 1) I1(1) = (sp - sm) + a * I1(0);
  // k I_k = [t^{k-1} sqrt(Q)] + (2k-1) a I_{k-1} - (k-1) |eta|^2 I_{k-2}
  for (int k = 2; k < n; ++k) {
    double bnd = sp - ((k - 1) % 2 == 0 ? 1.0 : -1.0) * sm;
    I1(k) = (bnd + (2.0 * k - 1.0) * a * I1(k - 1) - (k - 1.0) * e2 * I1(k - 2)) / k;
  }

  auto F3 = [&](double t) { return (t - a) / (b2 * std::sqrt(Q(t))); };
  I3(0) = F3(1.0) - F3(-1.0);
  if (n > 1) I3(1) = (-1.0 / sp + 1.0 / sm) + a * I3(0);
  for (int k = 2; k < n; ++k) I3(k) = I1(k - 2) + 2.0 * a * I3(k - 1) - e2 * I3(k - 2);

  auto F5 = [&](double t) {
    double u = t - a, q = Q(t);
    return u * (2.0 * u * u + 3.0 * b2) / (3.0 * b2 * b2 * q * std::sqrt(q));
  };
  I5(0) = F5(1.0) - F5(-1.0);
  if (n > 1) I5(1) = -1.0 / (3.0 * qp * sp) + 1.0 / (3.0 * qm * sm) + a * I5(0);
  for (int k = 2; k < n; ++k) I5(k) = I3(k - 2) + 2.0 * a * I5(k - 1) - e2 * I5(k - 2);
}

void special_weights(cplx root, Vec& w1, Vec& w3, Vec& w5, int n_up) {
  const PanelBasis& pb = panel_basis(n_up);
  Vec I1, I3, I5;
  singular_moments(root, n_up, I1, I3, I5);
  w1 = pb.VT.solve(I1);
  w3 = pb.VT.solve(I3);
  w5 = pb.VT.solve(I5);
  for (int j = 0; j < n_up; ++j) {
    double dist = std::abs(pb.t(j) - root);
    w1(j) *= dist;
    w3(j) *= dist * dist * dist;
    w5(j) *= dist * dist * dist * dist * dist;
  }
}

Mat split_kernel_matrix(const V3& x, const Nx3& pts, const Vec& w1, const Vec& w3, const Vec& w5,
                        const StokesKernelParams& kp) {
  const double beta = kp.doublet_coeff;
  const double pref = 1.0 / (8.0 * kPi * kp.mu);
  const int n = static_cast<int>(pts.rows());
  Mat C(3, 3 * n);
  const M3 I = M3::Identity();
  for (int j = 0; j < n; ++j) {
    V3 R = x - pts.row(j).transpose();
    double r2 = R.squaredNorm();
    double r = std::sqrt(r2);
    double r3 = r2 * r;
    M3 RR = R * R.transpose();
    C.block<3, 3>(0, 3 * j) =
        pref * (w1(j) / r * I + w3(j) / r3 * (RR + beta * I) - w5(j) * 3.0 * beta / (r3 * r2) * RR);
  }
  return C;
}

namespace {
// Nearest image of x relative to the uniform samples of the source; returns d~ and the sample index.
double nearest_target(const V3& x, const SourceFiber& src, const NearOptions& opt,
                      const std::function<V3(const V3&)>& image, V3& xs, int& argmin) {
  Nx3 pts = opt.n_uniform == src.Xuniform.rows() ? src.Xuniform
                                                  : eval_series(src.cX, Vec::LinSpaced(opt.n_uniform, -1.0, 1.0));
  double best = 1e300;
  argmin = 0;
  xs = x;
  for (int i = 0; i < pts.rows(); ++i) {
    V3 p = pts.row(i).transpose();
    V3 dx = image ? image(x - p) : V3(x - p);
    double d = dx.norm();
    if (d < best) {
      best = d;
      argmin = i;
      xs = p + dx;
    }
  }
  return best;
}
}  // namespace

Mat interaction_matrix(const V3& x, const SourceFiber& src, const StokesKernelParams& kp, const NearOptions& opt,
                       QuadratureDecision* decision) {
  QuadratureDecision dec;
  V3 xs;
  int argmin = 0;
  double dt = nearest_target(x, src, opt, nullptr, xs, argmin);
  Mat C = blend_in(src, kp, opt, dispatch(x, src, kp, opt, dt, argmin, dec), dec);
  if (decision) *decision = dec;
  return C;
}

V3 interaction_velocity(const V3& x, const SourceFiber& src, const Nx3& f, const StokesKernelParams& kp,
                        const NearOptions& opt, QuadratureDecision* decision) {
  return interaction_matrix(x, src, kp, opt, decision) * flatten(f);
}

Mat correction_matrix(const V3& x, const SourceFiber& src, const StokesKernelParams& kp, const NearOptions& opt,
                      const std::function<V3(const V3&)>& image, QuadratureDecision* decision) {
  QuadratureDecision dec;
  V3 xs;
  int argmin = 0;
  double best = nearest_target(x, src, opt, image, xs, argmin);
  Mat C;
  if (decide_route(best, src.ws->L, opt) != Route::DirectN) {
    C = blend_in(src, kp, opt, dispatch(xs, src, kp, opt, best, argmin, dec), dec) - rpy_direct_matrix(xs, src, kp);
  } else {
    dec.d_tilde = best;
    dec.route = Route::DirectN;
  }
  if (decision) *decision = dec;
  return C;
}

V3 corrected_interaction_velocity(const V3& x, const SourceFiber& src, const Nx3& f, const StokesKernelParams& kp,
                                  const NearOptions& opt, const std::function<V3(const V3&)>& image,
                                  QuadratureDecision* decision) {
  Mat C = correction_matrix(x, src, kp, opt, image, decision);
  if (C.size() == 0) return V3::Zero();
  return C * flatten(f);
}

V3 refined_interaction_velocity(const V3& x, const SourceFiber& src, const Nx3& f, const StokesKernelParams& kp,
                                int n) {
  // Grid and basis are reused across calls with the same sizes.
  static std::mutex m;
  static std::map<std::pair<int, int>, std::pair<Vec, Mat>> cache;
  const int N = src.ws->N;
  const std::pair<Vec, Mat>* entry;
  {
    std::lock_guard<std::mutex> lock(m);
    auto key = std::make_pair(n, N);
    auto it = cache.find(key);
    if (it == cache.end()) {
      ChebGrid g = make_grid(n, GridKind::Type1, 2.0);
      it = cache.emplace(key, std::make_pair(g.w, cheb_vandermonde(g.x, N))).first;
    }
    entry = &it->second;
  }
  Vec w = entry->first * (src.ws->L / 2.0);
  Nx3 pts = entry->second * src.cX;
  Nx3 fv = entry->second * (src.ws->toCoef * f);
  return interfiber_velocity_direct(x, pts, fv, w, kp);
}

}  // namespace fibersim
