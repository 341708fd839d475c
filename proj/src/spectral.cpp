#include "fibersim/spectral.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "fibersim/error.hpp"

namespace fibersim {

namespace {

constexpr double kPi = std::numbers::pi;

Mat inverse_lu(const Mat& M) { return M.fullPivLu().inverse(); }

// Evaluate (derivative order `order` of) a series with `ncoef` coefficients at x; returns
// the row mapping coefficients to values.
Mat derivative_rows(const Vec& x, int ncoef, int order) {
  Mat V = cheb_vandermonde(x, ncoef);
  Mat Dc = cheb_coef_derivative(ncoef);
  Mat P = Mat::Identity(ncoef, ncoef);
  for (int i = 0; i < order; ++i) P = Dc * P;
  return V * P;
}

Mat pinv(const Mat& M, double rtol) {
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  Vec inv = Vec::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > rtol * sv(0)) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace

ChebGrid make_grid(int N, GridKind kind, double L) {
  require(N >= 1, ErrorCode::Parameter, "grid size must be positive");
  require(L > 0.0 && std::isfinite(L), ErrorCode::Parameter, "length must be positive");
  require(kind == GridKind::Type1 || N >= 2, ErrorCode::Parameter, "type-2 grid needs N >= 2");
  ChebGrid g;
  g.N = N;
  g.kind = kind;
  g.L = L;
  g.x.resize(N);
  g.w.resize(N);
  if (kind == GridKind::Type1) {
    for (int p = 0; p < N; ++p) {
      double th = (2.0 * p + 1.0) * kPi / (2.0 * N);
      g.x(p) = -std::cos(th);
      double acc = 1.0;
      for (int k = 1; k <= N / 2; ++k) acc -= 2.0 * std::cos(2.0 * k * th) / (4.0 * k * k - 1.0);
      g.w(p) = 2.0 / N * acc;
    }
    if (N % 2 == 1) g.x((N - 1) / 2) = 0.0;
  } else {
    const int n = N - 1;
    for (int p = 0; p < N; ++p) {
      double th = p * kPi / n;
      g.x(p) = -std::cos(th);
      double acc = 1.0;
      for (int k = 1; k <= n / 2; ++k) {
        double bk = (2 * k == n) ? 1.0 : 2.0;
        acc -= bk * std::cos(2.0 * k * th) / (4.0 * k * k - 1.0);
      }
      double cp = (p == 0 || p == n) ? 1.0 : 2.0;
      g.w(p) = cp / n * acc;
    }
    if (n % 2 == 0) g.x(n / 2) = 0.0;
  }
  g.s = (g.x.array() + 1.0) * (L / 2.0);
  g.w *= L / 2.0;
  return g;
}

Mat cheb_vandermonde(const Vec& x, int ncoef) {
  Mat V(x.size(), ncoef);
  for (int p = 0; p < x.size(); ++p) {
    double t0 = 1.0, t1 = x(p);
    for (int k = 0; k < ncoef; ++k) {
      if (k == 0) {
        V(p, k) = 1.0;
      } else if (k == 1) {
        V(p, k) = x(p);
      } else {
        double t2 = 2.0 * x(p) * t1 - t0;
        t0 = t1;
        t1 = t2;
        V(p, k) = t2;
      }
    }
  }
  return V;
}

Mat cheb_coef_derivative(int n) {
  Mat Dc = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    Vec c = Vec::Zero(n);
    c(j) = 1.0;
    Vec d = Vec::Zero(n + 2);
    for (int k = n - 2; k >= 0; --k) d(k) = d(k + 2) + 2.0 * (k + 1) * c(k + 1);
    d(0) *= 0.5;
    Dc.col(j) = d.head(n);
  }
  return Dc;
}

Mat cheb_coef_antiderivative(int n) {
  Mat I = Mat::Zero(n + 1, n);
  for (int j = 0; j < n; ++j) {
    Vec c = Vec::Zero(n + 2);
    c(j) = 1.0;
    for (int k = 1; k <= n; ++k) {
      double prev = (k == 1) ? 2.0 * c(0) : c(k - 1);
      I(k, j) = (prev - c(k + 1)) / (2.0 * k);
    }
  }
  return I;
}

double monomial_q(int k, double eta) {
  double sgn = ((k + 1) % 2 == 0) ? 1.0 : -1.0;
  return (1.0 + sgn - 2.0 * std::pow(eta, k + 1)) / (k + 1);
}

std::shared_ptr<const SpectralWorkspace> build_workspace(int N, double L) {
  require(N >= 2, ErrorCode::Parameter, "workspace needs N >= 2");
  auto ws = std::make_shared<SpectralWorkspace>();
  ws->N = N;
  ws->L = L;
  ws->grid = make_grid(N, GridKind::Type1, L);
  ws->grid2N = make_grid(2 * N, GridKind::Type1, L);
  const int Ne = N + 4;
  ws->gridExt = make_grid(Ne, GridKind::Type2, L);
  const double sc = 2.0 / L;

  Mat V = cheb_vandermonde(ws->grid.x, N);
  ws->toCoef = inverse_lu(V);
  ws->D = V * cheb_coef_derivative(N) * ws->toCoef * sc;
  ws->Ddag = pinv(ws->D, 1e-10);

  Mat V2 = cheb_vandermonde(ws->grid2N.x, 2 * N);
  Mat V2inv = inverse_lu(V2);
  ws->D2N = V2 * cheb_coef_derivative(2 * N) * V2inv * sc;
  ws->D2Ndag = pinv(ws->D2N, 1e-10);

  ws->U = cheb_vandermonde(ws->grid2N.x, N) * ws->toCoef;
  Mat UtW = ws->U.transpose() * ws->grid2N.w.asDiagonal();
  ws->R = (UtW * ws->U).ldlt().solve(UtW);

  Mat Ve = cheb_vandermonde(ws->gridExt.x, Ne);
  Mat Veinv = inverse_lu(Ve);
  ws->A = cheb_vandermonde(ws->grid.x, Ne) * Veinv;
  Vec ends(2);
  ends << -1.0, 1.0;
  // Boundary rows in coefficient space, then mapped to type-2 values.
  Mat d2c = derivative_rows(ends, Ne, 2) * (sc * sc);
  Mat d3c = derivative_rows(ends, Ne, 3) * (sc * sc * sc);
  Mat Bc(4, Ne);
  Bc << d2c.row(0), d2c.row(1), d3c.row(0), d3c.row(1);
  ws->B = Bc * Veinv;
  Mat sys(Ne, Ne);
  sys.topRows(N) = cheb_vandermonde(ws->grid.x, Ne);
  sys.bottomRows(4) = Bc;
  Eigen::FullPivLU<Mat> sys_lu(sys);
  require(sys_lu.isInvertible(), ErrorCode::Numerical, "extension system is singular");
  Mat rhs = Mat::Zero(Ne, N);
  rhs.topRows(N) = Mat::Identity(N, N);
  ws->E = Ve * sys_lu.solve(rhs);
  Mat Dc4 = cheb_coef_derivative(Ne);
  Dc4 = Mat(Dc4 * Dc4);
  Dc4 = Mat(Dc4 * Dc4);
  ws->D4ext = Ve * Dc4 * Veinv * std::pow(sc, 4);
  ws->Fop = -ws->A * ws->D4ext * ws->E;

  ws->Sint = cheb_vandermonde(ws->grid.x, N + 1) * cheb_coef_antiderivative(N) * ws->toCoef * (L / 2.0);

  ws->Vmono.resize(N, N);
  for (int p = 0; p < N; ++p)
    for (int q = 0; q < N; ++q) ws->Vmono(p, q) = std::pow(ws->grid.x(p), q);
  ws->Vlu = Eigen::PartialPivLU<Mat>(ws->Vmono);
  // Same weights as the monomial system, assembled from Chebyshev moments for conditioning.
  Mat Aint = cheb_coef_antiderivative(N);
  Mat Q(N, N);
  for (int k = 0; k < N; ++k) {
    Vec a = Aint.col(k);
    const double ends = clenshaw(a.data(), N + 1, 1.0) + clenshaw(a.data(), N + 1, -1.0);
    for (int p = 0; p < N; ++p) Q(k, p) = ends - 2.0 * clenshaw(a.data(), N + 1, ws->grid.x(p));
  }
  ws->bfp = ws->toCoef.transpose() * Q;
  return ws;
}

std::shared_ptr<const SpectralWorkspace> workspace(int N, double L) {
  static std::mutex mtx;
  static std::map<std::pair<int, double>, std::shared_ptr<const SpectralWorkspace>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto key = std::make_pair(N, L);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto ws = build_workspace(N, L);
  cache.emplace(key, ws);
  return ws;
}

namespace {
void check_rows(const Nx3& v, int n, const char* what) {
  require(v.rows() == n, ErrorCode::Dimension, std::string(what) + ": row count mismatch");
}
}  // namespace

Nx3 differentiate(const SpectralWorkspace& ws, const Nx3& values) {
  check_rows(values, ws.N, "differentiate");
  return ws.D * values;
}

Nx3 extend_with_bcs(const SpectralWorkspace& ws, const Nx3& X) {
  check_rows(X, ws.N, "extend_with_bcs");
  return ws.E * X;
}

Nx3 upsample(const SpectralWorkspace& ws, const Nx3& values) {
  check_rows(values, ws.N, "upsample");
  return ws.U * values;
}

Nx3 downsample(const SpectralWorkspace& ws, const Nx3& values2N) {
  check_rows(values2N, 2 * ws.N, "downsample");
  return ws.R * values2N;
}

Nx3 antiderivative(const SpectralWorkspace& ws, const Nx3& values) {
  check_rows(values, ws.N, "antiderivative");
  return ws.Sint * values;
}

Nx3 coefficients(const SpectralWorkspace& ws, const Nx3& values) {
  check_rows(values, ws.N, "coefficients");
  return ws.toCoef * values;
}

V3 eval_interp(const Nx3& coefs, double x) {
  V3 out;
  const int n = static_cast<int>(coefs.rows());
  for (int d = 0; d < 3; ++d) {
    Vec c = coefs.col(d);
    out(d) = clenshaw(c.data(), n, x);
  }
  return out;
}

Nx3 eval_series(const Nx3& coefs, const Vec& x) {
  return cheb_vandermonde(x, static_cast<int>(coefs.rows())) * coefs;
}

}  // namespace fibersim
