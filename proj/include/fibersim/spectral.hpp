#pragma once

#include <complex>
#include <memory>

#include <Eigen/Dense>

namespace fibersim {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Nx3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using V3 = Eigen::Vector3d;
using M3 = Eigen::Matrix3d;

enum class GridKind { Type1, Type2 };

struct ChebGrid {
  int N = 0;
  GridKind kind = GridKind::Type1;
  double L = 0.0;
  Vec x;  // nodes on [-1,1], ascending
  Vec s;  // nodes on [0,L]
  Vec w;  // quadrature weights on [0,L]
};

ChebGrid make_grid(int N, GridKind kind, double L);

// T_k(x_p) for k < ncoef.
Mat cheb_vandermonde(const Vec& x, int ncoef);

// Coefficient-space derivative on [-1,1]: c' = Dc * c.
Mat cheb_coef_derivative(int n);

// Coefficient-space antiderivative on [-1,1]: n -> n+1 coefficients, constant term zero.
Mat cheb_coef_antiderivative(int n);

template <class T>
T clenshaw(const double* c, int n, T x) {
  T b1 = T(0), b2 = T(0);
  for (int k = n - 1; k >= 1; --k) {
    T b0 = T(c[k]) + T(2) * x * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return T(c[0]) + x * b1 - b2;
}

struct SpectralWorkspace {
  int N = 0;
  double L = 0.0;
  ChebGrid grid;     // N-point type-1
  ChebGrid grid2N;   // 2N-point type-1
  ChebGrid gridExt;  // N+4 type-2

  Mat toCoef;   // values -> Chebyshev coefficients (N x N)
  Mat D;        // N x N differentiation
  Mat Ddag;     // N x N pseudo-inverse of D
  Mat D2N;      // 2N x 2N differentiation
  Mat D2Ndag;   // 2N x 2N pseudo-inverse
  Mat U;        // 2N x N upsampling
  Mat R;        // N x 2N weighted least-squares downsampling
  Mat A;        // N x (N+4) resampling
  Mat B;        // 4 x (N+4) boundary rows
  Mat D4ext;    // (N+4) x (N+4) fourth derivative
  Mat E;        // (N+4) x N extension
  Mat Fop;      // N x N, equals -A D4 E (multiply by kappa)
  Mat Sint;     // N x N: nodal values -> nodal antiderivative values, zero at s=0 of the series
  Mat Vmono;    // N x N monomial Vandermonde V_pq = eta_p^q
  Eigen::PartialPivLU<Mat> Vlu;
  Mat bfp;      // N x N, column p is the finite-part weight vector for node p

  const Vec& w() const { return grid.w; }
  const Vec& s() const { return grid.s; }
};

std::shared_ptr<const SpectralWorkspace> build_workspace(int N, double L);
// Cached by (N, L); returns a shared immutable instance.
std::shared_ptr<const SpectralWorkspace> workspace(int N, double L);

// Row-wise operators applied to N x 3 arrays.
Nx3 differentiate(const SpectralWorkspace& ws, const Nx3& values);
Nx3 extend_with_bcs(const SpectralWorkspace& ws, const Nx3& X);
Nx3 upsample(const SpectralWorkspace& ws, const Nx3& values);
Nx3 downsample(const SpectralWorkspace& ws, const Nx3& values2N);
Nx3 antiderivative(const SpectralWorkspace& ws, const Nx3& values);
Nx3 coefficients(const SpectralWorkspace& ws, const Nx3& values);
V3 eval_interp(const Nx3& coefs, double x);  // x in [-1,1]

// Values of a Chebyshev series (coefficients on [-1,1]) at the points x.
Nx3 eval_series(const Nx3& coefs, const Vec& x);

double monomial_q(int k, double eta);

}  // namespace fibersim
