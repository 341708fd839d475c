#include "fibersim/kinematics.hpp"

#include <cmath>

#include "fibersim/error.hpp"

namespace fibersim {

Vec flatten(const Nx3& a) { return Eigen::Map<const Vec>(a.data(), a.size()); }

Nx3 unflatten(const Vec& v) {
  require(v.size() % 3 == 0, ErrorCode::Dimension, "flat vector length not divisible by 3");
  return Eigen::Map<const Nx3>(v.data(), v.size() / 3, 3);
}

KinematicOperators build_operators(const SpectralWorkspace& ws, const Nx3& tau) {
  const int N = ws.N;
  require(tau.rows() == N, ErrorCode::Dimension, "build_operators: tangent size mismatch");
  const int N2 = 2 * N;
  const int nb = N - 1;
  Nx3 tau2 = (ws.U * tau).rowwise().normalized();
  Nx3 n1(N2, 3), n2(N2, 3);
  for (int p = 0; p < N2; ++p) {
    auto [a, b] = tangent_frame(tau2.row(p).transpose());
    n1.row(p) = a.transpose();
    n2.row(p) = b.transpose();
  }
  Mat T = cheb_vandermonde(ws.grid2N.x, nb);

  KinematicOperators ops;
  ops.N = N;
  ops.J2N.resize(3 * N2, 2 * nb);
  ops.K.setZero(3 * N, 2 * nb + 3);
  for (int j = 0; j < 2; ++j) {
    const Nx3& nj = (j == 0) ? n1 : n2;
    for (int k = 0; k < nb; ++k) {
      Nx3 integrand = nj.array().colwise() * T.col(k).array();
      Nx3 Jcol = ws.D2Ndag * integrand;
      ops.J2N.col(j * nb + k) = flatten(Jcol);
      ops.K.col(j * nb + k) = flatten(ws.R * Jcol);
    }
  }
  for (int p = 0; p < N; ++p)
    for (int d = 0; d < 3; ++d) ops.K(3 * p + d, 2 * nb + d) = 1.0;

  // Upsampling and 2N weights applied componentwise.
  Mat WU(3 * N2, 3 * N);
  WU.setZero();
  for (int p = 0; p < N2; ++p)
    for (int q = 0; q < N; ++q)
      for (int d = 0; d < 3; ++d) WU(3 * p + d, 3 * q + d) = ws.grid2N.w(p) * ws.U(p, q);
  ops.Kstar.setZero(2 * nb + 3, 3 * N);
  ops.Kstar.topRows(2 * nb) = ops.J2N.transpose() * WU;
  for (int q = 0; q < N; ++q)
    for (int d = 0; d < 3; ++d) ops.Kstar(2 * nb + d, 3 * q + d) = ws.grid.w(q);
  return ops;
}

Nx3 compute_omega(const SpectralWorkspace& ws, const Nx3& tau_mid, const Nx3& velocity) {
  require(tau_mid.rows() == ws.N && velocity.rows() == ws.N, ErrorCode::Dimension,
          "compute_omega: size mismatch");
  Nx3 dU = ws.U * (ws.D * velocity);
  Nx3 t2 = ws.U * tau_mid;
  Nx3 cr(2 * ws.N, 3);
  for (int p = 0; p < 2 * ws.N; ++p) {
    V3 a = t2.row(p).transpose(), b = dU.row(p).transpose();
    cr.row(p) = a.cross(b).transpose();
  }
  return ws.R * cr;
}

V3 rodrigues(const V3& v, const V3& omega, double dt) {
  double mag = omega.norm();
  if (mag * dt == 0.0) return v;
  V3 k = omega / mag;
  double th = mag * dt;
  return v * std::cos(th) + k.cross(v) * std::sin(th) + k * k.dot(v) * (1.0 - std::cos(th));
}

FiberState rotate_and_integrate(const SpectralWorkspace& ws, const Nx3& tau, const Nx3& Omega, double dt,
                                const V3& anchor) {
  require(dt > 0.0, ErrorCode::Parameter, "time step must be positive");
  require(tau.rows() == ws.N && Omega.rows() == ws.N, ErrorCode::Dimension, "rotate: size mismatch");
  Nx3 t(ws.N, 3);
  for (int p = 0; p < ws.N; ++p) t.row(p) = rodrigues(tau.row(p).transpose(), Omega.row(p).transpose(), dt);
  FiberState f;
  f.tau = t;
  Nx3 I = antiderivative(ws, t);
  V3 shift = anchor - I.row(0).transpose();
  f.X = I.rowwise() + shift.transpose();
  return f;
}

}  // namespace fibersim
