#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fibersim/harness.hpp"
#include "fibersim/mobility.hpp"

using namespace fibersim;

TEST_CASE("RPY kernel is continuous at contact and symmetric") {
  const double b = 0.05, mu = 1.3;
  V3 dir = V3(1.0, 2.0, -0.5).normalized();
  M3 in = rpy_kernel(V3::Zero(), dir * (2.0 * b * (1.0 - 1e-12)), b, mu);
  M3 out = rpy_kernel(V3::Zero(), dir * (2.0 * b * (1.0 + 1e-12)), b, mu);
  CHECK((in - out).norm() < 1e-9 * out.norm());
  M3 k = rpy_kernel(V3(0.1, 0.02, 0.0), V3(0.0, 0.01, 0.03), b, mu);
  CHECK((k - k.transpose()).norm() < 1e-14);
  CHECK(rpy_kernel(V3::Zero(), V3::Zero(), b, mu)(0, 0) == doctest::Approx(1.0 / (6.0 * std::numbers::pi * mu * b)));
}

TEST_CASE("kernel parameters") {
  FiberParams fp;
  fp.eps = 1e-3;
  fp.L = 2.0;
  StokesKernelParams kp = kernel_params(fp, 1.0);
  CHECK(kp.b == doctest::Approx(std::exp(1.5) * 2e-3 / 4.0));
  CHECK(kp.doublet_coeff == doctest::Approx(2.0 * kp.b * kp.b / 3.0).epsilon(1e-12));
}

TEST_CASE("local drag matrix is symmetric positive definite") {
  M3 M = local_drag_matrix(V3(0, 0, 1), 13.8, 1.0);
  CHECK((M - M.transpose()).norm() < 1e-15);
  Eigen::SelfAdjointEigenSolver<M3> es(M);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("finite part vanishes for a straight fiber under uniform force") {
  auto ws = workspace(16, 2.0);
  Nx3 t = Nx3::Zero(16, 3);
  t.col(2).setOnes();
  FiberState f = fiber_from_tangents(*ws, t, V3::Zero());
  Nx3 force = Nx3::Zero(16, 3);
  force.rowwise() += V3(0.3, -1.0, 2.0).transpose();
  CHECK(finite_part_velocity(*ws, f.X, f.tau, force, 1.0).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("finite part matches the composite oracle") {
  FinitePartOracle r = finite_part_oracle_check(3, 32, 2024);
  CHECK(r.max_node_relative < 1e-6);
  CHECK(r.max_fiber_relative <= r.max_node_relative);
}

TEST_CASE("finite-part weights agree with the monomial system") {
  auto ws = workspace(12, 2.0);
  for (int p = 0; p < 12; ++p) {
    Vec q(12);
    for (int k = 0; k < 12; ++k) q(k) = monomial_q(k, ws->grid.x(p));
    Vec b = ws->Vlu.transpose().solve(q);
    CHECK((b - ws->bfp.col(p)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("centerline blending weights") {
  CHECK(centerline_weight(0.5, 1.0) == 1.0);
  CHECK(centerline_weight(3.0, 1.0) == doctest::Approx(0.5));
  CHECK(centerline_weight(5.0, 1.0) == 0.0);
}

TEST_CASE("RPY line integral matches local drag to second order in the radius") {
  double e1 = sbt_matching_error(2e-3), e2 = sbt_matching_error(1e-3);
  CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.15));
}
