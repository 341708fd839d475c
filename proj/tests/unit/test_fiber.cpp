#include <doctest.h>

#include <cmath>

#include "fibersim/kinematics.hpp"
#include "fibersim/random_fibers.hpp"

using namespace fibersim;

TEST_CASE("fiber from tangents has unit tangents and the given anchor") {
  auto ws = workspace(16, 2.0);
  Nx3 t(16, 3);
  for (int p = 0; p < 16; ++p) {
    double s = ws->s()(p);
    t.row(p) << std::cos(s), std::sin(s), 0.3;
  }
  FiberState f = fiber_from_tangents(*ws, t, V3(1, 2, 3));
  CHECK(max_tangent_deviation(f.tau) < 1e-14);
  CHECK((differentiate(*ws, f.X) - f.tau).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("regularized drag coefficient") {
  FiberParams fp;
  fp.L = 2.0;
  fp.eps = 1e-3;
  fp.delta = 0.1;
  CHECK(regularized_drag_coeff(1.0, fp) == doctest::Approx(std::log(4.0 / (fp.eps * fp.eps * 4.0))));
  CHECK(regularized_drag_coeff(0.0, fp) == doctest::Approx(regularized_drag_coeff(2.0, fp)));
  fp.ellipsoidal = true;
  CHECK(regularized_drag_coeff(0.05, fp) == doctest::Approx(-std::log(fp.eps * fp.eps)));
}

TEST_CASE("straight fibers feel no bending force") {
  auto ws = workspace(16, 2.0);
  Nx3 t = Nx3::Zero(16, 3);
  t.col(1).setOnes();
  FiberState f = fiber_from_tangents(*ws, t, V3::Zero());
  CHECK(bending_force(*ws, f.X, 1.0).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("invalid fiber parameters are rejected") {
  FiberParams fp;
  fp.eps = -1.0;
  CHECK_THROWS(validate(fp));
}

TEST_CASE("kinematic operator produces inextensible velocities") {
  auto ws = workspace(16, 2.0);
  auto res = generate_random_fibers(RandomFiberSpec{}, 1, 11);
  const FiberState& f = res.fibers[0];
  KinematicOperators ops = build_operators(*ws, f.tau);
  Vec alpha = Vec::LinSpaced(ops.J2N.cols(), -1.0, 1.0);
  // On the 2N grid the velocity derivative is normal to the tangent up to the truncated top mode.
  Nx3 us = ws->D2N * unflatten(ops.J2N * alpha);
  Nx3 t2 = (ws->U * f.tau).rowwise().normalized();
  double worst = 0.0;
  for (int p = 0; p < 32; ++p) worst = std::max(worst, std::abs(us.row(p).dot(t2.row(p))));
  CHECK(worst < 1e-3);
}

TEST_CASE("constraint forces do no work on inextensible motions") {
  auto ws = workspace(16, 2.0);
  auto res = generate_random_fibers(RandomFiberSpec{}, 1, 5);
  KinematicOperators ops = build_operators(*ws, res.fibers[0].tau);
  Vec alpha = Vec::LinSpaced(ops.K.cols(), 0.5, -0.25);
  Vec lam = Vec::LinSpaced(48, -1.0, 2.0);
  const int nb = static_cast<int>(ops.J2N.cols());
  // Rotational part pairs on the 2N grid, translational part on the N grid.
  Nx3 u2 = unflatten(ops.J2N * alpha.head(nb));
  Nx3 l2 = ws->U * unflatten(lam);
  double rot = 0.0;
  for (int p = 0; p < 32; ++p) rot += ws->grid2N.w(p) * u2.row(p).dot(l2.row(p));
  Nx3 L = unflatten(lam);
  V3 tr = V3::Zero();
  for (int p = 0; p < 16; ++p) tr += ws->w()(p) * V3(L.row(p).transpose());
  CHECK((ops.Kstar * lam).dot(alpha) == doctest::Approx(rot + tr.dot(alpha.tail<3>())).epsilon(1e-12));
}

TEST_CASE("Rodrigues rotation preserves the tangent norm") {
  V3 v(0.3, -0.4, std::sqrt(0.75));
  for (double dt : {1e-4, 0.1, 3.0}) CHECK(rodrigues(v, V3(1.0, 2.0, -0.5), dt).norm() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("rigid rotation field rotates a straight fiber rigidly") {
  auto ws = workspace(16, 2.0);
  Nx3 t = Nx3::Zero(16, 3);
  t.col(0).setOnes();
  FiberState f = fiber_from_tangents(*ws, t, V3::Zero());
  Nx3 Om = Nx3::Zero(16, 3);
  Om.col(2).setConstant(0.7);
  FiberState g = rotate_and_integrate(*ws, f.tau, Om, 0.5, V3::Zero());
  for (int p = 0; p < 16; ++p) {
    double s = ws->s()(p);
    const double r = s - ws->s()(0);  // anchored at the first node
    V3 expect(r * std::cos(0.35), r * std::sin(0.35), 0.0);
    CHECK((V3(g.X.row(p).transpose()) - expect).norm() < 1e-12);
  }
}

TEST_CASE("random fiber generator is deterministic and smooth") {
  RandomFiberSpec sp;
  auto a = generate_random_fibers(sp, 5, 42);
  auto b = generate_random_fibers(sp, 5, 42);
  auto ws = workspace(sp.N, sp.L);
  for (int i = 0; i < 5; ++i) {
    CHECK(a.fibers[i].X == b.fibers[i].X);
    CHECK(max_tangent_deviation(a.fibers[i].tau) < 1e-14);
    Nx3 c = ws->toCoef * a.fibers[i].X;
    CHECK(c.row(15).norm() <= 1e-4 * c.row(1).norm());
  }
  sp.max_modes = 0;
  auto s = generate_random_fibers(sp, 1, 3);
  Nx3 tau = s.fibers[0].tau;
  CHECK((tau.rowwise() - tau.row(0)).cwiseAbs().maxCoeff() < 1e-14);
}
