#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fibersim/harness.hpp"

using namespace fibersim;

namespace {
V3 net_force(const Nx3& f, const Vec& w) { return f.transpose() * w; }
V3 net_torque(const Nx3& X, const Nx3& f, const Vec& w) {
  V3 t = V3::Zero();
  for (int p = 0; p < X.rows(); ++p) t += w(p) * V3(X.row(p).transpose()).cross(V3(f.row(p).transpose()));
  return t;
}
}  // namespace

TEST_CASE("smoothing kernel has unit discrete mass, including at the ends") {
  auto ws = workspace(16, 2.0);
  for (double s : {0.0, 0.3, 1.0, 2.0}) CHECK(smoothing_kernel(*ws, s, 0.2).dot(ws->w()) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("links at rest length exert no force") {
  auto ws = workspace(16, 2.0);
  auto f = random_straight_fibers(2, 16, 2.0, 3.0, 1);
  Nx3 a = f[0].X, b = a;
  b.col(2).array() += 0.5;
  CrossLink c{0, 1, 1.0, 1.0, 1.0, 0.5, {0, 0, 0}};
  Nx3 fi, fj;
  link_force(c, a, b, *ws, 0.2, fi, fj);
  CHECK(fi.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fj.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("every link is force and torque free") {
  auto ws = workspace(16, 2.0);
  auto fib = random_straight_fibers(30, 16, 2.0, 2.5, 7);
  std::vector<Nx3> X;
  for (auto& f : fib) X.push_back(f.X);
  NetworkParams np;
  np.Lbox = V3::Constant(2.5);
  auto links = bind_links(X, *ws, 100, 0.5, 1.0, 3, np);
  REQUIRE(links.size() == 100);
  for (const auto& c : links) {
    Nx3 Xj = X[c.j];
    Xj.rowwise() += lattice_shift(c.image, np.Lbox, 0.1).transpose();
    Nx3 fi, fj;
    link_force(c, X[c.i], Xj, *ws, np.sigma, fi, fj);
    CHECK((net_force(fi, ws->w()) + net_force(fj, ws->w())).norm() < 1e-12);
    CHECK((net_torque(X[c.i], fi, ws->w()) + net_torque(Xj, fj, ws->w())).norm() < 1e-12);
  }
}

TEST_CASE("binding is deterministic and impossible for distant fibers") {
  auto ws = workspace(16, 2.0);
  auto fib = random_straight_fibers(20, 16, 2.0, 2.0, 5);
  std::vector<Nx3> X;
  for (auto& f : fib) X.push_back(f.X);
  NetworkParams np;
  np.Lbox = V3::Constant(2.0);
  auto a = bind_links(X, *ws, 40, 0.5, 1.0, 9, np), b = bind_links(X, *ws, 40, 0.5, 1.0, 9, np);
  REQUIRE(a.size() == b.size());
  for (size_t k = 0; k < a.size(); ++k) CHECK((a[k].i == b[k].i && a[k].si == b[k].si && a[k].image == b[k].image));

  std::vector<Nx3> far{X[0], X[0]};
  far[1].col(2).array() += 5.0;
  NetworkParams fr;
  fr.periodic = false;
  CHECK_THROWS(bind_links(far, *ws, 1, 0.5, 1.0, 1, fr, 1000));
}

TEST_CASE("dense parallel lattice binds the requested count") {
  auto ws = workspace(16, 2.0);
  std::vector<Nx3> X;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Nx3 x(16, 3);
      for (int p = 0; p < 16; ++p) x.row(p) << 0.25 * i, 0.25 * j, ws->s()(p);
      X.push_back(x);
    }
  NetworkParams np;
  np.Lbox = V3(1.0, 1.0, 2.0);
  CHECK(bind_links(X, *ws, 200, 0.5, 1.0, 2, np).size() == 200);
}

TEST_CASE("moduli recover an injected sinusoid") {
  const double w = 2.0 * std::numbers::pi, g0 = 0.1, a = 0.3, b = -0.7;
  std::vector<double> t, s;
  const int n = 1000;
  for (int k = 0; k < 2 * n; ++k) {
    double tk = (k + 0.5) / n;
    t.push_back(tk);
    s.push_back(a * std::sin(w * tk) + b * std::cos(w * tk));
  }
  Moduli m = moduli_from_series(t, s, w, g0, 2.0);
  CHECK(std::abs(m.G1 - a / g0) < 1e-10);
  CHECK(std::abs(m.G2 - b / g0) < 1e-10);
  CHECK_THROWS(moduli_from_series(t, s, w, g0, 1.5));
}

TEST_CASE("zero forces give zero stress") {
  auto ws = workspace(16, 2.0);
  auto fib = random_straight_fibers(3, 16, 2.0, 2.0, 1);
  std::vector<Nx3> X, lam(3, Nx3::Zero(16, 3));
  for (auto& f : fib) X.push_back(f.X);
  CHECK(fiber_stress(X, lam, *ws, ws->Fop, 8.0).norm() < 1e-7);
}

TEST_CASE("mean fiber velocity of a rigid translation") {
  auto ws = workspace(16, 2.0);
  auto fib = random_straight_fibers(2, 16, 2.0, 2.0, 1);
  std::vector<std::vector<Nx3>> snaps;
  const double c = 0.3, h = 0.01;
  for (int k = 0; k < 10; ++k) {
    std::vector<Nx3> X;
    for (auto& f : fib) {
      Nx3 x = f.X;
      x.col(0).array() += c * k * h;
      X.push_back(x);
    }
    snaps.push_back(X);
  }
  auto v = mean_fiber_velocity(snaps, *ws, h, 0.05);
  for (double x : v) CHECK(x == doctest::Approx(c * 0.05 * std::sqrt(2.0)).epsilon(1e-12));
  std::vector<std::vector<Nx3>> frozen(8, snaps[0]);
  for (double x : mean_fiber_velocity(frozen, *ws, h, 0.05)) CHECK(x == 0.0);
}

TEST_CASE("two-exponential fit recovers known constants") {
  std::vector<double> t, y;
  for (int k = 0; k < 100; ++k) {
    t.push_back(0.05 * k);
    y.push_back(0.64 * std::exp(-t.back() / 0.36) + 0.36 * std::exp(-t.back() / 2.39));
  }
  TwoExpFit f = fit_two_exponentials(t, y);
  CHECK(f.tau1 == doctest::Approx(0.36).epsilon(1e-4));
  CHECK(f.tau2 == doctest::Approx(2.39).epsilon(1e-4));
  CHECK(f.a1 == doctest::Approx(0.64).epsilon(1e-4));
}
