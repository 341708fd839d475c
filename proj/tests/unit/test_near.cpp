#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "fibersim/near_quadrature.hpp"
#include "fibersim/random_fibers.hpp"

using namespace fibersim;

TEST_CASE("singular moments match adaptive quadrature") {
  using boost::math::quadrature::gauss_kronrod;
  for (cplx r : {cplx(0.3, 0.01), cplx(-0.8, 0.05), cplx(0.95, 0.2)}) {
    Vec I1, I3, I5;
    singular_moments(r, 12, I1, I3, I5);
    for (int k = 0; k < 12; ++k) {
      int ms[3] = {1, 3, 5};
      const Vec* I[3] = {&I1, &I3, &I5};
      for (int m = 0; m < 3; ++m) {
        auto q = [&](double t) { return std::pow(t, k) / std::pow(std::norm(t - r), ms[m] / 2.0); };
        double v = 0.0;
        std::vector<double> cuts{-1.0, 1.0};
        for (double c : {r.real() - 0.1, r.real(), r.real() + 0.1})
          if (c > -1.0 && c < 1.0) cuts.push_back(c);
        std::sort(cuts.begin(), cuts.end());
        for (size_t i = 0; i + 1 < cuts.size(); ++i) v += gauss_kronrod<double, 61>::integrate(q, cuts[i], cuts[i + 1], 15, 1e-13);
        CHECK(std::abs((*I[m])(k) - v) <= 1e-8 * std::abs((*I[m])(0)));
      }
    }
  }
}

TEST_CASE("route gates follow the distance thresholds") {
  NearOptions opt;
  CHECK(decide_route(0.2 * 2.0, 2.0, opt) == Route::DirectN);
  CHECK(decide_route(0.1 * 2.0, 2.0, opt) == Route::Direct32);
  CHECK(decide_route(0.01 * 2.0, 2.0, opt) != Route::DirectN);
}

TEST_CASE("complex root of a straight fiber") {
  auto ws = workspace(16, 2.0);
  Nx3 X = Nx3::Zero(16, 3);
  X.col(0) = ws->s().array() - 1.0;
  FiberState f = fiber_from_positions(*ws, X);
  SourceFiber src = make_source(ws, FiberParams{}, f.X, f.tau);
  cplx root;
  REQUIRE(complex_root(V3(0.2, 0.05, 0.0), src.cX, src.cXd, 0.2, root));
  CHECK(root.real() == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(std::abs(root.imag()) == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(bernstein_radius(cplx(0.0, 0.0)) == doctest::Approx(1.0));
}

TEST_CASE("near quadrature reaches three digits close to a random fiber") {
  auto res = generate_random_fibers(RandomFiberSpec{}, 3, 99);
  FiberParams fp;
  auto ws = workspace(16, 2.0);
  StokesKernelParams kp = kernel_params(fp, 1.0);
  NearOptions opt;
  opt.blend = false;
  for (const auto& f : res.fibers) {
    SourceFiber src = make_source(ws, fp, f.X, f.tau);
    for (double e : {-0.6, 0.1, 0.7}) {
      V3 X = eval_interp(src.cX, e);
      V3 T = eval_interp(ws->toCoef * f.tau, e).normalized();
      V3 n = T.cross(V3(0.3, 0.5, 0.8)).normalized();
      for (double d : {5e-3, 0.05, 0.2}) {
        V3 x = X + d * n;
        V3 u = interaction_velocity(x, src, f.tau, kp, opt);
        V3 ur = refined_interaction_velocity(x, src, f.tau, kp, 2000);
        CHECK((u - ur).norm() <= 1e-3 * ur.norm());
      }
    }
  }
}

TEST_CASE("far targets need no correction") {
  auto ws = workspace(16, 2.0);
  Nx3 X = Nx3::Zero(16, 3);
  X.col(0) = ws->s().array() - 1.0;
  FiberState f = fiber_from_positions(*ws, X);
  FiberParams fp;
  SourceFiber src = make_source(ws, fp, f.X, f.tau);
  QuadratureDecision dec;
  Mat C = correction_matrix(V3(0.0, 1.0, 0.0), src, kernel_params(fp, 1.0), NearOptions{}, nullptr, &dec);
  CHECK(C.size() == 0);
  CHECK(dec.route == Route::DirectN);
}
