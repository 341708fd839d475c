#include "fibersim/stepper.hpp"

#include <cmath>

#include "fibersim/error.hpp"

namespace fibersim {

double ShearFlow::rate(double t) const {
  if (t_off >= 0.0 && t >= t_off) return 0.0;
  return omega > 0.0 ? gamma0_dot * std::cos(omega * t) : gamma0_dot;
}

double ShearFlow::strain(double t) const {
  double te = (t_off >= 0.0) ? std::min(t, t_off) : t;
  return omega > 0.0 ? gamma0_dot / omega * std::sin(omega * te) : gamma0_dot * te;
}

SaddleBlocks build_saddle_blocks(const SpectralWorkspace& ws, const FiberParams& fp, const Nx3& tau, double mu,
                                 double dt, double pinv_tol) {
  const int N = ws.N;
  SaddleBlocks sb;
  sb.ops = build_operators(ws, tau);
  Vec c = drag_coeffs(ws.s(), fp);
  sb.Mld = local_drag_operator(tau, c, mu);
  sb.Minv = Mat::Zero(3 * N, 3 * N);
  for (int p = 0; p < N; ++p) sb.Minv.block<3, 3>(3 * p, 3 * p) = M3(sb.Mld.block<3, 3>(3 * p, 3 * p)).inverse();
  Mat F3 = Mat::Zero(3 * N, 3 * N);
  for (int p = 0; p < N; ++p)
    for (int q = 0; q < N; ++q)
      for (int d = 0; d < 3; ++d) F3(3 * p + d, 3 * q + d) = fp.kappa * ws.Fop(p, q);
  sb.FK = F3 * sb.ops.K;
  sb.B = sb.ops.K - 0.5 * dt * sb.Mld * sb.FK;
  Mat S = sb.ops.Kstar * sb.Minv * sb.B;
  Eigen::JacobiSVD<Mat> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  Vec inv = Vec::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > pinv_tol * sv(0)) inv(i) = 1.0 / sv(i);
  sb.Spinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return sb;
}

void solve_saddle(const SaddleBlocks& sb, const Vec& a, const Vec& b, Vec& lambda, Vec& alpha) {
  alpha = sb.Spinv * (b + sb.ops.Kstar * (sb.Minv * a));
  lambda = sb.Minv * (sb.B * alpha - a);
}

GmresResult gmres(const std::function<Vec(const Vec&)>& A, const std::function<Vec(const Vec&)>& Pinv, const Vec& b,
                  int max_iters, double rel_tol) {
  GmresResult res;
  const int n = static_cast<int>(b.size());
  res.x = Vec::Zero(n);
  double beta = b.norm();
  if (beta == 0.0 || max_iters <= 0) {
    res.rel_residual = beta == 0.0 ? 0.0 : 1.0;
    return res;
  }
  std::vector<Vec> V;
  V.push_back(b / beta);
  Mat H = Mat::Zero(max_iters + 1, max_iters);
  Vec cs = Vec::Zero(max_iters), sn = Vec::Zero(max_iters);
  Vec g = Vec::Zero(max_iters + 1);
  g(0) = beta;
  int k = 0;
  double rel = 1.0;
  for (; k < max_iters; ++k) {
    Vec w = A(Pinv(V[k]));
    for (int i = 0; i <= k; ++i) {
      H(i, k) = w.dot(V[i]);
      w -= H(i, k) * V[i];
    }
    H(k + 1, k) = w.norm();
    for (int i = 0; i < k; ++i) {
      double t = cs(i) * H(i, k) + sn(i) * H(i + 1, k);
      H(i + 1, k) = -sn(i) * H(i, k) + cs(i) * H(i + 1, k);
      H(i, k) = t;
    }
    double r = std::hypot(H(k, k), H(k + 1, k));
    cs(k) = r == 0.0 ? 1.0 : H(k, k) / r;
    sn(k) = r == 0.0 ? 0.0 : H(k + 1, k) / r;
    double hk1 = H(k + 1, k);
    H(k, k) = r;
    H(k + 1, k) = 0.0;
    g(k + 1) = -sn(k) * g(k);
    g(k) = cs(k) * g(k);
    rel = std::abs(g(k + 1)) / beta;
    if (rel <= rel_tol || hk1 == 0.0) {
      ++k;
      break;
    }
    V.push_back(w / hk1);
  }
  Vec y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
  Vec z = Vec::Zero(n);
  for (int i = 0; i < k; ++i) z += y(i) * V[i];
  res.x = Pinv(z);
  res.iterations = k;
  res.rel_residual = rel;
  return res;
}

Stepper::Stepper(const FiberParams& fp, std::vector<FiberState> fibers, NonlocalHydro& hydro,
                 const StepperOptions& opt, const ShearFlow& flow, ExtraForce extra)
    : fp_(fp), fibers_(std::move(fibers)), hydro_(hydro), opt_(opt), flow_(flow), extra_(std::move(extra)) {
  validate(fp);
  require(opt.dt > 0.0, ErrorCode::Parameter, "time step must be positive");
  require(opt.gmres_iters >= 0, ErrorCode::Parameter, "GMRES iteration budget must be nonnegative");
  ws_ = workspace(fp.N, fp.L);
  for (const auto& f : fibers_)
    require(f.X.rows() == fp.N && f.tau.rows() == fp.N, ErrorCode::Dimension, "fiber state has wrong node count");
  Fop_ = fp.kappa * ws_->Fop;
  prev_ = fibers_;
}

StepDiagnostics Stepper::step() {
  const int F = static_cast<int>(fibers_.size());
  const int N = ws_->N;
  const int na = 2 * N + 1;
  const double dt = opt_.dt;
  const double mu = hydro_.options().mu;
  StepDiagnostics diag;
  const long e0 = hydro_.evaluations();

  std::vector<Nx3> Xs(F), taus(F), lamstar(F);
  for (int i = 0; i < F; ++i) {
    if (n_ == 0) {
      Xs[i] = fibers_[i].X;
      taus[i] = fibers_[i].tau;
    } else {
      Xs[i] = 1.5 * fibers_[i].X - 0.5 * prev_[i].X;
      taus[i] = (1.5 * fibers_[i].tau - 0.5 * prev_[i].tau).rowwise().normalized();
    }
    if (n_ == 0)
      lamstar[i] = Nx3::Zero(N, 3);
    else if (n_ == 1)
      lamstar[i] = lam_[i];
    else
      lamstar[i] = 2.0 * lam_[i] - lam_prev_[i];
  }
  const double tm = t_ + dt / 2.0;
  hydro_.set_configuration(Xs, taus, flow_.strain(tm));
  std::vector<Nx3> extra = extra_ ? extra_(Xs, tm) : std::vector<Nx3>(F, Nx3::Zero(N, 3));
  require(static_cast<int>(extra.size()) == F, ErrorCode::Dimension, "extra force count mismatch");

  std::vector<SaddleBlocks> blocks;
  blocks.reserve(F);
  for (int i = 0; i < F; ++i) blocks.push_back(build_saddle_blocks(*ws_, fp_, taus[i], mu, dt, opt_.pinv_tol));

  std::vector<Nx3> fNL(F);
  for (int i = 0; i < F; ++i) fNL[i] = lamstar[i] + Fop_ * Xs[i] + extra[i];
  std::vector<Nx3> uNL = hydro_.apply(fNL);
  const double rate = flow_.rate(tm);

  std::vector<Vec> lam(F), alpha(F);
  for (int i = 0; i < F; ++i) {
    Nx3 u0 = Nx3::Zero(N, 3);
    u0.col(0) = rate * Xs[i].col(1);
    Vec a = blocks[i].Mld * flatten(Fop_ * fibers_[i].X + extra[i]) + flatten(uNL[i]) + flatten(u0);
    solve_saddle(blocks[i], a, Vec::Zero(na), lam[i], alpha[i]);
  }

  const bool start = opt_.converged_start && n_ < 2;
  if (!hydro_.is_zero() && (opt_.gmres_iters > 0 || start)) {
    std::vector<Nx3> g(F);
    for (int i = 0; i < F; ++i) {
      Nx3 Ka = unflatten(blocks[i].ops.K * alpha[i]);
      g[i] = Fop_ * (fibers_[i].X + 0.5 * dt * Ka - Xs[i]) + unflatten(lam[i]) - lamstar[i];
    }
    std::vector<Nx3> r = hydro_.apply(g);
    const int blk = 3 * N + na;
    Vec rhs = Vec::Zero(F * blk);
    for (int i = 0; i < F; ++i) rhs.segment(i * blk, 3 * N) = flatten(r[i]);

    auto A = [&](const Vec& x) -> Vec {
      std::vector<Nx3> h(F);
      for (int i = 0; i < F; ++i) {
        Vec dl = x.segment(i * blk, 3 * N), da = x.segment(i * blk + 3 * N, na);
        h[i] = unflatten(dl + 0.5 * dt * blocks[i].FK * da);
      }
      std::vector<Nx3> v = hydro_.apply(h);
      Vec y(x.size());
      for (int i = 0; i < F; ++i) {
        Vec dl = x.segment(i * blk, 3 * N), da = x.segment(i * blk + 3 * N, na);
        y.segment(i * blk, 3 * N) = -blocks[i].Mld * dl + blocks[i].B * da - flatten(v[i]);
        y.segment(i * blk + 3 * N, na) = blocks[i].ops.Kstar * dl;
      }
      return y;
    };
    auto P = [&](const Vec& x) -> Vec {
      Vec y(x.size());
      for (int i = 0; i < F; ++i) {
        Vec l, a;
        solve_saddle(blocks[i], x.segment(i * blk, 3 * N), x.segment(i * blk + 3 * N, na), l, a);
        y.segment(i * blk, 3 * N) = l;
        y.segment(i * blk + 3 * N, na) = a;
      }
      return y;
    };
    GmresResult gr = start ? gmres(A, P, rhs, opt_.start_max_iters, opt_.start_tol)
                           : gmres(A, P, rhs, opt_.gmres_iters, 0.0);
    for (int i = 0; i < F; ++i) {
      lam[i] += gr.x.segment(i * blk, 3 * N);
      alpha[i] += gr.x.segment(i * blk + 3 * N, na);
    }
    diag.gmres_iters = gr.iterations;
    diag.gmres_rel_residual = gr.rel_residual;
  }

  std::vector<FiberState> next(F);
  std::vector<Nx3> lamN(F);
  for (int i = 0; i < F; ++i) {
    lamN[i] = unflatten(lam[i]);
    Nx3 Ka = unflatten(blocks[i].ops.K * alpha[i]);
    Nx3 X1 = fibers_[i].X + dt * Ka;
    Nx3 Om = compute_omega(*ws_, taus[i], Ka);
    next[i] = rotate_and_integrate(*ws_, fibers_[i].tau, Om, dt, X1.row(0).transpose());
    require(next[i].X.allFinite(), ErrorCode::Numerical, "non-finite fiber positions");
    diag.max_tangent_deviation = std::max(diag.max_tangent_deviation, max_tangent_deviation(next[i].tau));
    diag.max_constraint_residual =
        std::max(diag.max_constraint_residual, (blocks[i].ops.Kstar * lam[i]).cwiseAbs().maxCoeff());
  }
  prev_ = std::move(fibers_);
  fibers_ = std::move(next);
  lam_prev_ = n_ == 0 ? lamN : lam_;
  lam_ = std::move(lamN);
  Xmid_ = std::move(Xs);
  extra_mid_ = std::move(extra);
  t_ += dt;
  ++n_;
  diag.hydro_evals = hydro_.evaluations() - e0;
  return diag;
}

}  // namespace fibersim
