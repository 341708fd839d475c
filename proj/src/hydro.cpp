#include "fibersim/hydro.hpp"

#include "fibersim/error.hpp"
#include "fibersim/kinematics.hpp"

namespace fibersim {

const char* hydro_mode_name(HydroMode m) {
  switch (m) {
    case HydroMode::LocalDrag: return "local";
    case HydroMode::IntraFiber: return "intra";
    case HydroMode::Full: return "full";
  }
  return "?";
}

NonlocalHydro::NonlocalHydro(const FiberParams& fp, const HydroOptions& opt) : fp_(fp), opt_(opt) {
  validate(fp);
  kp_ = kernel_params(fp, opt.mu);
  ws_ = workspace(fp.N, fp.L);
  if (opt.periodic) {
    require((opt.Lbox.array() > 0.0).all(), ErrorCode::Parameter, "periodic box lengths must be positive");
    dom_.Lbox = opt.Lbox;
    if (opt.mode == HydroMode::Full) plan_ = std::make_unique<EwaldPlan>(opt.Lbox, kp_.b, opt.mu, opt.ewald);
  }
}

void NonlocalHydro::set_configuration(const std::vector<Nx3>& X, const std::vector<Nx3>& tau, double strain) {
  require(X.size() == tau.size(), ErrorCode::Dimension, "hydro: position and tangent counts differ");
  X_ = X;
  dom_.g = strain;
  fp_mats_.clear();
  pairs_.clear();
  if (opt_.mode == HydroMode::LocalDrag) return;
  const int F = static_cast<int>(X.size());
  const int N = ws_->N;
  if (opt_.finite_part) {
    fp_mats_.reserve(F);
    for (int i = 0; i < F; ++i) fp_mats_.push_back(finite_part_matrix(*ws_, X[i], tau[i], opt_.mu));
  }
  if (opt_.mode != HydroMode::Full || !opt_.near_corrections || F < 2) return;

  std::vector<SourceFiber> src;
  std::vector<V3> center(F);
  std::vector<double> radius(F);
  src.reserve(F);
  for (int j = 0; j < F; ++j) {
    src.push_back(make_source(ws_, fp_, X[j], tau[j], opt_.finite_part ? fp_mats_[j] : Mat()));
    center[j] = src[j].Xuniform.colwise().mean().transpose();
    radius[j] = (src[j].Xuniform.rowwise() - center[j].transpose()).rowwise().norm().maxCoeff();
  }
  std::function<V3(const V3&)> image;
  if (opt_.periodic) image = [this](const V3& d) { return dom_.minimum_image(d); };
  const double reach = opt_.near.gate_direct * fp_.L;
  for (int i = 0; i < F; ++i)
    for (int j = 0; j < F; ++j) {
      if (i == j) continue;
      V3 dc = center[i] - center[j];
      if (image) dc = image(dc);
      // Every target node lies within radius[i] of its fiber center.
      if (dc.norm() - radius[i] - radius[j] >= reach) continue;
      for (int p = 0; p < N; ++p) {
        V3 x = X[i].row(p).transpose();
        V3 d = x - center[j];
        if (image) d = image(d);
        if (d.norm() - radius[j] >= reach) continue;
        Mat C = correction_matrix(x, src[j], kp_, opt_.near, image);
        if (C.size() > 0) pairs_.push_back({i, p, j, std::move(C)});
      }
    }
}

std::vector<Nx3> NonlocalHydro::apply(const std::vector<Nx3>& f) {
  ++evals_;
  const int F = static_cast<int>(X_.size());
  require(static_cast<int>(f.size()) == F, ErrorCode::Dimension, "hydro: force count does not match configuration");
  const int N = ws_->N;
  std::vector<Nx3> u(F, Nx3::Zero(N, 3));
  if (opt_.mode == HydroMode::LocalDrag) return u;
  for (int i = 0; i < F; ++i) require(f[i].rows() == N, ErrorCode::Dimension, "hydro: force density has wrong size");

  if (opt_.finite_part)
    for (int i = 0; i < F; ++i) u[i] = unflatten(fp_mats_[i] * flatten(f[i]));
  if (opt_.mode != HydroMode::Full || F < 2) return u;

  const Vec& w = ws_->w();
  if (opt_.periodic) {
    std::vector<V3> x, Fw;
    std::vector<int> owner;
    x.reserve(F * N);
    for (int i = 0; i < F; ++i)
      for (int p = 0; p < N; ++p) {
        x.push_back(X_[i].row(p).transpose());
        Fw.push_back(f[i].row(p).transpose() * w(p));
        owner.push_back(i);
      }
    auto v = periodic_rpy_velocities(*plan_, dom_, x, Fw, owner);
    for (int i = 0; i < F; ++i)
      for (int p = 0; p < N; ++p) u[i].row(p) += v[i * N + p].transpose();
  } else {
    for (int i = 0; i < F; ++i)
      for (int p = 0; p < N; ++p) {
        V3 x = X_[i].row(p).transpose();
        V3 acc = V3::Zero();
        for (int j = 0; j < F; ++j) {
          if (j == i) continue;
          for (int q = 0; q < N; ++q)
            acc += rpy_kernel(x, X_[j].row(q).transpose(), kp_.b, kp_.mu) * f[j].row(q).transpose() * w(q);
        }
        u[i].row(p) += acc.transpose();
      }
  }
  for (const auto& pr : pairs_) u[pr.target_fiber].row(pr.target_node) += (pr.C * flatten(f[pr.source_fiber])).transpose();
  return u;
}

}  // namespace fibersim
