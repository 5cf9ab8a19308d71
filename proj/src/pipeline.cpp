#include "evislam/pipeline.hpp"

namespace evislam {

struct PipelineWorkload::RayForward {
  Vec3 c_hat = Vec3::Zero();
  double l_hat = 0.0;
  double d_hat = 0.0;
  bool non_surface = false;
  std::vector<double> svals;  // per-sample tsdf
};

struct PipelineWorkload::RayCaches {
  std::vector<FieldQueryCache> q;
  std::vector<MapperCache> mc, ml;
  std::vector<double> h;       // m x hidden_feature_dim
  std::vector<double> w_raw;   // unnormalized bell weights
  std::vector<Vec3> colors;
  std::vector<double> lums;
  double wsum = 0.0;
  Mat3 rot = Mat3::Identity();     // Exp(phi) * R0
  Vec3 origin = Vec3::Zero();      // t0 + tau
  Vec3 dir_world = Vec3::UnitZ();
};

struct PipelineWorkload::Pass1 {
  LossBreakdown bd;
  // rgbd rays (parallel to rgbd_rays_)
  std::vector<Vec3> c_hat;
  std::vector<double> d_hat;
  std::vector<std::uint8_t> color_valid, depth_used;
  std::vector<SdfRayTerms> sdf_terms;
  int n_sdf_rays = 0, n_fs_rays = 0;
  int n_rgb = 0, n_depth = 0;
  // event pairs (parallel to event_pairs_)
  std::vector<std::uint8_t> pair_valid;
  std::vector<double> resid;  // r_i for valid pairs, 0 otherwise
  std::vector<double> bdiff;  // l_beta - l_alpha
  int n_event = 0;
  double scale_b = 1.0;
  bool scale_b_clamped = false;
  double resid_dot_b = 0.0;
};

std::string PipelineWorkload::pose_segment_name(int index) {
  return "pose" + std::to_string(index);
}

PipelineWorkload::PipelineWorkload(const FieldModel& model,
                                   PipelineConfig config,
                                   std::vector<RgbdRaySpec> rgbd_rays,
                                   std::vector<EventPairSpec> event_pairs,
                                   int pose_count)
    : model_(model),
      config_(std::move(config)),
      rgbd_rays_(std::move(rgbd_rays)),
      event_pairs_(std::move(event_pairs)),
      pose_count_(pose_count) {
  if (config_.tr <= 0) throw ConfigError("pipeline: tr must be positive");
  config_.weights.validate();
  if (pose_count_ < 0) throw ConfigError("pipeline: negative pose count");
  auto check_pose = [&](int idx) {
    if (idx >= pose_count_)
      throw ConfigError("pipeline: ray references pose beyond pose count");
  };
  for (const auto& r : rgbd_rays_) {
    check_pose(r.pose_index);
    if (r.depths.empty()) throw DataError("pipeline: ray with no samples");
  }
  for (const auto& p : event_pairs_) {
    check_pose(p.alpha.pose_index);
    check_pose(p.beta.pose_index);
    if (p.alpha.depths.empty() || p.beta.depths.empty())
      throw DataError("pipeline: event ray with no samples");
  }
  for (const auto& seg : model_.layout().segments())
    layout_.add(seg.name, seg.size);
  field_size_ = layout_.total_size();
  exposure_offset_ = layout_.segment("exposure").offset;
  pose_offset_ = field_size_;
  for (int i = 0; i < pose_count_; ++i) layout_.add(pose_segment_name(i), 6);
}

ParamVector PipelineWorkload::make_params(const ParamVector& field_params) const {
  if (field_params.size() != field_size_)
    throw ConfigError("pipeline: field parameter size mismatch");
  ParamVector p(layout_);
  std::copy(field_params.data(), field_params.data() + field_size_, p.data());
  return p;
}

void PipelineWorkload::extract_field(const ParamVector& params,
                                     ParamVector& field_params) const {
  if (field_params.size() != field_size_ || params.size() != layout_.total_size())
    throw ConfigError("pipeline: field parameter size mismatch");
  std::copy(params.data(), params.data() + field_size_, field_params.data());
}

std::pair<Vec3, Vec3> PipelineWorkload::read_tangent(const ParamVector& params,
                                                     int pose_index) const {
  if (pose_index < 0) return {Vec3::Zero(), Vec3::Zero()};
  const double* x = params.data() + pose_offset_ + 6 * std::size_t(pose_index);
  return {Vec3(x[0], x[1], x[2]), Vec3(x[3], x[4], x[5])};
}

PoseSE3 PipelineWorkload::apply_tangent(const ParamVector& params, int index,
                                        const PoseSE3& base) const {
  auto [tau, phi] = read_tangent(params, index);
  return base.retract_split(tau, phi);
}

void PipelineWorkload::forward_ray(const double* params, const PoseSE3& base,
                                   const Vec3& tau, const Vec3& phi,
                                   const Vec3& dir_cam,
                                   const std::vector<double>& depths,
                                   bool want_color, bool want_lum,
                                   RayForward& out, RayCaches* caches) const {
  const std::size_t m = depths.size();
  const int hd = model_.config().hidden_feature_dim;
  const Mat3 rot_phi = so3_exp(phi);
  const Mat3 rot = rot_phi * base.rotation();
  const Vec3 origin = base.translation() + tau;
  const Vec3 dir = rot * dir_cam;

  double ln_dt_c = FieldModel::log_exposure(params[exposure_offset_]);
  double ln_dt_l = FieldModel::log_exposure(params[exposure_offset_ + 1]);

  RayCaches local;
  RayCaches& c = caches ? *caches : local;
  c.q.resize(m);
  c.w_raw.resize(m);
  c.colors.assign(m, Vec3::Zero());
  c.lums.assign(m, 0.0);
  c.h.assign(m * std::size_t(hd), 0.0);
  if (want_color) c.mc.resize(m);
  if (want_lum) c.ml.resize(m);
  c.rot = rot;
  c.origin = origin;
  c.dir_world = dir;

  out.svals.resize(m);
  double wsum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    Vec3 x = origin + depths[i] * dir;
    std::span<double> h(c.h.data() + i * hd, std::size_t(hd));
    model_.query_forward(params, x, c.q[i], h);
    out.svals[i] = c.q[i].s;
    double w = bell_weight(c.q[i].s, config_.tr);
    c.w_raw[i] = w;
    wsum += w;
    if (want_color) {
      model_.map_color_forward(params, c.q[i].e, ln_dt_c, h, c.mc[i]);
      c.colors[i] = Vec3(c.mc[i].out[0], c.mc[i].out[1], c.mc[i].out[2]);
    }
    if (want_lum)
      c.lums[i] = model_.map_luminance_forward(params, c.q[i].e, ln_dt_l, h,
                                               c.ml[i]);
  }
  c.wsum = wsum;

  out.c_hat = Vec3::Zero();
  out.l_hat = 0.0;
  out.d_hat = 0.0;
  out.non_surface = wsum < kWeightFloor;
  if (out.non_surface) return;
  for (std::size_t i = 0; i < m; ++i) {
    double wn = c.w_raw[i] / wsum;
    out.c_hat += wn * c.colors[i];
    out.l_hat += wn * c.lums[i];
    out.d_hat += wn * depths[i];
  }
}

PipelineWorkload::Pass1 PipelineWorkload::run_pass1(
    const ParamVector& params) const {
  Pass1 p;
  const auto& w = config_.weights;
  const double tr = config_.tr;

  p.c_hat.assign(rgbd_rays_.size(), Vec3::Zero());
  p.d_hat.assign(rgbd_rays_.size(), 0.0);
  p.color_valid.assign(rgbd_rays_.size(), 0);
  p.depth_used.assign(rgbd_rays_.size(), 0);
  p.sdf_terms.assign(rgbd_rays_.size(), {});

  RayForward fwd;
  double rgb_acc = 0.0, d_acc = 0.0, sdf_acc = 0.0, fs_acc = 0.0;
  for (std::size_t i = 0; i < rgbd_rays_.size(); ++i) {
    const auto& spec = rgbd_rays_[i];
    auto [tau, phi] = read_tangent(params, spec.pose_index);
    forward_ray(params.data(), spec.base_pose, tau, phi, spec.dir_cam,
                spec.depths, spec.has_color, false, fwd, nullptr);
    if (fwd.non_surface) ++p.bd.non_surface_rays;
    p.c_hat[i] = fwd.c_hat;
    p.d_hat[i] = fwd.d_hat;
    if (spec.has_color && !fwd.non_surface) {
      p.color_valid[i] = 1;
      ++p.n_rgb;
      rgb_acc += (fwd.c_hat - spec.obs_color).squaredNorm();
    }
    if (spec.depth_valid && !fwd.non_surface) {
      p.depth_used[i] = 1;
      ++p.n_depth;
      double r = fwd.d_hat - spec.obs_depth;
      d_acc += r * r;
    }
    if (spec.depth_valid) {
      p.sdf_terms[i] = sdf_ray_terms(spec.depths, fwd.svals, spec.obs_depth, tr);
      if (p.sdf_terms[i].near_count > 0) {
        sdf_acc += p.sdf_terms[i].near_sum / p.sdf_terms[i].near_count;
        ++p.n_sdf_rays;
      }
      if (p.sdf_terms[i].fs_count > 0) {
        fs_acc += p.sdf_terms[i].fs_sum / p.sdf_terms[i].fs_count;
        ++p.n_fs_rays;
      }
    }
  }

  p.pair_valid.assign(event_pairs_.size(), 0);
  p.resid.assign(event_pairs_.size(), 0.0);
  p.bdiff.assign(event_pairs_.size(), 0.0);
  std::vector<double> lums_a(event_pairs_.size(), 0.0);
  std::vector<double> lums_b(event_pairs_.size(), 0.0);
  for (std::size_t j = 0; j < event_pairs_.size(); ++j) {
    const auto& pair = event_pairs_[j];
    auto [tau_a, phi_a] = read_tangent(params, pair.alpha.pose_index);
    forward_ray(params.data(), pair.alpha.base_pose, tau_a, phi_a,
                pair.alpha.dir_cam, pair.alpha.depths, false, true, fwd,
                nullptr);
    bool ok = !fwd.non_surface;
    lums_a[j] = fwd.l_hat;
    if (fwd.non_surface) ++p.bd.non_surface_rays;
    auto [tau_b, phi_b] = read_tangent(params, pair.beta.pose_index);
    forward_ray(params.data(), pair.beta.base_pose, tau_b, phi_b,
                pair.beta.dir_cam, pair.beta.depths, false, true, fwd, nullptr);
    ok = ok && !fwd.non_surface;
    lums_b[j] = fwd.l_hat;
    if (fwd.non_surface) ++p.bd.non_surface_rays;
    if (ok) {
      p.pair_valid[j] = 1;
      ++p.n_event;
      p.bdiff[j] = lums_b[j] - lums_a[j];
    }
  }

  double ev_acc = 0.0;
  if (p.n_event > 0) {
    double scale_a = 1.0, c = config_.event_c;
    if (config_.event_mode == EventLossMode::Normalized) {
      double sa = 0.0, sb = 0.0;
      for (std::size_t j = 0; j < event_pairs_.size(); ++j) {
        if (!p.pair_valid[j]) continue;
        sa += event_pairs_[j].polarity_sum * event_pairs_[j].polarity_sum;
        sb += p.bdiff[j] * p.bdiff[j];
      }
      scale_a = std::max(std::sqrt(sa / p.n_event), 1e-12);
      double rb = std::sqrt(sb / p.n_event);
      p.scale_b_clamped = rb < 1e-12;
      p.scale_b = std::max(rb, 1e-12);
      c = 1.0;
    }
    for (std::size_t j = 0; j < event_pairs_.size(); ++j) {
      if (!p.pair_valid[j]) continue;
      double r = event_pairs_[j].polarity_sum * c / scale_a -
                 p.bdiff[j] / p.scale_b;
      p.resid[j] = r;
      p.resid_dot_b += r * p.bdiff[j];
      ev_acc += r * r;
    }
  }

  p.bd.l_ev = p.n_event > 0 ? ev_acc / p.n_event : 0.0;
  p.bd.l_rgb = p.n_rgb > 0 ? rgb_acc / double(3 * p.n_rgb) : 0.0;
  p.bd.l_d = p.n_depth > 0 ? d_acc / p.n_depth : 0.0;
  p.bd.l_sdf = p.n_sdf_rays > 0 ? sdf_acc / p.n_sdf_rays : 0.0;
  p.bd.l_fs = p.n_fs_rays > 0 ? fs_acc / p.n_fs_rays : 0.0;
  p.bd.rays_rgb = p.n_rgb;
  p.bd.rays_depth = p.n_depth;
  p.bd.pairs_event = p.n_event;
  p.bd.total = w.lambda_ev * p.bd.l_ev + w.lambda_rgb * p.bd.l_rgb +
               w.lambda_d * p.bd.l_d + w.lambda_sdf * p.bd.l_sdf +
               w.lambda_fs * p.bd.l_fs;
  return p;
}

double PipelineWorkload::eval(const ParamVector& params) const {
  return run_pass1(params).bd.total;
}

LossBreakdown PipelineWorkload::breakdown(const ParamVector& params) const {
  return run_pass1(params).bd;
}

void PipelineWorkload::backward_ray(
    const double* params, const RayForward& fwd, const RayCaches& caches,
    const std::vector<double>& depths, bool want_color, bool want_lum,
    const Vec3& dc, double dl, double dd, const std::vector<double>& ds_extra,
    const PoseSE3& base, const Vec3& phi, const Vec3& dir_cam, int pose_index,
    double* grad) const {
  const std::size_t m = depths.size();
  const int hd = model_.config().hidden_feature_dim;
  const double tr = config_.tr;
  const bool surface = !fwd.non_surface;
  const bool has_dc = !dc.isZero(0.0);

  // Weight adjoints through the normalization.
  std::vector<double> wbar(m, 0.0);
  if (surface && (has_dc || dl != 0.0 || dd != 0.0)) {
    double sum_dw_wn = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double dwn = dc.dot(caches.colors[i]) + dl * caches.lums[i] + dd * depths[i];
      wbar[i] = dwn;
      sum_dw_wn += dwn * (caches.w_raw[i] / caches.wsum);
    }
    for (std::size_t i = 0; i < m; ++i)
      wbar[i] = (wbar[i] - sum_dw_wn) / caches.wsum;
  }

  double dln_dt_c = 0.0, dln_dt_l = 0.0;
  Vec3 origin_bar = Vec3::Zero();
  Vec3 dir_bar = Vec3::Zero();
  std::vector<double> dh(std::size_t(hd), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double wn = surface ? caches.w_raw[i] / caches.wsum : 0.0;
    double sbar = ds_extra.empty() ? 0.0 : ds_extra[i];
    if (wbar[i] != 0.0) {
      double sa = sigmoid(fwd.svals[i] / tr);
      sbar += wbar[i] * caches.w_raw[i] * (1.0 - 2.0 * sa) / tr;
    }
    std::array<double, 3> de{};
    std::fill(dh.begin(), dh.end(), 0.0);
    bool touched = sbar != 0.0;
    if (surface && want_color && has_dc) {
      std::array<double, 3> dout = {wn * dc.x(), wn * dc.y(), wn * dc.z()};
      model_.map_color_backward(params, caches.mc[i], caches.q[i].e, dout, grad,
                                &de, &dln_dt_c, dh);
      touched = true;
    }
    if (surface && want_lum && dl != 0.0) {
      model_.map_luminance_backward(params, caches.ml[i], caches.q[i].e,
                                    wn * dl, grad, &de, &dln_dt_l, dh);
      touched = true;
    }
    if (!touched) continue;
    Vec3 dx = Vec3::Zero();
    model_.query_backward(params, caches.q[i], dh, de, sbar, grad, &dx);
    origin_bar += dx;
    dir_bar += depths[i] * dx;
  }

  grad[exposure_offset_] += FieldModel::log_exposure_backward(
      params[exposure_offset_], dln_dt_c);
  grad[exposure_offset_ + 1] += FieldModel::log_exposure_backward(
      params[exposure_offset_ + 1], dln_dt_l);

  if (pose_index >= 0) {
    double* g = grad + pose_offset_ + 6 * std::size_t(pose_index);
    g[0] += origin_bar.x();
    g[1] += origin_bar.y();
    g[2] += origin_bar.z();
    // d = Exp(phi) * (R0 v); left-perturbation chain through the exact
    // rotation uses the right Jacobian Jr(phi) = Jl(-phi).
    Vec3 w0 = base.rotation() * dir_cam;
    Vec3 phibar = so3_left_jacobian(-phi).transpose() *
                  (skew(w0) * (so3_exp(phi).transpose() * dir_bar));
    g[3] += phibar.x();
    g[4] += phibar.y();
    g[5] += phibar.z();
  }
}

double PipelineWorkload::eval_with_grad(const ParamVector& params,
                                        ParamVector& grad) const {
  Pass1 p1 = run_pass1(params);
  grad.set_zero();
  const auto& w = config_.weights;
  const double tr = config_.tr;

  RayForward fwd;
  RayCaches caches;
  std::vector<double> ds_extra;
  for (std::size_t i = 0; i < rgbd_rays_.size(); ++i) {
    const auto& spec = rgbd_rays_[i];
    Vec3 dc = Vec3::Zero();
    double dd = 0.0;
    if (p1.color_valid[i])
      dc = w.lambda_rgb * 2.0 / (3.0 * p1.n_rgb) *
           (p1.c_hat[i] - spec.obs_color);
    if (p1.depth_used[i])
      dd = w.lambda_d * 2.0 / p1.n_depth * (p1.d_hat[i] - spec.obs_depth);

    bool has_sdf =
        spec.depth_valid &&
        (p1.sdf_terms[i].near_count > 0 || p1.sdf_terms[i].fs_count > 0);
    if (dc.isZero(0.0) && dd == 0.0 && !has_sdf) continue;

    auto [tau, phi] = read_tangent(params, spec.pose_index);
    forward_ray(params.data(), spec.base_pose, tau, phi, spec.dir_cam,
                spec.depths, spec.has_color, false, fwd, &caches);

    ds_extra.assign(spec.depths.size(), 0.0);
    if (has_sdf) {
      const auto& terms = p1.sdf_terms[i];
      for (std::size_t k = 0; k < spec.depths.size(); ++k) {
        double z = spec.depths[k];
        if (std::abs(spec.obs_depth - z) <= tr) {
          double r = fwd.svals[k] * tr - (spec.obs_depth - z);
          ds_extra[k] += w.lambda_sdf * 2.0 * r /
                         (tr * terms.near_count * p1.n_sdf_rays);
        } else if (z < spec.obs_depth - tr) {
          ds_extra[k] += w.lambda_fs * 2.0 * (fwd.svals[k] - 1.0) /
                         (terms.fs_count * p1.n_fs_rays);
        }
      }
    }
    backward_ray(params.data(), fwd, caches, spec.depths, spec.has_color,
                 false, dc, 0.0, dd, ds_extra, spec.base_pose, phi,
                 spec.dir_cam, spec.pose_index, grad.data());
  }

  for (std::size_t j = 0; j < event_pairs_.size(); ++j) {
    if (!p1.pair_valid[j]) continue;
    const auto& pair = event_pairs_[j];
    // d(l_ev)/d(bdiff_j); resid_j = a_j - bdiff_j / scale_b.
    double dldb;
    if (config_.event_mode == EventLossMode::Normalized && !p1.scale_b_clamped) {
      dldb = -2.0 / p1.n_event *
             (p1.resid[j] / p1.scale_b -
              p1.resid_dot_b * p1.bdiff[j] /
                  (p1.n_event * p1.scale_b * p1.scale_b * p1.scale_b));
    } else {
      dldb = -2.0 / p1.n_event * p1.resid[j] / p1.scale_b;
    }
    double dlb = w.lambda_ev * dldb;

    ds_extra.clear();
    auto [tau_b, phi_b] = read_tangent(params, pair.beta.pose_index);
    forward_ray(params.data(), pair.beta.base_pose, tau_b, phi_b,
                pair.beta.dir_cam, pair.beta.depths, false, true, fwd, &caches);
    backward_ray(params.data(), fwd, caches, pair.beta.depths, false, true,
                 Vec3::Zero(), dlb, 0.0, ds_extra, pair.beta.base_pose, phi_b,
                 pair.beta.dir_cam, pair.beta.pose_index, grad.data());

    auto [tau_a, phi_a] = read_tangent(params, pair.alpha.pose_index);
    forward_ray(params.data(), pair.alpha.base_pose, tau_a, phi_a,
                pair.alpha.dir_cam, pair.alpha.depths, false, true, fwd,
                &caches);
    backward_ray(params.data(), fwd, caches, pair.alpha.depths, false, true,
                 Vec3::Zero(), -dlb, 0.0, ds_extra, pair.alpha.base_pose,
                 phi_a, pair.alpha.dir_cam, pair.alpha.pose_index, grad.data());
  }

  return p1.bd.total;
}

}  // namespace evislam
