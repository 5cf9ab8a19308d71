#include "evislam/slam.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace evislam {

// --- run configuration ------------------------------------------------------

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct ConfigEntry {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
T parse_value(const std::string& key, const std::string& raw);

template <>
int parse_value<int>(const std::string& key, const std::string& raw) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: " + raw);
  }
}

template <>
double parse_value<double>(const std::string& key, const std::string& raw) {
  try {
    std::size_t pos = 0;
    double v = std::stod(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: " + raw);
  }
}

template <>
bool parse_value<bool>(const std::string& key, const std::string& raw) {
  if (raw == "true" || raw == "1") return true;
  if (raw == "false" || raw == "0") return false;
  throw ConfigError("config key '" + key + "': not a boolean: " + raw);
}

template <>
std::uint64_t parse_value<std::uint64_t>(const std::string& key,
                                         const std::string& raw) {
  try {
    std::size_t pos = 0;
    std::uint64_t v = std::stoull(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an unsigned integer: " + raw);
  }
}

const std::map<std::string, ConfigEntry>& config_entries() {
  static const std::map<std::string, ConfigEntry> entries = [] {
    std::map<std::string, ConfigEntry> m;
    auto add_int = [&](const std::string& key, int RunConfig::* field) {
      m[key] = {[key, field](RunConfig& c, const std::string& raw) {
                  c.*field = parse_value<int>(key, raw);
                },
                [field](const RunConfig& c) { return std::to_string(c.*field); }};
    };
    auto add_double = [&](const std::string& key, double RunConfig::* field) {
      m[key] = {[key, field](RunConfig& c, const std::string& raw) {
                  c.*field = parse_value<double>(key, raw);
                },
                [field](const RunConfig& c) { return format_double(c.*field); }};
    };
    auto add_bool = [&](const std::string& key, bool RunConfig::* field) {
      m[key] = {[key, field](RunConfig& c, const std::string& raw) {
                  c.*field = parse_value<bool>(key, raw);
                },
                [field](const RunConfig& c) {
                  return c.*field ? std::string("true") : std::string("false");
                }};
    };

    add_int("level_res0", &RunConfig::level_res0);
    add_int("level_res1", &RunConfig::level_res1);
    add_int("level_res2", &RunConfig::level_res2);
    add_int("feature_width", &RunConfig::feature_width);
    add_int("decoder_hidden", &RunConfig::decoder_hidden);
    add_int("hidden_feature_dim", &RunConfig::hidden_feature_dim);
    add_int("mapper_hidden", &RunConfig::mapper_hidden);
    add_bool("mapper_uses_hidden", &RunConfig::mapper_uses_hidden);
    add_bool("crf_enabled", &RunConfig::crf_enabled);
    add_double("bounds_pad", &RunConfig::bounds_pad);

    add_double("tr", &RunConfig::tr);
    add_double("lambda_ev", &RunConfig::lambda_ev);
    add_double("lambda_rgb", &RunConfig::lambda_rgb);
    add_double("lambda_d", &RunConfig::lambda_d);
    add_double("lambda_sdf", &RunConfig::lambda_sdf);
    add_double("lambda_fs", &RunConfig::lambda_fs);
    m["event_mode"] = {
        [](RunConfig& c, const std::string& raw) { c.event_mode = raw; },
        [](const RunConfig& c) { return c.event_mode; }};
    add_double("event_c", &RunConfig::event_c);
    add_bool("eta_enabled", &RunConfig::eta_enabled);
    add_double("loss_threshold", &RunConfig::loss_threshold);
    add_int("w_d", &RunConfig::w_d);
    add_int("w_s", &RunConfig::w_s);

    add_int("n_track", &RunConfig::n_track);
    add_int("n_ba", &RunConfig::n_ba);
    add_int("event_rays_track", &RunConfig::event_rays_track);
    add_int("event_rays_ba", &RunConfig::event_rays_ba);
    add_int("m_strat", &RunConfig::m_strat);
    add_int("m_surf", &RunConfig::m_surf);
    add_double("near", &RunConfig::near);

    add_int("iters_track", &RunConfig::iters_track);
    add_int("iters_ba", &RunConfig::iters_ba);
    add_int("ba_interval", &RunConfig::ba_interval);
    add_int("keyframe_interval", &RunConfig::keyframe_interval);
    add_int("max_frames", &RunConfig::max_frames);

    add_double("lr_rot", &RunConfig::lr_rot);
    add_double("lr_trans", &RunConfig::lr_trans);
    add_double("lr_grid", &RunConfig::lr_grid);
    add_double("lr_decoder", &RunConfig::lr_decoder);
    add_double("lr_crf", &RunConfig::lr_crf);

    m["seed"] = {[](RunConfig& c, const std::string& raw) {
                   c.seed = parse_value<std::uint64_t>("seed", raw);
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }};
    return m;
  }();
  return entries;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::validate() const {
  if (level_res0 < 2 || level_res1 < 2 || level_res2 < 2)
    throw ConfigError("run config: grid resolutions must be >= 2");
  if (feature_width < 1 || decoder_hidden < 1 || hidden_feature_dim < 1 ||
      mapper_hidden < 1)
    throw ConfigError("run config: network widths must be positive");
  if (tr <= 0) throw ConfigError("run config: tr must be positive");
  if (event_c <= 0) throw ConfigError("run config: event_c must be positive");
  if (event_mode != "known_c" && event_mode != "normalized")
    throw ConfigError("run config: event_mode must be known_c or normalized");
  if (n_track < 1 || n_ba < 1)
    throw ConfigError("run config: ray counts must be positive");
  if (event_rays_track < 0 || event_rays_ba < 0)
    throw ConfigError("run config: event ray counts must be non-negative");
  if (m_strat < 1 || m_surf < 0)
    throw ConfigError("run config: sample counts invalid");
  if (near <= 0) throw ConfigError("run config: near must be positive");
  if (iters_track < 1 || iters_ba < 1)
    throw ConfigError("run config: iteration counts must be positive");
  if (ba_interval < 1 || keyframe_interval < 1)
    throw ConfigError("run config: intervals must be positive");
  if (lr_rot <= 0 || lr_trans <= 0 || lr_grid <= 0 || lr_decoder <= 0 ||
      lr_crf <= 0)
    throw ConfigError("run config: learning rates must be positive");
  PipelineConfig pc = pipeline_config();
  pc.weights.validate();
}

EventLossMode RunConfig::parsed_event_mode() const {
  if (event_mode == "known_c") return EventLossMode::KnownC;
  if (event_mode == "normalized") return EventLossMode::Normalized;
  throw ConfigError("run config: event_mode must be known_c or normalized");
}

FieldConfig RunConfig::field_config(const Aabb& scene_bounds) const {
  FieldConfig fc;
  fc.bounds.lo = scene_bounds.lo.array() - bounds_pad;
  fc.bounds.hi = scene_bounds.hi.array() + bounds_pad;
  fc.level_resolutions = {level_res0, level_res1, level_res2};
  fc.feature_width = feature_width;
  fc.decoder_hidden = decoder_hidden;
  fc.hidden_feature_dim = hidden_feature_dim;
  fc.mapper_hidden = mapper_hidden;
  fc.mapper_uses_hidden = mapper_uses_hidden;
  fc.crf_enabled = crf_enabled;
  return fc;
}

PipelineConfig RunConfig::pipeline_config() const {
  PipelineConfig pc;
  pc.tr = tr;
  pc.weights.lambda_ev = eta_enabled ? lambda_ev : 0.0;
  pc.weights.lambda_rgb = lambda_rgb;
  pc.weights.lambda_d = lambda_d;
  pc.weights.lambda_sdf = lambda_sdf;
  pc.weights.lambda_fs = lambda_fs;
  pc.weights.loss_threshold = loss_threshold;
  pc.weights.w_d = w_d;
  pc.weights.w_s = w_s;
  pc.event_mode = parsed_event_mode();
  pc.event_c = event_c;
  return pc;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config: " + path.string());
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("run config line " + std::to_string(line_no) +
                        ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto it = config_entries().find(key);
    if (it == config_entries().end())
      throw ConfigError("run config: unknown key '" + key + "'");
    it->second.set(cfg, value);
  }
  cfg.validate();
  return cfg;
}

void write_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write run config: " + path.string());
  for (const auto& [key, entry] : config_entries())
    out << key << " = " << entry.get(cfg) << "\n";
  if (!out) throw DataError("run config write failed: " + path.string());
}

// --- optimizer --------------------------------------------------------------

AdamOptimizer::AdamOptimizer(std::size_t n, double beta1, double beta2,
                             double eps)
    : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(ParamVector& params, const ParamVector& grad,
                         const std::vector<double>& lr, double lr_scale) {
  if (params.size() != m_.size() || grad.size() != m_.size() ||
      lr.size() != m_.size())
    throw DataError("adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < m_.size(); ++i) {
    if (lr[i] == 0.0) continue;
    double g = grad[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    double mhat = m_[i] / c1;
    double vhat = v_[i] / c2;
    params[i] -= lr_scale * lr[i] * mhat / (std::sqrt(vhat) + eps_);
  }
}

std::vector<double> segment_learning_rates(
    const ParamLayout& layout, const RunConfig& cfg, bool field_trainable,
    const std::vector<std::uint8_t>& pose_trainable) {
  std::vector<double> lr(layout.total_size(), 0.0);
  for (const auto& seg : layout.segments()) {
    if (seg.name.rfind("pose", 0) == 0) {
      int index = std::stoi(seg.name.substr(4));
      if (index < 0 || index >= int(pose_trainable.size()) ||
          !pose_trainable[std::size_t(index)])
        continue;
      for (int i = 0; i < 3; ++i) lr[seg.offset + i] = cfg.lr_trans;
      for (int i = 3; i < 6; ++i) lr[seg.offset + i] = cfg.lr_rot;
      continue;
    }
    if (!field_trainable) continue;
    double rate = 0.0;
    if (seg.name.rfind("grid_", 0) == 0)
      rate = cfg.lr_grid;
    else if (seg.name == "decoder")
      rate = cfg.lr_decoder;
    else if (seg.name.rfind("crf_", 0) == 0 || seg.name == "exposure")
      rate = cfg.lr_crf;
    for (std::size_t i = 0; i < seg.size; ++i) lr[seg.offset + i] = rate;
  }
  return lr;
}

// --- slam system ------------------------------------------------------------

SlamSystem::SlamSystem(const Dataset& data, const RunConfig& cfg)
    : data_(&data), cfg_(cfg),
      model_(cfg.field_config(data.scene.bounds)),
      field_params_(model_.layout()),
      selector_(cfg.w_d, cfg.w_s, cfg.loss_threshold),
      accum_(data.events) {
  cfg_.validate();
  if (data.rgb.empty()) throw DataError("slam: dataset has no frames");
  if (data.rgb.size() != data.depth.size() ||
      data.rgb.size() != data.timestamps.size())
    throw DataError("slam: frame/timestamp count mismatch");
  if (data.traj_gt.poses.empty())
    throw DataError("slam: dataset has no ground-truth anchor pose");
  frame_count_ = int(data.rgb.size());
  if (cfg_.max_frames > 0) frame_count_ = std::min(frame_count_, cfg_.max_frames);
  far_ = model_.config().bounds.diagonal();
  est_.frame_rate = data.traj_gt.frame_rate;
  model_.init_params(field_params_, cfg_.seed);
}

std::uint64_t SlamSystem::frame_time_ns(int frame) const {
  return std::uint64_t(std::llround(data_->timestamps[std::size_t(frame)] * 1e9));
}

std::mt19937_64 SlamSystem::frame_rng(int frame, std::uint64_t salt) const {
  std::uint64_t s = cfg_.seed;
  s ^= 0x9E3779B97F4A7C15ULL * (std::uint64_t(frame) + 1);
  s ^= salt * 0xBF58476D1CE4E5B9ULL;
  return std::mt19937_64(s);
}

bool SlamSystem::event_term_active() const {
  return cfg_.eta_enabled && cfg_.lambda_ev > 0 && cfg_.event_rays_track >= 0 &&
         !data_->events.records.empty();
}

SlamSystem::RayBatch SlamSystem::sample_rgbd_rays(int frame, const PoseSE3& base,
                                                  int pose_index, int count,
                                                  std::mt19937_64& rng) const {
  const CalibData& calib = data_->calib;
  const ImageRgb& rgb = data_->rgb[std::size_t(frame)];
  const ImageGray& depth = data_->depth[std::size_t(frame)];
  RayBatch batch;
  batch.pixels = sample_uniform_pixels(calib.rgbd, count, rng);
  batch.sensor_depths.reserve(batch.pixels.size());
  batch.rgbd.reserve(batch.pixels.size());
  for (const Vec2& px : batch.pixels) {
    int u = int(px.x()), v = int(px.y());
    RgbdRaySpec ray;
    ray.pose_index = pose_index;
    ray.base_pose = base;
    ray.dir_cam = calib.rgbd.unproject(px.x(), px.y()).normalized();
    const float* c = rgb.px(u, v);
    ray.obs_color = Vec3(c[0], c[1], c[2]);
    ray.has_color = true;
    double d = depth.px(u, v)[0];
    ray.depth_valid = d > 0;
    ray.obs_depth = ray.depth_valid ? d : 0.0;
    ray.depths = sample_ray(cfg_.near, far_, ray.obs_depth, ray.depth_valid,
                            cfg_.tr, cfg_.m_strat, cfg_.m_surf, rng);
    batch.sensor_depths.push_back(ray.obs_depth);
    batch.rgbd.push_back(std::move(ray));
  }
  return batch;
}

std::vector<double> SlamSystem::pixel_losses(const RayBatch& batch,
                                             const PoseSE3& pose) const {
  std::vector<double> losses(batch.rgbd.size(), 0.0);
  Mat3 R = pose.rotation();
  for (std::size_t i = 0; i < batch.rgbd.size(); ++i) {
    const RgbdRaySpec& spec = batch.rgbd[i];
    Ray ray;
    ray.origin = pose.translation();
    ray.dir = R * spec.dir_cam;
    ray.pixel = batch.pixels[i];
    RenderBundle bundle =
        render_ray(model_, field_params_, ray, spec.depths, cfg_.tr,
                   /*want_color=*/true, /*want_luminance=*/false);
    if (bundle.non_surface) continue;
    losses[i] = (bundle.c_hat - spec.obs_color).squaredNorm();
  }
  return losses;
}

void SlamSystem::append_event_pairs(std::vector<EventPairSpec>& pairs,
                                    int frame, int prev,
                                    const PoseSE3& pose_cur, int index_cur,
                                    const PoseSE3& pose_prev, int index_prev,
                                    const RayBatch& batch, int count,
                                    std::mt19937_64& rng) const {
  if (count <= 0 || prev < 0) return;
  const CalibData& calib = data_->calib;
  MiniPlaneMap map = splat_losses(batch.pixels, pixel_losses(batch, pose_cur),
                                  batch.sensor_depths, calib);
  auto event_pixels = sample_event_pixels(map, calib.event, count, rng);
  const std::uint64_t t_a = frame_time_ns(prev), t_b = frame_time_ns(frame);
  const PoseSE3 base_a = calib.event_pose(pose_prev);
  const PoseSE3 base_b = calib.event_pose(pose_cur);
  // Event rays have no sensor depth; probe the current field with a coarse
  // uniform pass and resample surface-guided around its depth estimate, so
  // the luminance render concentrates samples inside the truncation band.
  auto guided_depths = [&](const PoseSE3& base, const Vec3& dir_cam,
                           std::mt19937_64& r) {
    Ray ray;
    ray.origin = base.translation();
    ray.dir = base.rotation() * dir_cam;
    std::vector<double> coarse = sample_ray(
        cfg_.near, far_, 0.0, false, cfg_.tr, cfg_.m_strat + cfg_.m_surf, 0, r);
    RenderBundle probe = render_ray(model_, field_params_, ray, coarse,
                                    cfg_.tr, false, false);
    return sample_ray(cfg_.near, far_, probe.d_hat, !probe.non_surface,
                      cfg_.tr, cfg_.m_strat, cfg_.m_surf, r);
  };
  for (const Vec2& px : event_pixels) {
    EventPairSpec pair;
    pair.polarity_sum =
        double(accum_.accumulate(int(px.x()), int(px.y()), t_a, t_b));
    pair.alpha.pose_index = index_prev;
    pair.alpha.base_pose = base_a;
    pair.alpha.dir_cam = calib.event.unproject(px.x(), px.y()).normalized();
    pair.alpha.depths = guided_depths(base_a, pair.alpha.dir_cam, rng);
    pair.beta.pose_index = index_cur;
    pair.beta.base_pose = base_b;
    pair.beta.dir_cam = pair.alpha.dir_cam;
    pair.beta.depths = guided_depths(base_b, pair.beta.dir_cam, rng);
    pairs.push_back(std::move(pair));
  }
}

void SlamSystem::track(int frame) {
  const PoseSE3& p1 = est_.poses[std::size_t(frame - 1)].pose;
  PoseSE3 init = p1;
  if (frame >= 2) {
    const PoseSE3& p2 = est_.poses[std::size_t(frame - 2)].pose;
    init = p1 * (p2.inverse() * p1);
  }

  std::mt19937_64 rng = frame_rng(frame, 0);
  RayBatch batch = sample_rgbd_rays(frame, init, 0, cfg_.n_track, rng);
  int prev = selector_.select(frame);

  std::vector<EventPairSpec> pairs;
  if (event_term_active() && prev >= 0)
    append_event_pairs(pairs, frame, prev, init, 0,
                       est_.poses[std::size_t(prev)].pose, -1, batch,
                       cfg_.event_rays_track, rng);

  PipelineWorkload workload(model_, cfg_.pipeline_config(), batch.rgbd,
                            std::move(pairs), 1);
  ParamVector params = workload.make_params(field_params_);
  std::vector<double> lr = segment_learning_rates(
      workload.layout(), cfg_, /*field_trainable=*/false, {1});
  AdamOptimizer adam(params.size());
  ParamVector grad(workload.layout());

  bool diverged = false;
  for (int it = 0; it < cfg_.iters_track; ++it) {
    double loss;
    try {
      loss = workload.eval_with_grad(params, grad);
    } catch (const NumericalError&) {
      diverged = true;
      break;
    }
    if (!std::isfinite(loss) || !grad.all_finite()) {
      diverged = true;
      break;
    }
    adam.step(params, grad, lr);
  }
  if (diverged) {
    // Revert to the initialization and flag the frame.
    for (double& x : params.segment(PipelineWorkload::pose_segment_name(0)))
      x = 0.0;
    ++diverged_frames_;
  }

  PoseSE3 pose = workload.apply_tangent(params, 0, init);
  FrameLog log;
  log.frame = frame;
  log.prev_id = prev;
  log.diverged = diverged;
  try {
    log.losses = workload.breakdown(params);
  } catch (const NumericalError&) {
    log.losses = LossBreakdown{};
    log.losses.total = std::numeric_limits<double>::infinity();
  }

  est_.poses.push_back({data_->timestamps[std::size_t(frame)], pose});
  double recorded = log.losses.total;
  if (!std::isfinite(recorded)) recorded = 1e30;
  selector_.record(frame, recorded);
  prev_ids_.push_back(prev);
  logs_.push_back(log);
}

void SlamSystem::optimize_map(int frame) {
  // Keyframes: every keyframe_interval-th frame up to and including the
  // current one.
  std::vector<int> keyframes;
  for (int f = 0; f <= frame; f += cfg_.keyframe_interval) keyframes.push_back(f);
  if (keyframes.back() != frame) keyframes.push_back(frame);

  // Pose segment assignment: frame 0 stays fixed (gauge), every other
  // keyframe gets a trainable tangent.
  std::vector<int> pose_index(keyframes.size(), -1);
  std::vector<PoseSE3> base(keyframes.size());
  std::map<int, int> frame_to_index;
  int n_poses = 0;
  for (std::size_t k = 0; k < keyframes.size(); ++k) {
    base[k] = est_.poses[std::size_t(keyframes[k])].pose;
    if (keyframes[k] != 0) pose_index[k] = n_poses++;
    frame_to_index[keyframes[k]] = pose_index[k];
  }

  std::mt19937_64 rng = frame_rng(frame, 1);
  const int rays_per_kf =
      std::max(1, cfg_.n_ba / int(keyframes.size()));
  const int event_per_kf =
      keyframes.size() > 1
          ? std::max(1, cfg_.event_rays_ba / int(keyframes.size() - 1))
          : 0;

  std::vector<RgbdRaySpec> rays;
  std::vector<EventPairSpec> pairs;
  for (std::size_t k = 0; k < keyframes.size(); ++k) {
    RayBatch batch =
        sample_rgbd_rays(keyframes[k], base[k], pose_index[k], rays_per_kf, rng);
    if (event_term_active() && keyframes[k] > 0) {
      int prev = prev_ids_[std::size_t(keyframes[k])];
      if (prev >= 0) {
        auto it = frame_to_index.find(prev);
        int prev_index = it != frame_to_index.end() ? it->second : -1;
        append_event_pairs(pairs, keyframes[k], prev, base[k], pose_index[k],
                           est_.poses[std::size_t(prev)].pose, prev_index,
                           batch, event_per_kf, rng);
      }
    }
    rays.insert(rays.end(), std::make_move_iterator(batch.rgbd.begin()),
                std::make_move_iterator(batch.rgbd.end()));
  }

  PipelineWorkload workload(model_, cfg_.pipeline_config(), std::move(rays),
                            std::move(pairs), std::max(n_poses, 1));
  ParamVector params = workload.make_params(field_params_);
  std::vector<std::uint8_t> trainable(std::size_t(std::max(n_poses, 1)), 1);
  std::vector<double> lr = segment_learning_rates(workload.layout(), cfg_,
                                                  /*field_trainable=*/true,
                                                  trainable);
  AdamOptimizer adam(params.size());
  ParamVector grad(workload.layout());
  ParamVector last_good = params;
  double lr_scale = 1.0;

  for (int it = 0; it < cfg_.iters_ba; ++it) {
    bool ok = true;
    double loss = 0.0;
    try {
      loss = workload.eval_with_grad(params, grad);
    } catch (const NumericalError&) {
      ok = false;
    }
    if (ok && (!std::isfinite(loss) || !grad.all_finite())) ok = false;
    if (!ok) {
      // Reject the step that led here and halve the learning rate.
      params = last_good;
      lr_scale *= 0.5;
      ++rejected_ba_steps_;
      continue;
    }
    last_good = params;
    adam.step(params, grad, lr, lr_scale);
    model_.project_mapper_weights(params);
  }
  if (!params.all_finite()) params = last_good;

  workload.extract_field(params, field_params_);
  for (std::size_t k = 0; k < keyframes.size(); ++k) {
    if (pose_index[k] < 0) continue;
    est_.poses[std::size_t(keyframes[k])].pose =
        workload.apply_tangent(params, pose_index[k], base[k]);
  }
}

bool SlamSystem::step() {
  if (next_frame_ >= frame_count_) return false;
  int frame = next_frame_;
  if (frame == 0) {
    // Anchor the gauge at the dataset's first reference pose, then fit the
    // field to the first frame.
    est_.poses.push_back(
        {data_->timestamps[0], data_->traj_gt.poses.front().pose});
    optimize_map(0);

    std::mt19937_64 rng = frame_rng(0, 2);
    RayBatch batch = sample_rgbd_rays(0, est_.poses[0].pose, -1,
                                      std::min(cfg_.n_track, 256), rng);
    PipelineWorkload probe(model_, cfg_.pipeline_config(), batch.rgbd, {}, 1);
    ParamVector probe_params = probe.make_params(field_params_);
    FrameLog log;
    log.frame = 0;
    log.prev_id = -1;
    log.losses = probe.breakdown(probe_params);
    logs_.push_back(log);
    selector_.record(0, std::isfinite(log.losses.total) ? log.losses.total
                                                        : 1e30);
    prev_ids_.push_back(-1);
  } else {
    track(frame);
    if (frame % cfg_.ba_interval == 0) optimize_map(frame);
  }
  ++next_frame_;
  return true;
}

void SlamSystem::run() {
  while (step()) {
  }
}

void write_loss_csv(const std::vector<FrameLog>& logs,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write loss log: " + path.string());
  out << "frame,L_ev,L_rgb,L_d,L_sdf,L_fs,total,prev_id\n";
  char buf[256];
  for (const FrameLog& log : logs) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%d\n", log.frame,
                  log.losses.l_ev, log.losses.l_rgb, log.losses.l_d,
                  log.losses.l_sdf, log.losses.l_fs, log.losses.total,
                  log.prev_id);
    out << buf;
  }
  if (!out) throw DataError("loss log write failed: " + path.string());
}

void SlamSystem::write_outputs(const std::filesystem::path& out_dir) const {
  std::filesystem::create_directories(out_dir);
  write_tum(est_, out_dir / "traj_est.txt");
  write_loss_csv(logs_, out_dir / "losses.csv");
  save_checkpoint(model_, field_params_, out_dir / "field.ckpt");
  write_run_config(cfg_, out_dir / "run_config.txt");
}

}  // namespace evislam
