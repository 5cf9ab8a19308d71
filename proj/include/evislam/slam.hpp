#pragma once

#include <random>

#include "evislam/dataset.hpp"
#include "evislam/pipeline.hpp"
#include "evislam/sampling.hpp"

namespace evislam {

// Flat key=value run configuration. Every tunable of the tracking/mapping
// loop lives here so a run is reproducible from the file plus the dataset.
struct RunConfig {
  // implicit field
  int level_res0 = 16, level_res1 = 32, level_res2 = 64;
  int feature_width = 2;
  int decoder_hidden = 32;
  int hidden_feature_dim = 16;
  int mapper_hidden = 16;
  bool mapper_uses_hidden = false;
  bool crf_enabled = true;
  double bounds_pad = 0.1;  // meters added around the scene box

  // losses
  double tr = 0.05;
  double lambda_ev = 0.05;
  double lambda_rgb = 5.0;
  double lambda_d = 0.1;
  double lambda_sdf = 5.0;
  double lambda_fs = 0.5;
  std::string event_mode = "known_c";  // known_c | normalized
  double event_c = 0.2;
  bool eta_enabled = true;   // false: drop the event term entirely
  double loss_threshold = -1.0;  // forward-query L_s; <0: adaptive median
  int w_d = 5, w_s = 2;

  // ray sampling
  int n_track = 1024;
  int n_ba = 2048;
  int event_rays_track = 256;
  int event_rays_ba = 256;
  int m_strat = 24, m_surf = 8;
  double near = 0.05;

  // schedule
  int iters_track = 10, iters_ba = 10;
  int ba_interval = 5;
  int keyframe_interval = 5;
  int max_frames = -1;  // <0: all frames

  // learning rates
  double lr_rot = 1e-3, lr_trans = 1e-3;
  double lr_grid = 1e-2, lr_decoder = 1e-3, lr_crf = 1e-3;

  std::uint64_t seed = 1;

  void validate() const;
  EventLossMode parsed_event_mode() const;
  FieldConfig field_config(const Aabb& scene_bounds) const;
  PipelineConfig pipeline_config() const;
};

// Unknown keys and malformed values raise ConfigError naming the key.
RunConfig read_run_config(const std::filesystem::path& path);
void write_run_config(const RunConfig& cfg, const std::filesystem::path& path);

// Diagonal Adam over a flat parameter vector; entries with zero learning
// rate are frozen.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::size_t n, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8);
  void step(ParamVector& params, const ParamVector& grad,
            const std::vector<double>& lr, double lr_scale = 1.0);

 private:
  std::vector<double> m_, v_;
  int t_ = 0;
  double beta1_, beta2_, eps_;
};

// Per-entry learning rates for a pipeline layout: grid/decoder/CRF rates for
// the field part (zero when the field is frozen), split rot/trans rates for
// each trainable pose segment.
std::vector<double> segment_learning_rates(
    const ParamLayout& layout, const RunConfig& cfg, bool field_trainable,
    const std::vector<std::uint8_t>& pose_trainable);

struct FrameLog {
  int frame = 0;
  LossBreakdown losses;
  int prev_id = -1;
  bool diverged = false;
};

// Sequential tracking + periodic joint map/pose refinement over a loaded
// dataset. Deterministic for a fixed config (per-frame RNG streams derived
// from the config seed).
class SlamSystem {
 public:
  SlamSystem(const Dataset& data, const RunConfig& cfg);

  void run();        // process all frames
  bool step();       // process one frame; false when finished
  int frames_total() const { return frame_count_; }
  int frames_done() const { return next_frame_; }

  const Trajectory& trajectory() const { return est_; }
  const std::vector<FrameLog>& logs() const { return logs_; }
  const FieldModel& model() const { return model_; }
  const ParamVector& field_params() const { return field_params_; }
  int rejected_ba_steps() const { return rejected_ba_steps_; }
  int diverged_frames() const { return diverged_frames_; }

  // traj_est.txt (TUM), losses.csv, field.ckpt, run_config.txt
  void write_outputs(const std::filesystem::path& out_dir) const;

 private:
  struct RayBatch {
    std::vector<RgbdRaySpec> rgbd;
    std::vector<Vec2> pixels;
    std::vector<double> sensor_depths;
  };

  RayBatch sample_rgbd_rays(int frame, const PoseSE3& base, int pose_index,
                            int count, std::mt19937_64& rng) const;
  std::vector<double> pixel_losses(const RayBatch& batch,
                                   const PoseSE3& pose) const;
  void append_event_pairs(std::vector<EventPairSpec>& pairs, int frame,
                          int prev, const PoseSE3& pose_cur, int index_cur,
                          const PoseSE3& pose_prev, int index_prev,
                          const RayBatch& batch, int count,
                          std::mt19937_64& rng) const;
  void track(int frame);
  void optimize_map(int frame);
  std::uint64_t frame_time_ns(int frame) const;
  std::mt19937_64 frame_rng(int frame, std::uint64_t salt) const;
  bool event_term_active() const;

  const Dataset* data_;
  RunConfig cfg_;
  FieldModel model_;
  ParamVector field_params_;
  Trajectory est_;
  std::vector<FrameLog> logs_;
  PrevFrameSelector selector_;
  std::vector<int> prev_ids_;
  EventAccumulator accum_;
  double far_ = 0.0;
  int frame_count_ = 0;
  int next_frame_ = 0;
  int rejected_ba_steps_ = 0;
  int diverged_frames_ = 0;
};

void write_loss_csv(const std::vector<FrameLog>& logs,
                    const std::filesystem::path& path);

}  // namespace evislam
