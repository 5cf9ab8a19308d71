#pragma once

#include "evislam/losses.hpp"
#include "evislam/render.hpp"

namespace evislam {

struct PipelineConfig {
  double tr = 0.05;
  LossWeights weights;
  EventLossMode event_mode = EventLossMode::KnownC;
  double event_c = 0.2;
};

// One RGBD ray with fixed sample depths and observations. The pose is
// base_pose composed with the tangent of pose segment `pose_index`
// (rotation left-perturbation, additive translation); pose_index < 0 means
// the pose is held fixed.
struct RgbdRaySpec {
  int pose_index = -1;
  PoseSE3 base_pose;
  Vec3 dir_cam = Vec3::UnitZ();  // unit ray direction in the camera frame
  std::vector<double> depths;
  Vec3 obs_color = Vec3::Zero();
  bool has_color = false;
  double obs_depth = 0.0;
  bool depth_valid = false;
};

// Endpoint of an event-window pair, rendered on the event camera.
struct EventRaySpec {
  int pose_index = -1;
  PoseSE3 base_pose;
  Vec3 dir_cam = Vec3::UnitZ();
  std::vector<double> depths;
};

struct EventPairSpec {
  EventRaySpec alpha;  // window start
  EventRaySpec beta;   // window end
  double polarity_sum = 0.0;
};

struct LossBreakdown {
  double l_ev = 0.0, l_rgb = 0.0, l_d = 0.0, l_sdf = 0.0, l_fs = 0.0;
  double total = 0.0;
  int rays_rgb = 0, rays_depth = 0, pairs_event = 0;
  int non_surface_rays = 0;
};

// A full tracking/BA objective over a fixed batch of rays: field query ->
// weighted composition -> CRF mappers -> batch losses, with exact reverse-mode
// gradients for every field segment and the pose tangents.
class PipelineWorkload final : public Workload {
 public:
  PipelineWorkload(const FieldModel& model, PipelineConfig config,
                   std::vector<RgbdRaySpec> rgbd_rays,
                   std::vector<EventPairSpec> event_pairs, int pose_count);

  const ParamLayout& layout() const override { return layout_; }
  double eval(const ParamVector& params) const override;
  double eval_with_grad(const ParamVector& params,
                        ParamVector& grad) const override;

  // Field parameters copied in, pose tangents zeroed.
  ParamVector make_params(const ParamVector& field_params) const;
  // Copies the field portion back out after optimization.
  void extract_field(const ParamVector& params, ParamVector& field_params) const;
  // Pose tangent of segment `index` applied to a base pose.
  PoseSE3 apply_tangent(const ParamVector& params, int index,
                        const PoseSE3& base) const;

  LossBreakdown breakdown(const ParamVector& params) const;

  static std::string pose_segment_name(int index);

 private:
  struct RayForward;
  struct RayCaches;
  struct Pass1;

  void forward_ray(const double* params, const PoseSE3& base, const Vec3& tau,
                   const Vec3& phi, const Vec3& dir_cam,
                   const std::vector<double>& depths, bool want_color,
                   bool want_lum, RayForward& out, RayCaches* caches) const;
  void backward_ray(const double* params, const RayForward& fwd,
                    const RayCaches& caches, const std::vector<double>& depths,
                    bool want_color, bool want_lum, const Vec3& dc, double dl,
                    double dd, const std::vector<double>& ds_extra,
                    const PoseSE3& base, const Vec3& phi, const Vec3& dir_cam,
                    int pose_index, double* grad) const;
  Pass1 run_pass1(const ParamVector& params) const;
  std::pair<Vec3, Vec3> read_tangent(const ParamVector& params,
                                     int pose_index) const;

  const FieldModel& model_;
  PipelineConfig config_;
  std::vector<RgbdRaySpec> rgbd_rays_;
  std::vector<EventPairSpec> event_pairs_;
  int pose_count_ = 0;
  ParamLayout layout_;
  std::size_t field_size_ = 0;
  std::size_t pose_offset_ = 0;
  std::size_t exposure_offset_ = 0;
};

}  // namespace evislam
