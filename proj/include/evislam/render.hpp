#pragma once

#include <random>

#include "evislam/field.hpp"
#include "evislam/se3.hpp"

namespace evislam {

enum class CameraId { Rgbd, Event };

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 dir = Vec3::UnitZ();  // unit, world frame
  Vec2 pixel = Vec2::Zero();
  CameraId camera_id = CameraId::Rgbd;
};

std::vector<Ray> make_rays(const PoseSE3& pose, const Intrinsics& K,
                           const std::vector<Vec2>& pixels,
                           CameraId camera_id = CameraId::Rgbd);
Ray make_ray(const PoseSE3& pose, const Intrinsics& K, const Vec2& pixel,
             CameraId camera_id = CameraId::Rgbd);

// Stratified samples over [near, far] plus surface-guided samples around a
// valid sensor depth; returned ascending.
std::vector<double> sample_ray(double near, double far, double sensor_depth,
                               bool depth_valid, double tr, int m_strat,
                               int m_surf, std::mt19937_64& rng);

// Bell-shaped TSDF-to-weight conversion: sigma(s/tr) * sigma(-s/tr).
std::vector<double> bell_weights(const std::vector<double>& tsdf, double tr);
inline double bell_weight(double s, double tr) {
  return sigmoid(s / tr) * sigmoid(-s / tr);
}

struct RenderBundle {
  Vec3 c_hat = Vec3::Zero();
  double l_hat = 0.0;
  double d_hat = 0.0;
  std::vector<double> weights;  // normalized
  bool non_surface = false;     // all raw weights below threshold
};

constexpr double kWeightFloor = 1e-12;

// Forward-only per-ray rendering through the field and CRF mappers.
RenderBundle render_ray(const FieldModel& model, const ParamVector& params,
                        const Ray& ray, const std::vector<double>& depths,
                        double tr, bool want_color = true,
                        bool want_luminance = true);

}  // namespace evislam
