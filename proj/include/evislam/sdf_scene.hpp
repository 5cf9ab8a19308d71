#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "evislam/common.hpp"
#include "evislam/image.hpp"
#include "evislam/se3.hpp"

namespace evislam {

// Signed-distance primitive with per-surface albedo. An inverted box encloses
// the camera (room walls).
struct SdfPrimitive {
  enum class Kind { Sphere, Box, Plane };
  Kind kind = Kind::Sphere;
  Vec3 center = Vec3::Zero();     // sphere/box center, point on plane
  double radius = 0.0;            // sphere
  Vec3 half_extent = Vec3::Zero();// box
  Vec3 normal = Vec3::UnitZ();    // plane (solid on the negative side)
  bool inverted = false;          // box only: solid outside
  Vec3 albedo = Vec3(0.7, 0.7, 0.7);

  double sdf(const Vec3& p) const;
};

struct AnalyticScene {
  std::vector<SdfPrimitive> primitives;
  double ambient_level = 1.0;
  Aabb bounds;
  Vec3 light_dir = Vec3(0.4, -0.7, 0.6).normalized();  // towards the light

  double sdf(const Vec3& p) const;
  // Index of the closest primitive (for albedo lookup).
  std::size_t closest_primitive(const Vec3& p) const;
  Vec3 normal(const Vec3& p) const;  // central differences on the union SDF

  // Sphere-traced range along a unit-direction ray; nullopt on miss.
  std::optional<double> trace(const Vec3& origin, const Vec3& dir,
                              double t_max) const;

  Vec3 shade(const Vec3& p) const;  // albedo * lambert * ambient_level
};

AnalyticScene default_room_scene();

void write_scene_json(const AnalyticScene& scene, const std::filesystem::path& path);
AnalyticScene read_scene_json(const std::filesystem::path& path);

// Ground-truth RGBD + event-camera intensity render. Depth is the range along
// the ray; 0 marks a miss.
ImageRgb render_rgb(const AnalyticScene& scene, const PoseSE3& pose,
                    const Intrinsics& K);
ImageGray render_depth(const AnalyticScene& scene, const PoseSE3& pose,
                       const Intrinsics& K);
ImageGray render_intensity(const AnalyticScene& scene, const PoseSE3& pose,
                           const Intrinsics& K);  // luma * 255

}  // namespace evislam
