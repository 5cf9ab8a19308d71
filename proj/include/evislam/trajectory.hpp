#pragma once

#include <filesystem>
#include <vector>

#include "evislam/sdf_scene.hpp"
#include "evislam/se3.hpp"

namespace evislam {

struct TimedPose {
  double timestamp = 0.0;  // seconds
  PoseSE3 pose;
};

struct Trajectory {
  std::vector<TimedPose> poses;
  double frame_rate = 30.0;

  // Throws DataError naming the offending pose index.
  void validate(const AnalyticScene* scene = nullptr) const;

  // Slerp/lerp between bracketing poses, clamped at the ends.
  PoseSE3 sample(double t) const;
};

// TUM format: "t tx ty tz qx qy qz qw" per line, '#' comments.
void write_tum(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_tum(const std::filesystem::path& path);

// Smooth orbit inside the scene looking at its center; deterministic in the
// seed (used for phase offsets only).
Trajectory make_orbit_trajectory(const AnalyticScene& scene, int frame_count,
                                 double frame_rate, std::uint64_t seed);

// Camera whose z axis looks from eye towards target, world-up y-down pinhole.
PoseSE3 look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3(0, 0, 1));

}  // namespace evislam
