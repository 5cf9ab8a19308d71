#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evislam/events.hpp"
#include "evislam/image.hpp"
#include "evislam/sdf_scene.hpp"
#include "evislam/trajectory.hpp"

namespace evislam {

enum class DegradeMode { Normal, Blur, Dark };

DegradeMode parse_degrade_mode(const std::string& s);
std::string degrade_mode_name(DegradeMode mode);

// Camera rig: RGBD camera K, event camera K_e, event mini-plane K_m and the
// color-to-event extrinsic (X_e = T_ec * X_c).
struct CalibData {
  Intrinsics rgbd;
  Intrinsics event;
  Intrinsics mini;
  PoseSE3 t_ec;
  double exposure_rgb = 5.21e-5;
  double exposure_event = 5.21e-5;

  PoseSE3 event_pose(const PoseSE3& rgbd_pose) const {
    return rgbd_pose * t_ec.inverse();
  }
};

CalibData default_calib();
void write_calib(const CalibData& calib, const std::filesystem::path& path);
CalibData read_calib(const std::filesystem::path& path);

struct GenParams {
  CalibData calib = default_calib();
  double frame_rate = 30.0;
  int frame_count = 60;
  double threshold_c = 0.2;
  double linlog_b = 20.0;
  int k_sub = 8;        // blur / event sub-frames per frame interval
  double gamma = 0.05;  // dark-mode intensity factor
  std::uint64_t seed = 1;
};

// Dark degradation: scale then quantize to 8 bits.
ImageRgb degrade_dark(const ImageRgb& img, double gamma);

// Average of k_sub renders along the camera path over [t0, t1].
ImageRgb render_blurred(const AnalyticScene& scene, const Trajectory& traj,
                        double t0, double t1, const Intrinsics& K, int k_sub);

// Writes one dataset directory per mode under out_dir:
//   <mode>/scene.json, traj_gt.txt, calib.txt, events.evs,
//   <mode>/frames/%06d.rgb.pfm + %06d.depth.pfm
// The event stream is always generated from undegraded sub-frame renders.
void make_sequence(const AnalyticScene& scene, const Trajectory& traj,
                   const std::vector<DegradeMode>& modes,
                   const std::filesystem::path& out_dir, const GenParams& params);

// In-memory dataset as loaded from one mode directory.
struct Dataset {
  AnalyticScene scene;
  Trajectory traj_gt;
  CalibData calib;
  EventStream events;
  std::vector<ImageRgb> rgb;
  std::vector<ImageGray> depth;
  std::vector<double> timestamps;
};

Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace evislam
