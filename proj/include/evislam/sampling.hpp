#pragma once

#include <random>

#include "evislam/dataset.hpp"

namespace evislam {

// Chooses the reference frame paired with the current one for event windows.
// Default: a fixed look-back of w_d frames. When the recorded loss of that
// frame exceeds an adaptive threshold (scale x running median of recent frame
// losses), the lowest-loss frame in a +-w_s neighborhood is used instead.
class PrevFrameSelector {
 public:
  PrevFrameSelector(int w_d = 5, int w_s = 2, double fixed_threshold = -1.0,
                    double scale = 1.5, int median_window = 20);

  void record(int frame, double loss);
  // Reference frame for `current` (< current), or -1 when none exists.
  int select(int current) const;
  // Active threshold; +inf until enough history exists.
  double threshold() const;

 private:
  int w_d_, w_s_;
  double fixed_threshold_, scale_;
  int median_window_;
  std::vector<double> losses_;
};

// Loss map over the low-resolution event-aligned plane.
struct MiniPlaneMap {
  Intrinsics mini;
  std::vector<double> values;  // mini.width * mini.height, row-major
};

// Projects per-pixel color losses from the RGBD frame into the mini plane:
// lift (u,v) with its sensor depth, transform through the camera extrinsic,
// project with the mini intrinsics, and splat bilinearly. Pixels without
// depth or projecting outside the plane are skipped.
MiniPlaneMap splat_losses(const std::vector<Vec2>& rgb_pixels,
                          const std::vector<double>& losses,
                          const std::vector<double>& sensor_depths,
                          const CalibData& calib);

// Cell probabilities proportional to the splatted loss (uniform fallback when
// the map is empty or all-zero).
std::vector<double> cell_probabilities(const MiniPlaneMap& map);

// Draws event-plane pixels: multinomial over mini cells, then uniform within
// each cell's event-plane footprint.
std::vector<Vec2> sample_event_pixels(const MiniPlaneMap& map,
                                      const Intrinsics& event_k, int count,
                                      std::mt19937_64& rng);

// Uniform pixel draws over an image plane.
std::vector<Vec2> sample_uniform_pixels(const Intrinsics& k, int count,
                                        std::mt19937_64& rng);

}  // namespace evislam
