#pragma once

#include <span>
#include <vector>

#include "evislam/common.hpp"

namespace evislam {

enum class EventLossMode { KnownC, Normalized };

struct LossWeights {
  double lambda_ev = 0.05;
  double lambda_rgb = 5.0;
  double lambda_d = 0.1;
  double lambda_sdf = 5.0;
  double lambda_fs = 0.5;
  double loss_threshold = -1.0;  // L_s; negative: adaptive (running median)
  int w_d = 5;                   // default forward-query window
  int w_s = 2;                   // neighborhood half-window

  void validate() const {
    if (lambda_ev < 0 || lambda_rgb < 0 || lambda_d < 0 || lambda_sdf < 0 ||
        lambda_fs < 0)
      throw ConfigError("loss weights must be non-negative");
    if (w_d < 1) throw ConfigError("w_d must be >= 1");
    if (w_s < 0) throw ConfigError("w_s must be >= 0");
  }
};

inline double rms(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc / std::max<std::size_t>(v.size(), 1));
}

// Event reconstruction loss over a batch of (pixel, window) pairs.
// KnownC: MSE(n*C - (l_beta - l_alpha)); Normalized: both batch vectors
// scaled to unit RMS first.
inline double event_loss(std::span<const double> polarity_sums,
                         std::span<const double> lum_beta,
                         std::span<const double> lum_alpha, double threshold_c,
                         EventLossMode mode) {
  const std::size_t n = polarity_sums.size();
  if (n == 0) throw DataError("event_loss: empty batch");
  if (lum_beta.size() != n || lum_alpha.size() != n)
    throw DataError("event_loss: batch size mismatch");
  double scale_a = 1.0, scale_b = 1.0;
  double c = threshold_c;
  if (mode == EventLossMode::Normalized) {
    std::vector<double> diffs(n);
    for (std::size_t i = 0; i < n; ++i) diffs[i] = lum_beta[i] - lum_alpha[i];
    scale_a = std::max(rms(polarity_sums), 1e-12);
    scale_b = std::max(rms(diffs), 1e-12);
    c = 1.0;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = polarity_sums[i] * c / scale_a -
               (lum_beta[i] - lum_alpha[i]) / scale_b;
    acc += r * r;
  }
  return acc / double(n);
}

// Color and depth rendering losses. Color averages over rays and channels
// jointly; depth averages over the valid subset only.
inline std::pair<double, double> rgbd_losses(
    std::span<const Vec3> c_hat, std::span<const Vec3> c_obs,
    std::span<const std::uint8_t> color_valid, std::span<const double> d_hat,
    std::span<const double> d_obs, std::span<const std::uint8_t> depth_valid) {
  double rgb_acc = 0.0;
  std::size_t rgb_n = 0;
  for (std::size_t i = 0; i < c_hat.size(); ++i) {
    if (!color_valid[i]) continue;
    rgb_acc += (c_hat[i] - c_obs[i]).squaredNorm();
    ++rgb_n;
  }
  double d_acc = 0.0;
  std::size_t d_n = 0;
  for (std::size_t i = 0; i < d_hat.size(); ++i) {
    if (!depth_valid[i]) continue;
    double r = d_hat[i] - d_obs[i];
    d_acc += r * r;
    ++d_n;
  }
  double l_rgb = rgb_n > 0 ? rgb_acc / double(3 * rgb_n) : 0.0;
  double l_d = d_n > 0 ? d_acc / double(d_n) : 0.0;
  return {l_rgb, l_d};
}

// Per-ray truncated-SDF supervision terms.
//   near (|d_obs - z| <= tr): mean of (s*tr - (d_obs - z))^2 / tr^2
//   free space (z < d_obs - tr): mean of (s - 1)^2
//   samples beyond d_obs + tr are excluded.
struct SdfRayTerms {
  double near_sum = 0.0;
  int near_count = 0;
  double fs_sum = 0.0;
  int fs_count = 0;
};

inline SdfRayTerms sdf_ray_terms(std::span<const double> depths,
                                 std::span<const double> tsdf, double d_obs,
                                 double tr) {
  SdfRayTerms terms;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    double z = depths[i];
    if (std::abs(d_obs - z) <= tr) {
      double r = tsdf[i] * tr - (d_obs - z);
      terms.near_sum += r * r / (tr * tr);
      ++terms.near_count;
    } else if (z < d_obs - tr) {
      double r = tsdf[i] - 1.0;
      terms.fs_sum += r * r;
      ++terms.fs_count;
    }
  }
  return terms;
}

// Batch reduction per the per-ray-then-per-batch mean convention.
inline std::pair<double, double> sdf_losses(const std::vector<SdfRayTerms>& rays) {
  double sdf_acc = 0.0, fs_acc = 0.0;
  std::size_t sdf_n = 0, fs_n = 0;
  for (const auto& r : rays) {
    if (r.near_count > 0) {
      sdf_acc += r.near_sum / r.near_count;
      ++sdf_n;
    }
    if (r.fs_count > 0) {
      fs_acc += r.fs_sum / r.fs_count;
      ++fs_n;
    }
  }
  return {sdf_n ? sdf_acc / double(sdf_n) : 0.0,
          fs_n ? fs_acc / double(fs_n) : 0.0};
}

}  // namespace evislam
