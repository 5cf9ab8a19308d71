#include "evislam/sampling.hpp"

#include <algorithm>

namespace evislam {

PrevFrameSelector::PrevFrameSelector(int w_d, int w_s, double fixed_threshold,
                                     double scale, int median_window)
    : w_d_(w_d), w_s_(w_s), fixed_threshold_(fixed_threshold), scale_(scale),
      median_window_(median_window) {
  if (w_d_ < 1) throw ConfigError("prev-frame selector: w_d must be >= 1");
  if (w_s_ < 0) throw ConfigError("prev-frame selector: w_s must be >= 0");
  if (median_window_ < 1)
    throw ConfigError("prev-frame selector: median window must be >= 1");
}

void PrevFrameSelector::record(int frame, double loss) {
  if (frame != int(losses_.size()))
    throw DataError("prev-frame selector: losses must be recorded in order");
  losses_.push_back(loss);
}

double PrevFrameSelector::threshold() const {
  if (fixed_threshold_ > 0) return fixed_threshold_;
  if (losses_.empty()) return std::numeric_limits<double>::infinity();
  std::size_t n = std::min<std::size_t>(losses_.size(), median_window_);
  std::vector<double> recent(losses_.end() - n, losses_.end());
  std::nth_element(recent.begin(), recent.begin() + n / 2, recent.end());
  double median = recent[n / 2];
  if (n % 2 == 0) {
    double lower = *std::max_element(recent.begin(), recent.begin() + n / 2);
    median = 0.5 * (median + lower);
  }
  return scale_ * median;
}

int PrevFrameSelector::select(int current) const {
  if (current <= 0) return -1;
  int candidate = std::clamp(current - w_d_, 0, current - 1);
  if (candidate >= int(losses_.size()))
    throw DataError("prev-frame selector: candidate frame has no recorded loss");
  if (losses_[candidate] <= threshold()) return candidate;
  int lo = std::max(current - w_d_ - w_s_, 0);
  int hi = std::min(current - w_d_ + w_s_, current - 1);
  int best = candidate;
  for (int j = lo; j <= hi; ++j)
    if (losses_[j] < losses_[best]) best = j;
  return best;
}

MiniPlaneMap splat_losses(const std::vector<Vec2>& rgb_pixels,
                          const std::vector<double>& losses,
                          const std::vector<double>& sensor_depths,
                          const CalibData& calib) {
  if (rgb_pixels.size() != losses.size() ||
      rgb_pixels.size() != sensor_depths.size())
    throw DataError("splat_losses: input size mismatch");
  MiniPlaneMap map;
  map.mini = calib.mini;
  map.values.assign(std::size_t(calib.mini.width) * calib.mini.height, 0.0);
  const Mat3 R = calib.t_ec.rotation();
  const Vec3& t = calib.t_ec.translation();
  for (std::size_t i = 0; i < rgb_pixels.size(); ++i) {
    double z = sensor_depths[i];
    if (z <= 0 || losses[i] <= 0) continue;
    Vec3 xc = z * calib.rgbd.unproject(rgb_pixels[i].x(), rgb_pixels[i].y());
    Vec3 xe = R * xc + t;
    if (xe.z() <= 1e-9) continue;
    Vec2 m = calib.mini.project(xe);
    // Bilinear splat over the four enclosing cells.
    int u0 = int(std::floor(m.x())), v0 = int(std::floor(m.y()));
    double fu = m.x() - u0, fv = m.y() - v0;
    const double w[4] = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv,
                         fu * fv};
    const int du[4] = {0, 1, 0, 1}, dv[4] = {0, 0, 1, 1};
    for (int k = 0; k < 4; ++k) {
      int u = u0 + du[k], v = v0 + dv[k];
      if (u < 0 || v < 0 || u >= calib.mini.width || v >= calib.mini.height)
        continue;
      map.values[std::size_t(v) * calib.mini.width + u] += w[k] * losses[i];
    }
  }
  return map;
}

std::vector<double> cell_probabilities(const MiniPlaneMap& map) {
  double total = 0.0;
  for (double v : map.values) total += v;
  std::vector<double> probs(map.values.size());
  if (total <= 0) {
    std::fill(probs.begin(), probs.end(), 1.0 / double(probs.size()));
    return probs;
  }
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = map.values[i] / total;
  return probs;
}

std::vector<Vec2> sample_event_pixels(const MiniPlaneMap& map,
                                      const Intrinsics& event_k, int count,
                                      std::mt19937_64& rng) {
  if (count <= 0) return {};
  if (event_k.width % map.mini.width != 0 ||
      event_k.height % map.mini.height != 0)
    throw ConfigError("event plane must tile the mini plane exactly");
  const int su = event_k.width / map.mini.width;
  const int sv = event_k.height / map.mini.height;
  auto probs = cell_probabilities(map);
  std::discrete_distribution<int> cell(probs.begin(), probs.end());
  std::uniform_int_distribution<int> ju(0, su - 1), jv(0, sv - 1);
  std::vector<Vec2> pixels;
  pixels.reserve(count);
  for (int i = 0; i < count; ++i) {
    int c = cell(rng);
    int cu = c % map.mini.width, cv = c / map.mini.width;
    pixels.emplace_back(cu * su + ju(rng), cv * sv + jv(rng));
  }
  return pixels;
}

std::vector<Vec2> sample_uniform_pixels(const Intrinsics& k, int count,
                                        std::mt19937_64& rng) {
  std::uniform_int_distribution<int> du(0, k.width - 1), dv(0, k.height - 1);
  std::vector<Vec2> pixels;
  pixels.reserve(std::max(count, 0));
  for (int i = 0; i < count; ++i) pixels.emplace_back(du(rng), dv(rng));
  return pixels;
}

}  // namespace evislam
