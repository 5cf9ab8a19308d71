#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "evislam/common.hpp"

namespace evislam {

// Asynchronous polarity event, timestamps in nanoseconds.
struct EventRecord {
  std::uint16_t u = 0;
  std::uint16_t v = 0;
  std::uint64_t t = 0;
  std::int8_t p = 0;  // +1 or -1

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct EventStream {
  std::vector<EventRecord> records;
  int width = 0;
  int height = 0;
  double threshold_c = 0.2;  // contrast threshold, log-intensity units
  double linlog_b = 20.0;    // linear region threshold, intensity units

  // Signed polarity sum over events of one pixel with t_a < t <= t_b.
  int accumulate(int u, int v, std::uint64_t t_a, std::uint64_t t_b) const;
};

// Per-pixel reference level and last event time.
struct PixelMemory {
  int width = 0;
  int height = 0;
  std::vector<double> last_log_level;
  std::vector<std::uint64_t> last_event_time;

  PixelMemory() = default;
  PixelMemory(int w, int h)
      : width(w), height(h), last_log_level(std::size_t(w) * h, 0.0),
        last_event_time(std::size_t(w) * h, 0) {}

  double& level(int u, int v) { return last_log_level[std::size_t(v) * width + u]; }
  double level(int u, int v) const { return last_log_level[std::size_t(v) * width + u]; }
};

// Piecewise lin-log map: linear below B, logarithmic above, continuous at B.
inline double linlog(double intensity, double b) {
  if (intensity < 0) throw DataError("linlog: negative intensity");
  if (intensity < b) return intensity * std::log(b) / b;
  return std::log(intensity);
}

struct LogFrame {
  std::uint64_t t = 0;
  std::vector<double> log_levels;  // row-major, width*height
};

// Threshold-crossing event generation with persistent per-pixel memory.
// Event timestamps are linearly interpolated between bracketing frames.
EventStream generate_events(const std::vector<LogFrame>& log_frames, int width,
                            int height, double threshold_c, PixelMemory& memory,
                            double linlog_b = 20.0);

// Fast repeated accumulation: per-pixel prefix sums over a fixed stream.
class EventAccumulator {
 public:
  explicit EventAccumulator(const EventStream& stream);
  int accumulate(int u, int v, std::uint64_t t_a, std::uint64_t t_b) const;

 private:
  int width_, height_;
  std::vector<std::vector<std::uint64_t>> times_;
  std::vector<std::vector<int>> prefix_;  // prefix_[i][k] = sum of first k polarities
};

// Binary .evs stream file, little-endian, fixed 24-byte header.
void write_stream(const EventStream& stream, const std::filesystem::path& path);
EventStream read_stream(const std::filesystem::path& path);

}  // namespace evislam
