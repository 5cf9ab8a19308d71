#include "evislam/events.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>

namespace evislam {

int EventStream::accumulate(int u, int v, std::uint64_t t_a,
                            std::uint64_t t_b) const {
  if (u < 0 || v < 0 || u >= width || v >= height)
    throw DataError("accumulate: pixel out of bounds");
  if (t_a > t_b) throw DataError("accumulate: t_a > t_b");
  int sum = 0;
  for (const auto& e : records) {
    if (e.u == u && e.v == v && e.t > t_a && e.t <= t_b) sum += e.p;
  }
  return sum;
}

EventStream generate_events(const std::vector<LogFrame>& log_frames, int width,
                            int height, double threshold_c, PixelMemory& memory,
                            double linlog_b) {
  if (threshold_c <= 0) throw DataError("generate_events: threshold C must be > 0");
  if (memory.width != width || memory.height != height)
    throw DataError("generate_events: memory resolution mismatch");
  const std::size_t npix = std::size_t(width) * height;
  for (const auto& f : log_frames) {
    if (f.log_levels.size() != npix)
      throw DataError("generate_events: frame resolution mismatch");
  }
  for (std::size_t j = 1; j < log_frames.size(); ++j) {
    if (log_frames[j].t <= log_frames[j - 1].t)
      throw DataError("generate_events: timestamps must be strictly increasing");
  }

  EventStream stream;
  stream.width = width;
  stream.height = height;
  stream.threshold_c = threshold_c;
  stream.linlog_b = linlog_b;

  for (std::size_t j = 0; j < log_frames.size(); ++j) {
    const auto& frame = log_frames[j];
    const std::uint64_t t0 = j > 0 ? log_frames[j - 1].t : frame.t;
    const std::uint64_t t1 = frame.t;
    const std::vector<double>* prev_levels =
        j > 0 ? &log_frames[j - 1].log_levels : nullptr;
    for (std::size_t i = 0; i < npix; ++i) {
      double level = frame.log_levels[i];
      double ref = memory.last_log_level[i];
      double delta = level - ref;
      if (std::abs(delta) < threshold_c) continue;
      int count = int(std::abs(delta) / threshold_c);
      double sign = delta > 0 ? 1.0 : -1.0;
      double l0 = prev_levels ? (*prev_levels)[i] : level;
      double span = level - l0;
      for (int k = 1; k <= count; ++k) {
        double crossing = ref + sign * threshold_c * k;
        double frac = span != 0.0 ? (crossing - l0) / span : 1.0;
        frac = std::clamp(frac, 0.0, 1.0);
        std::uint64_t t = t0 + std::uint64_t(frac * double(t1 - t0));
        t = std::max(t, memory.last_event_time[i]);
        EventRecord e;
        e.u = std::uint16_t(i % width);
        e.v = std::uint16_t(i / width);
        e.t = t;
        e.p = std::int8_t(sign > 0 ? 1 : -1);
        stream.records.push_back(e);
        memory.last_event_time[i] = t;
      }
      memory.last_log_level[i] = ref + sign * threshold_c * count;
    }
  }

  std::stable_sort(stream.records.begin(), stream.records.end(),
                   [](const EventRecord& a, const EventRecord& b) {
                     if (a.t != b.t) return a.t < b.t;
                     if (a.v != b.v) return a.v < b.v;
                     return a.u < b.u;
                   });
  return stream;
}

EventAccumulator::EventAccumulator(const EventStream& stream)
    : width_(stream.width), height_(stream.height) {
  const std::size_t npix = std::size_t(width_) * height_;
  times_.resize(npix);
  prefix_.resize(npix);
  for (const auto& e : stream.records) {
    std::size_t i = std::size_t(e.v) * width_ + e.u;
    times_[i].push_back(e.t);
  }
  std::vector<std::size_t> cursor(npix, 0);
  for (std::size_t i = 0; i < npix; ++i) prefix_[i].assign(times_[i].size() + 1, 0);
  for (const auto& e : stream.records) {
    std::size_t i = std::size_t(e.v) * width_ + e.u;
    std::size_t k = cursor[i]++;
    prefix_[i][k + 1] = prefix_[i][k] + e.p;
  }
}

int EventAccumulator::accumulate(int u, int v, std::uint64_t t_a,
                                 std::uint64_t t_b) const {
  if (u < 0 || v < 0 || u >= width_ || v >= height_)
    throw DataError("accumulate: pixel out of bounds");
  if (t_a > t_b) throw DataError("accumulate: t_a > t_b");
  std::size_t i = std::size_t(v) * width_ + u;
  const auto& ts = times_[i];
  auto lo = std::upper_bound(ts.begin(), ts.end(), t_a) - ts.begin();
  auto hi = std::upper_bound(ts.begin(), ts.end(), t_b) - ts.begin();
  return prefix_[i][hi] - prefix_[i][lo];
}

namespace {

constexpr std::uint32_t kMagic = 0x30535645;  // "EVS0"
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderSize = 24;
constexpr std::size_t kRecordSize = 13;

template <typename T>
void put_le(std::uint8_t* dst, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    dst[i] = std::uint8_t(value >> (8 * i));
}

template <typename T>
T get_le(const std::uint8_t* src) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    value |= T(src[i]) << (8 * i);
  return value;
}

}  // namespace

void write_stream(const EventStream& stream, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());

  std::array<std::uint8_t, kHeaderSize> header{};
  put_le<std::uint32_t>(header.data(), kMagic);
  put_le<std::uint16_t>(header.data() + 4, kVersion);
  put_le<std::uint16_t>(header.data() + 6, std::uint16_t(stream.width));
  put_le<std::uint16_t>(header.data() + 8, std::uint16_t(stream.height));
  put_le<std::uint16_t>(header.data() + 10, 0);
  put_le<std::uint32_t>(header.data() + 12,
                        std::uint32_t(std::llround(stream.threshold_c * 1e6)));
  put_le<std::uint32_t>(header.data() + 16,
                        std::uint32_t(std::llround(stream.linlog_b * 1e3)));
  put_le<std::uint32_t>(header.data() + 20, std::uint32_t(stream.records.size()));
  out.write(reinterpret_cast<const char*>(header.data()), header.size());

  std::array<std::uint8_t, kRecordSize> rec{};
  for (const auto& e : stream.records) {
    put_le<std::uint16_t>(rec.data(), e.u);
    put_le<std::uint16_t>(rec.data() + 2, e.v);
    put_le<std::uint64_t>(rec.data() + 4, e.t);
    rec[12] = std::uint8_t(e.p);
    out.write(reinterpret_cast<const char*>(rec.data()), rec.size());
  }
  if (!out) throw DataError("write failed: " + path.string());
}

EventStream read_stream(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());

  std::array<std::uint8_t, kHeaderSize> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (std::size_t(in.gcount()) != kHeaderSize)
    throw DataError("malformed header at byte offset 0: " + path.string());
  if (get_le<std::uint32_t>(header.data()) != kMagic)
    throw DataError("malformed header at byte offset 0: bad magic in " +
                    path.string());
  if (get_le<std::uint16_t>(header.data() + 4) != kVersion)
    throw DataError("malformed header at byte offset 4: unsupported version in " +
                    path.string());

  EventStream stream;
  stream.width = get_le<std::uint16_t>(header.data() + 6);
  stream.height = get_le<std::uint16_t>(header.data() + 8);
  stream.threshold_c = get_le<std::uint32_t>(header.data() + 12) * 1e-6;
  stream.linlog_b = get_le<std::uint32_t>(header.data() + 16) * 1e-3;
  std::uint32_t count = get_le<std::uint32_t>(header.data() + 20);

  stream.records.reserve(count);
  std::array<std::uint8_t, kRecordSize> rec{};
  for (std::uint32_t k = 0; k < count; ++k) {
    in.read(reinterpret_cast<char*>(rec.data()), rec.size());
    if (std::size_t(in.gcount()) != kRecordSize) {
      throw DataError("truncated record at byte offset " +
                      std::to_string(kHeaderSize + std::size_t(k) * kRecordSize) +
                      ": " + path.string());
    }
    EventRecord e;
    e.u = get_le<std::uint16_t>(rec.data());
    e.v = get_le<std::uint16_t>(rec.data() + 2);
    e.t = get_le<std::uint64_t>(rec.data() + 4);
    e.p = std::int8_t(rec[12]);
    if (e.u >= stream.width || e.v >= stream.height || (e.p != 1 && e.p != -1))
      throw DataError("invalid record at byte offset " +
                      std::to_string(kHeaderSize + std::size_t(k) * kRecordSize) +
                      ": " + path.string());
    stream.records.push_back(e);
  }
  return stream;
}

}  // namespace evislam
