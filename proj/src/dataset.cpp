#include "evislam/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace evislam {

DegradeMode parse_degrade_mode(const std::string& s) {
  if (s == "normal") return DegradeMode::Normal;
  if (s == "blur") return DegradeMode::Blur;
  if (s == "dark") return DegradeMode::Dark;
  throw ConfigError("unknown degrade mode: " + s);
}

std::string degrade_mode_name(DegradeMode mode) {
  switch (mode) {
    case DegradeMode::Normal: return "normal";
    case DegradeMode::Blur: return "blur";
    case DegradeMode::Dark: return "dark";
  }
  return "normal";
}

CalibData default_calib() {
  CalibData c;
  c.rgbd = {140.0, 140.0, 80.0, 60.0, 160, 120};
  c.event = {100.0, 100.0, 64.0, 48.0, 128, 96};
  c.mini = {100.0 / 8.0, 100.0 / 8.0, 8.0, 6.0, 16, 12};
  // Small nonzero baseline and rotation between the two cameras.
  Vec3 axis = Vec3(0.1, 1.0, 0.05).normalized();
  c.t_ec = PoseSE3(Mat3(so3_exp(axis * (1.5 * M_PI / 180.0))),
                   Vec3(-0.04, 0.008, 0.004));
  return c;
}

namespace {

void write_intrinsics(std::ostream& out, const std::string& prefix,
                      const Intrinsics& K) {
  out << prefix << "_fx=" << K.fx << "\n" << prefix << "_fy=" << K.fy << "\n"
      << prefix << "_cx=" << K.cx << "\n" << prefix << "_cy=" << K.cy << "\n"
      << prefix << "_width=" << K.width << "\n"
      << prefix << "_height=" << K.height << "\n";
}

using KvMap = std::map<std::string, std::string>;

KvMap read_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  KvMap kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("malformed key=value line in " + path.string() + ": " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

double kv_double(const KvMap& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw DataError("missing key: " + key);
  return std::stod(it->second);
}

Intrinsics read_intrinsics(const KvMap& kv, const std::string& prefix) {
  Intrinsics K;
  K.fx = kv_double(kv, prefix + "_fx");
  K.fy = kv_double(kv, prefix + "_fy");
  K.cx = kv_double(kv, prefix + "_cx");
  K.cy = kv_double(kv, prefix + "_cy");
  K.width = int(kv_double(kv, prefix + "_width"));
  K.height = int(kv_double(kv, prefix + "_height"));
  return K;
}

}  // namespace

void write_calib(const CalibData& calib, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << std::setprecision(17);
  write_intrinsics(out, "rgbd", calib.rgbd);
  write_intrinsics(out, "event", calib.event);
  write_intrinsics(out, "mini", calib.mini);
  Mat3 R = calib.t_ec.rotation();
  const Vec3& t = calib.t_ec.translation();
  out << "t_ec=";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out << R(r, c) << " ";
  out << t.x() << " " << t.y() << " " << t.z() << "\n";
  out << "exposure_rgb=" << calib.exposure_rgb << "\n";
  out << "exposure_event=" << calib.exposure_event << "\n";
}

CalibData read_calib(const std::filesystem::path& path) {
  KvMap kv = read_kv_file(path);
  CalibData c;
  c.rgbd = read_intrinsics(kv, "rgbd");
  c.event = read_intrinsics(kv, "event");
  c.mini = read_intrinsics(kv, "mini");
  auto it = kv.find("t_ec");
  if (it == kv.end()) throw DataError("missing key: t_ec");
  std::istringstream ss(it->second);
  Mat3 R;
  Vec3 t;
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col)
      if (!(ss >> R(r, col))) throw DataError("malformed t_ec in " + path.string());
  if (!(ss >> t.x() >> t.y() >> t.z()))
    throw DataError("malformed t_ec in " + path.string());
  c.t_ec = PoseSE3(R, t);
  c.exposure_rgb = kv_double(kv, "exposure_rgb");
  c.exposure_event = kv_double(kv, "exposure_event");
  return c;
}

ImageRgb degrade_dark(const ImageRgb& img, double gamma) {
  if (gamma <= 0) throw ConfigError("dark-mode gamma must be > 0");
  ImageRgb out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    double scaled = std::clamp(double(img.data[i]) * gamma, 0.0, 1.0);
    out.data[i] = float(std::round(scaled * 255.0) / 255.0);
  }
  return out;
}

ImageRgb render_blurred(const AnalyticScene& scene, const Trajectory& traj,
                        double t0, double t1, const Intrinsics& K, int k_sub) {
  ImageRgb acc(K.width, K.height);
  for (int k = 0; k < k_sub; ++k) {
    double alpha = k_sub > 1 ? double(k) / (k_sub - 1) : 0.0;
    PoseSE3 pose = traj.sample(t0 + alpha * (t1 - t0));
    ImageRgb sub = render_rgb(scene, pose, K);
    for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += sub.data[i];
  }
  for (float& v : acc.data) v /= float(k_sub);
  return acc;
}

void make_sequence(const AnalyticScene& scene, const Trajectory& traj,
                   const std::vector<DegradeMode>& modes,
                   const std::filesystem::path& out_dir, const GenParams& params) {
  namespace fs = std::filesystem;
  traj.validate(&scene);
  const auto& calib = params.calib;
  const int n = int(traj.poses.size());
  const double dt = 1.0 / traj.frame_rate;

  // Event stream from undegraded sub-frame intensity renders, shared by all
  // modes of the sequence.
  EventStream events;
  {
    const Intrinsics& Ke = calib.event;
    std::vector<LogFrame> log_frames;
    auto log_of = [&](const ImageGray& img) {
      std::vector<double> levels(img.data.size());
      for (std::size_t i = 0; i < levels.size(); ++i)
        levels[i] = linlog(double(img.data[i]), params.linlog_b);
      return levels;
    };
    for (int i = 0; i < n; ++i) {
      double t_frame = traj.poses[i].timestamp;
      int subs = i == 0 ? 1 : params.k_sub;
      for (int k = 1; k <= subs; ++k) {
        double t = i == 0 ? t_frame
                          : t_frame - dt + dt * double(k) / subs;
        PoseSE3 pose = calib.event_pose(traj.sample(t));
        LogFrame lf;
        lf.t = std::uint64_t(std::llround(t * 1e9));
        lf.log_levels = log_of(render_intensity(scene, pose, Ke));
        log_frames.push_back(std::move(lf));
      }
    }
    PixelMemory memory(Ke.width, Ke.height);
    memory.last_log_level = log_frames.front().log_levels;
    events = generate_events(log_frames, Ke.width, Ke.height, params.threshold_c,
                             memory, params.linlog_b);
  }

  for (DegradeMode mode : modes) {
    fs::path dir = out_dir / degrade_mode_name(mode);
    std::error_code ec;
    fs::create_directories(dir / "frames", ec);
    if (ec) throw DataError("cannot create directory: " + dir.string());

    write_scene_json(scene, dir / "scene.json");
    write_tum(traj, dir / "traj_gt.txt");
    write_calib(calib, dir / "calib.txt");
    write_stream(events, dir / "events.evs");

    for (int i = 0; i < n; ++i) {
      const PoseSE3& pose = traj.poses[i].pose;
      double t_frame = traj.poses[i].timestamp;
      ImageRgb rgb;
      switch (mode) {
        case DegradeMode::Normal:
          rgb = render_rgb(scene, pose, calib.rgbd);
          break;
        case DegradeMode::Blur:
          rgb = i == 0 ? render_rgb(scene, pose, calib.rgbd)
                       : render_blurred(scene, traj, t_frame - dt, t_frame,
                                        calib.rgbd, params.k_sub);
          break;
        case DegradeMode::Dark:
          rgb = degrade_dark(render_rgb(scene, pose, calib.rgbd), params.gamma);
          break;
      }
      ImageGray depth = render_depth(scene, pose, calib.rgbd);
      char name[32];
      std::snprintf(name, sizeof(name), "%06d", i);
      write_pfm(rgb, dir / "frames" / (std::string(name) + ".rgb.pfm"));
      write_pfm(depth, dir / "frames" / (std::string(name) + ".depth.pfm"));
    }
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.scene = read_scene_json(dir / "scene.json");
  ds.traj_gt = read_tum(dir / "traj_gt.txt");
  ds.calib = read_calib(dir / "calib.txt");
  ds.events = read_stream(dir / "events.evs");
  for (int i = 0;; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06d", i);
    auto rgb_path = dir / "frames" / (std::string(name) + ".rgb.pfm");
    if (!std::filesystem::exists(rgb_path)) break;
    ds.rgb.push_back(read_pfm_rgb(rgb_path));
    ds.depth.push_back(read_pfm_gray(dir / "frames" / (std::string(name) + ".depth.pfm")));
  }
  if (ds.rgb.size() != ds.traj_gt.poses.size())
    throw DataError("dataset frame count does not match trajectory: " +
                    dir.string());
  for (const auto& tp : ds.traj_gt.poses) ds.timestamps.push_back(tp.timestamp);
  ds.traj_gt.frame_rate = ds.timestamps.size() > 1
                              ? 1.0 / (ds.timestamps[1] - ds.timestamps[0])
                              : 30.0;
  return ds;
}

}  // namespace evislam
