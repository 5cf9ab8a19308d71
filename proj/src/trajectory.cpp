#include "evislam/trajectory.hpp"

#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace evislam {

void Trajectory::validate(const AnalyticScene* scene) const {
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (i > 0) {
      if (poses[i].timestamp <= poses[i - 1].timestamp)
        throw DataError("trajectory: non-increasing timestamp at pose " +
                        std::to_string(i));
      double angle = rotation_angle(poses[i - 1].pose, poses[i].pose);
      if (angle >= 30.0 * M_PI / 180.0)
        throw DataError("trajectory: rotation step >= 30 deg at pose " +
                        std::to_string(i));
    }
    if (scene) {
      const Vec3& p = poses[i].pose.translation();
      if (!scene->bounds.contains(p))
        throw DataError("trajectory: pose " + std::to_string(i) +
                        " outside scene bounds");
      if (scene->sdf(p) <= 0)
        throw DataError("trajectory: pose " + std::to_string(i) +
                        " inside a primitive");
    }
  }
}

PoseSE3 Trajectory::sample(double t) const {
  if (poses.empty()) throw DataError("trajectory: empty");
  if (t <= poses.front().timestamp) return poses.front().pose;
  if (t >= poses.back().timestamp) return poses.back().pose;
  std::size_t hi = 1;
  while (poses[hi].timestamp < t) ++hi;
  const auto& a = poses[hi - 1];
  const auto& b = poses[hi];
  double alpha = (t - a.timestamp) / (b.timestamp - a.timestamp);
  return PoseSE3::interpolate(a.pose, b.pose, alpha);
}

void write_tum(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "# timestamp tx ty tz qx qy qz qw\n";
  out << std::setprecision(17);
  for (const auto& tp : traj.poses) {
    const Vec3& t = tp.pose.translation();
    const Eigen::Quaterniond& q = tp.pose.quaternion();
    out << tp.timestamp << " " << t.x() << " " << t.y() << " " << t.z() << " "
        << q.x() << " " << q.y() << " " << q.z() << " " << q.w() << "\n";
  }
}

Trajectory read_tum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  Trajectory traj;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw DataError("malformed TUM line " + std::to_string(lineno) + " in " +
                      path.string());
    TimedPose tp;
    tp.timestamp = t;
    tp.pose = PoseSE3(Eigen::Quaterniond(qw, qx, qy, qz), Vec3(tx, ty, tz));
    traj.poses.push_back(tp);
  }
  return traj;
}

PoseSE3 look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up).normalized();
  if (x.norm() < 1e-9) x = Vec3::UnitX();
  Vec3 y = z.cross(x).normalized();
  Mat3 R;
  R.col(0) = x;
  R.col(1) = y;
  R.col(2) = z;
  return PoseSE3(R, eye);
}

Trajectory make_orbit_trajectory(const AnalyticScene& scene, int frame_count,
                                 double frame_rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * M_PI);
  double phase = uni(rng);
  double bob_phase = uni(rng);

  const Vec3 center = scene.bounds.center();
  const Vec3 ext = scene.bounds.extent();
  // Radius and bob chosen to clear the furniture in room-style scenes.
  const double radius = 0.22 * std::min(ext.x(), ext.y());
  const double bob = 0.06 * ext.z();

  Trajectory traj;
  traj.frame_rate = frame_rate;
  for (int i = 0; i < frame_count; ++i) {
    double t = i / frame_rate;
    // Slow orbit with a gentle vertical bob and drifting look target.
    double ang = phase + 0.35 * t;
    Vec3 eye = center + Vec3(radius * std::cos(ang), radius * std::sin(ang),
                             bob * std::sin(0.9 * t + bob_phase));
    Vec3 target = center + Vec3(0.25 * std::sin(0.5 * t + phase),
                                0.25 * std::cos(0.4 * t), 0.1 * std::sin(0.7 * t));
    TimedPose tp;
    tp.timestamp = t;
    tp.pose = look_at(eye, target);
    traj.poses.push_back(tp);
  }
  traj.validate(&scene);
  return traj;
}

}  // namespace evislam
