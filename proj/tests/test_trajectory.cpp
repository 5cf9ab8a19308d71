#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "evislam/trajectory.hpp"

using namespace evislam;

TEST_CASE("look_at points the optical axis at the target") {
  Vec3 eye(1, 2, 0.5), target(-0.5, 0.3, 0.2);
  PoseSE3 p = look_at(eye, target);
  CHECK((p.translation() - eye).norm() < 1e-12);
  Vec3 z = p.rotation().col(2);
  CHECK(z.dot((target - eye).normalized()) > 1.0 - 1e-10);
  CHECK((p.rotation().transpose() * p.rotation() - Mat3::Identity()).norm() <
        1e-12);
}

TEST_CASE("tum io roundtrip") {
  Trajectory traj;
  traj.frame_rate = 30.0;
  for (int i = 0; i < 5; ++i) {
    TimedPose tp;
    tp.timestamp = i / 30.0;
    tp.pose = PoseSE3(so3_exp(Vec3(0.01 * i, 0.02 * i, -0.005 * i)),
                      Vec3(0.1 * i, -0.05 * i, 0.3));
    traj.poses.push_back(tp);
  }
  auto path = std::filesystem::temp_directory_path() / "evislam_traj.txt";
  write_tum(traj, path);
  Trajectory back = read_tum(path);
  REQUIRE(back.poses.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(back.poses[i].timestamp ==
          doctest::Approx(traj.poses[i].timestamp).epsilon(1e-12));
    CHECK((back.poses[i].pose.translation() -
           traj.poses[i].pose.translation()).norm() < 1e-12);
    CHECK(rotation_angle(back.poses[i].pose, traj.poses[i].pose) < 1e-12);
  }
  std::filesystem::remove(path);
}

TEST_CASE("tum reader rejects malformed lines") {
  auto path = std::filesystem::temp_directory_path() / "evislam_badtraj.txt";
  {
    std::ofstream f(path);
    f << "# comment\n0.0 1 2 3 0 0 0 1\n0.033 not numbers\n";
  }
  CHECK_THROWS_AS(read_tum(path), DataError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_tum("/nonexistent/t.txt"), DataError);
}

TEST_CASE("validation names the offending pose") {
  Trajectory traj;
  for (int i = 0; i < 3; ++i) {
    TimedPose tp;
    tp.timestamp = i * 0.1;
    traj.poses.push_back(tp);
  }
  traj.poses[2].timestamp = 0.05;  // non-increasing
  try {
    traj.validate();
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }

  traj.poses[2].timestamp = 0.2;
  traj.poses[2].pose = PoseSE3(so3_exp(Vec3(0, 1.0, 0)), Vec3::Zero());
  CHECK_THROWS_AS(traj.validate(), DataError);  // >30 degree step
}

TEST_CASE("sampling interpolates between bracketing poses") {
  Trajectory traj;
  TimedPose a, b;
  a.timestamp = 0.0;
  a.pose = PoseSE3(Mat3::Identity(), Vec3(0, 0, 0));
  b.timestamp = 1.0;
  b.pose = PoseSE3(so3_exp(Vec3(0, 0, 0.4)), Vec3(2, 0, 0));
  traj.poses = {a, b};
  PoseSE3 mid = traj.sample(0.5);
  CHECK((mid.translation() - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK(rotation_angle(a.pose, mid) == doctest::Approx(0.2).epsilon(1e-9));
  // Clamped outside the range.
  CHECK((traj.sample(-5.0).translation() - a.pose.translation()).norm() < 1e-12);
  CHECK((traj.sample(9.0).translation() - b.pose.translation()).norm() < 1e-12);
}

TEST_CASE("orbit trajectory is valid, inside the scene, and seeded") {
  AnalyticScene scene = default_room_scene();
  Trajectory t1 = make_orbit_trajectory(scene, 40, 30.0, 7);
  Trajectory t2 = make_orbit_trajectory(scene, 40, 30.0, 7);
  Trajectory t3 = make_orbit_trajectory(scene, 40, 30.0, 8);
  REQUIRE(t1.poses.size() == 40);
  t1.validate(&scene);
  CHECK((t1.poses[5].pose.translation() - t2.poses[5].pose.translation())
            .norm() < 1e-15);
  CHECK((t1.poses[5].pose.translation() - t3.poses[5].pose.translation())
            .norm() > 1e-6);
  // The camera should actually move and rotate between frames.
  double moved = 0.0;
  for (std::size_t i = 1; i < t1.poses.size(); ++i)
    moved += (t1.poses[i].pose.translation() -
              t1.poses[i - 1].pose.translation()).norm();
  CHECK(moved > 0.05);
}
