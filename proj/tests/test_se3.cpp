#include <doctest.h>

#include <random>

#include "evislam/se3.hpp"

using namespace evislam;

TEST_CASE("so3 exp/log roundtrip") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    Vec3 phi(uni(rng), uni(rng), uni(rng));
    phi *= 2.5;  // cover angles up to ~4.3 rad, below pi after normalization?
    if (phi.norm() > 3.1) phi *= 3.0 / phi.norm();
    Vec3 back = so3_log(so3_exp(phi));
    CHECK((back - phi).norm() < 1e-9);
  }
  CHECK(so3_exp(Vec3::Zero()).isApprox(Mat3::Identity()));
}

TEST_CASE("so3 exp gives a rotation matrix") {
  Vec3 phi(0.3, -0.8, 0.5);
  Mat3 R = so3_exp(phi);
  CHECK((R.transpose() * R - Mat3::Identity()).norm() < 1e-12);
  CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("left jacobian matches finite differences of exp") {
  // Exp(phi + d) ~ Exp(Jl(phi) d) * Exp(phi) for small d.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec3 phi(uni(rng), uni(rng), uni(rng));
    Mat3 Jl = so3_left_jacobian(phi);
    for (int k = 0; k < 3; ++k) {
      double h = 1e-6;
      Vec3 d = h * Vec3::Unit(k);
      Mat3 lhs = so3_exp(phi + d);
      Mat3 rhs = so3_exp(Jl * d) * so3_exp(phi);
      CHECK((lhs - rhs).norm() < 1e-10);
    }
  }
}

TEST_CASE("pose compose and inverse") {
  PoseSE3 a(so3_exp(Vec3(0.1, 0.2, -0.3)), Vec3(1, 2, 3));
  PoseSE3 b(so3_exp(Vec3(-0.4, 0.0, 0.2)), Vec3(-1, 0.5, 0));
  PoseSE3 id = a * a.inverse();
  CHECK(id.translation().norm() < 1e-12);
  CHECK((id.rotation() - Mat3::Identity()).norm() < 1e-12);

  Vec3 x(0.3, -0.7, 1.1);
  Vec3 via = a.rotation() * (b.rotation() * x + b.translation()) + a.translation();
  PoseSE3 ab = a * b;
  CHECK((ab.rotation() * x + ab.translation() - via).norm() < 1e-12);
}

TEST_CASE("se3 exp/log roundtrip") {
  Eigen::Matrix<double, 6, 1> xi;
  xi << 0.2, -0.1, 0.3, 0.4, -0.2, 0.1;
  PoseSE3 p = PoseSE3::exp(xi);
  CHECK((p.log() - xi).norm() < 1e-9);
}

TEST_CASE("split retraction applies left rotation and additive translation") {
  PoseSE3 base(so3_exp(Vec3(0.2, -0.1, 0.4)), Vec3(0.5, -0.2, 1.0));
  Vec3 dt(0.01, -0.02, 0.03), dphi(0.002, 0.001, -0.004);
  PoseSE3 r = base.retract_split(dt, dphi);
  CHECK((r.translation() - (base.translation() + dt)).norm() < 1e-14);
  CHECK((r.rotation() - so3_exp(dphi) * base.rotation()).norm() < 1e-12);
}

TEST_CASE("rotation angle between poses") {
  PoseSE3 a;
  PoseSE3 b(so3_exp(Vec3(0, 0.25, 0)), Vec3::Zero());
  CHECK(rotation_angle(a, b) == doctest::Approx(0.25).epsilon(1e-10));
}
