#pragma once

#include <Eigen/Geometry>

#include "evislam/common.hpp"

namespace evislam {

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// SO(3) exponential map (Rodrigues).
inline Mat3 so3_exp(const Vec3& phi) {
  double th = phi.norm();
  if (th < 1e-12) {
    return Mat3::Identity() + skew(phi);
  }
  Vec3 a = phi / th;
  Mat3 K = skew(a);
  return Mat3::Identity() + std::sin(th) * K + (1.0 - std::cos(th)) * K * K;
}

inline Vec3 so3_log(const Mat3& R) {
  double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  double th = std::acos(c);
  if (th < 1e-9) {
    return 0.5 * Vec3(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  }
  if (th > M_PI - 1e-6) {
    // Near pi: extract axis from the symmetric part.
    Mat3 S = 0.5 * (R + Mat3::Identity());
    Vec3 a(std::sqrt(std::max(0.0, S(0, 0))), std::sqrt(std::max(0.0, S(1, 1))),
           std::sqrt(std::max(0.0, S(2, 2))));
    int k = 0;
    a.cwiseAbs().maxCoeff(&k);
    if (R(2, 1) - R(1, 2) < 0 && k == 0) a.x() = -a.x();
    if (R(0, 2) - R(2, 0) < 0 && k == 1) a.y() = -a.y();
    if (R(1, 0) - R(0, 1) < 0 && k == 2) a.z() = -a.z();
    return th * a.normalized();
  }
  return th / (2.0 * std::sin(th)) *
         Vec3(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
}

// Left Jacobian of SO(3).
inline Mat3 so3_left_jacobian(const Vec3& phi) {
  double th = phi.norm();
  Mat3 K = skew(phi);
  if (th < 1e-6) {
    return Mat3::Identity() + 0.5 * K + (1.0 / 6.0) * K * K;
  }
  double th2 = th * th;
  return Mat3::Identity() + (1.0 - std::cos(th)) / th2 * K +
         (th - std::sin(th)) / (th2 * th) * K * K;
}

// Rigid camera-to-world pose.
class PoseSE3 {
 public:
  PoseSE3() : q_(Eigen::Quaterniond::Identity()), t_(Vec3::Zero()) {}
  PoseSE3(const Eigen::Quaterniond& q, const Vec3& t) : q_(q.normalized()), t_(t) {}
  PoseSE3(const Mat3& R, const Vec3& t) : q_(R), t_(t) { q_.normalize(); }

  static PoseSE3 identity() { return PoseSE3(); }

  // SE(3) exponential, xi = (translation part rho, rotation part phi).
  static PoseSE3 exp(const Eigen::Matrix<double, 6, 1>& xi) {
    Vec3 rho = xi.head<3>();
    Vec3 phi = xi.tail<3>();
    Mat3 R = so3_exp(phi);
    Vec3 t = so3_left_jacobian(phi) * rho;
    return PoseSE3(R, t);
  }

  Eigen::Matrix<double, 6, 1> log() const {
    Vec3 phi = so3_log(rotation());
    Mat3 Jl = so3_left_jacobian(phi);
    Eigen::Matrix<double, 6, 1> xi;
    xi.tail<3>() = phi;
    xi.head<3>() = Jl.inverse() * t_;
    return xi;
  }

  Mat3 rotation() const { return q_.toRotationMatrix(); }
  const Eigen::Quaterniond& quaternion() const { return q_; }
  const Vec3& translation() const { return t_; }
  Vec3& translation() { return t_; }

  PoseSE3 inverse() const {
    Eigen::Quaterniond qi = q_.conjugate();
    return PoseSE3(qi, qi * (-t_));
  }

  PoseSE3 operator*(const PoseSE3& o) const {
    return PoseSE3(q_ * o.q_, q_ * o.t_ + t_);
  }

  Vec3 operator*(const Vec3& p) const { return q_ * p + t_; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation();
    m.topRightCorner<3, 1>() = t_;
    return m;
  }

  // Split increment: rotation left-perturbed, translation additive.
  PoseSE3 retract_split(const Vec3& dt, const Vec3& dphi) const {
    return PoseSE3(Mat3(so3_exp(dphi) * rotation()), t_ + dt);
  }

  static PoseSE3 interpolate(const PoseSE3& a, const PoseSE3& b, double alpha) {
    return PoseSE3(a.q_.slerp(alpha, b.q_), (1.0 - alpha) * a.t_ + alpha * b.t_);
  }

 private:
  Eigen::Quaterniond q_;
  Vec3 t_;
};

// Angular distance in radians.
inline double rotation_angle(const PoseSE3& a, const PoseSE3& b) {
  return so3_log(Mat3(a.rotation().transpose() * b.rotation())).norm();
}

}  // namespace evislam
