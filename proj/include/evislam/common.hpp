#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace evislam {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Error taxonomy mirrored by CLI exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Aabb {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
  double diagonal() const { return extent().norm(); }
  Vec3 clamp(const Vec3& p) const {
    return p.cwiseMax(lo).cwiseMin(hi);
  }
};

// Pinhole intrinsics, pixel (u,v) with u along columns.
struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  Vec3 unproject(double u, double v) const {
    return Vec3((u - cx) / fx, (v - cy) / fy, 1.0);
  }
  Vec2 project(const Vec3& p) const {
    return Vec2(fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy);
  }
  bool in_bounds(double u, double v) const {
    return u >= 0 && v >= 0 && u < width && v < height;
  }
};

inline double sigmoid(double x) {
  if (x >= 0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

// Rec.709 linear luma.
inline double luma(double r, double g, double b) {
  return 0.2126 * r + 0.7152 * g + 0.0722 * b;
}
inline double luma(const Vec3& rgb) { return luma(rgb.x(), rgb.y(), rgb.z()); }

}  // namespace evislam
