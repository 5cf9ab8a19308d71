#pragma once

#include <functional>
#include <random>
#include <span>

#include "evislam/params.hpp"
#include "evislam/se3.hpp"

namespace evislam {

// ---------------------------------------------------------------------------
// Differentiable primitives. Each forward caches whatever its backward needs;
// backward routines accumulate into the given adjoint buffers.
// ---------------------------------------------------------------------------
namespace diff {

// y = W x + b, W row-major (rows x cols), b size rows.
inline void affine_forward(std::span<const double> W, std::span<const double> b,
                           std::span<const double> x, std::span<double> y) {
  std::size_t rows = b.size(), cols = x.size();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* wr = W.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

// Accumulates dW, db, dx from dy.
inline void affine_backward(std::span<const double> W, std::span<const double> x,
                            std::span<const double> dy, std::span<double> dW,
                            std::span<double> db, std::span<double> dx) {
  std::size_t rows = dy.size(), cols = x.size();
  for (std::size_t r = 0; r < rows; ++r) {
    double g = dy[r];
    if (g == 0.0) continue;
    const double* wr = W.data() + r * cols;
    double* dwr = dW.data() + r * cols;
    db[r] += g;
    for (std::size_t c = 0; c < cols; ++c) {
      dwr[c] += g * x[c];
      dx[c] += g * wr[c];
    }
  }
}

// Derivatives from cached forward values.
inline double sigmoid_backward(double y, double dy) { return dy * y * (1.0 - y); }
inline double tanh_backward(double y, double dy) { return dy * (1.0 - y * y); }
// softplus'(x) = sigmoid(x); takes the input, not the output.
inline double softplus_backward(double x, double dy) { return dy * sigmoid(x); }

// Trilinear interpolation over the unit cell. corners[k][f] for k in 0..7
// with bit order (x,y,z): k = ix | iy<<1 | iz<<2. frac in [0,1]^3.
inline void trilinear_weights(const Vec3& frac, double w[8]) {
  double fx = frac.x(), fy = frac.y(), fz = frac.z();
  for (int k = 0; k < 8; ++k) {
    double wx = (k & 1) ? fx : 1.0 - fx;
    double wy = (k & 2) ? fy : 1.0 - fy;
    double wz = (k & 4) ? fz : 1.0 - fz;
    w[k] = wx * wy * wz;
  }
}

// d w_k / d frac, one 3-vector per corner.
inline void trilinear_weight_gradients(const Vec3& frac, Vec3 dw[8]) {
  double fx = frac.x(), fy = frac.y(), fz = frac.z();
  for (int k = 0; k < 8; ++k) {
    double wx = (k & 1) ? fx : 1.0 - fx;
    double wy = (k & 2) ? fy : 1.0 - fy;
    double wz = (k & 4) ? fz : 1.0 - fz;
    double sx = (k & 1) ? 1.0 : -1.0;
    double sy = (k & 2) ? 1.0 : -1.0;
    double sz = (k & 4) ? 1.0 : -1.0;
    dw[k] = Vec3(sx * wy * wz, sy * wx * wz, sz * wx * wy);
  }
}

// Action of a split pose increment on a point:
// y = Exp(phi) R0 x + t0 + tau.  Returns y; jacobians accumulated on demand
// by the pipeline backward passes via so3_left_jacobian.
inline Vec3 se3_split_action(const PoseSE3& base, const Vec3& tau,
                             const Vec3& phi, const Vec3& x) {
  return so3_exp(phi) * (base.rotation() * x) + base.translation() + tau;
}

}  // namespace diff

// ---------------------------------------------------------------------------
// Loss-evaluation closures and gradient checking.
// ---------------------------------------------------------------------------

// A fixed differentiable computation over a flat parameter vector.
class Workload {
 public:
  virtual ~Workload() = default;
  virtual const ParamLayout& layout() const = 0;
  // Forward-only evaluation.
  virtual double eval(const ParamVector& params) const = 0;
  // Forward + exact reverse pass; must reproduce eval() bit-for-bit.
  virtual double eval_with_grad(const ParamVector& params,
                                ParamVector& grad) const = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_segment;
  std::size_t worst_offset = 0;  // offset within the segment
  double fd_step = 0.0;
};

inline std::pair<double, ParamVector> evaluate_with_gradient(
    const ParamVector& params, const Workload& workload) {
  ParamVector grad(workload.layout());
  double loss = workload.eval_with_grad(params, grad);
  if (!std::isfinite(loss)) {
    throw NumericalError("non-finite loss in workload evaluation");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      const auto& seg = workload.layout().segment_of(i);
      throw NumericalError("non-finite gradient in segment '" + seg.name +
                           "' at offset " + std::to_string(i - seg.offset));
    }
  }
  return {loss, std::move(grad)};
}

// Central-difference check over randomly sampled coordinates. denom_floor
// sets the scale below which errors are measured absolutely rather than
// relatively (guards against FD roundoff noise on near-zero gradients).
inline GradCheckReport finite_difference_check(const ParamVector& params,
                                               const Workload& workload,
                                               double step,
                                               std::size_t sample_count,
                                               std::uint64_t seed = 0,
                                               double denom_floor = 1e-8) {
  if (step <= 0) throw ConfigError("finite-difference step must be positive");
  if (params.size() == 0) throw ConfigError("empty parameter space");
  if (sample_count > params.size()) sample_count = params.size();

  auto [loss, grad] = evaluate_with_gradient(params, workload);
  (void)loss;

  std::vector<std::size_t> indices(params.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  if (sample_count < params.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(indices.begin(), indices.end(), rng);
  }

  GradCheckReport report;
  report.fd_step = step;
  ParamVector p = params;
  for (std::size_t s = 0; s < sample_count; ++s) {
    std::size_t i = indices[s];
    double orig = p[i];
    p[i] = orig + step;
    double fp = workload.eval(p);
    p[i] = orig - step;
    double fm = workload.eval(p);
    p[i] = orig;
    double fd = (fp - fm) / (2.0 * step);
    double denom = std::max({std::abs(fd), std::abs(grad[i]), denom_floor});
    double rel = std::abs(fd - grad[i]) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      const auto& seg = workload.layout().segment_of(i);
      report.worst_segment = seg.name;
      report.worst_offset = i - seg.offset;
    }
  }
  return report;
}

}  // namespace evislam
