#include <doctest.h>

#include <random>

#include "evislam/diff.hpp"

using namespace evislam;

namespace {

// f(p) = sum_i (p_i - a_i)^2 with exact gradient 2 (p - a).
class QuadraticWorkload final : public Workload {
 public:
  explicit QuadraticWorkload(std::vector<double> target, bool sabotage = false)
      : target_(std::move(target)), sabotage_(sabotage) {
    layout_.add("x", target_.size());
  }
  const ParamLayout& layout() const override { return layout_; }
  double eval(const ParamVector& p) const override {
    double acc = 0;
    for (std::size_t i = 0; i < target_.size(); ++i) {
      double r = p[i] - target_[i];
      acc += r * r;
    }
    return acc;
  }
  double eval_with_grad(const ParamVector& p, ParamVector& g) const override {
    g.set_zero();
    for (std::size_t i = 0; i < target_.size(); ++i)
      g[i] = 2.0 * (p[i] - target_[i]) * (sabotage_ ? 1.5 : 1.0);
    return eval(p);
  }

 private:
  std::vector<double> target_;
  ParamLayout layout_;
  bool sabotage_;
};

class NanGradWorkload final : public Workload {
 public:
  NanGradWorkload() {
    layout_.add("alpha", 2);
    layout_.add("beta", 3);
  }
  const ParamLayout& layout() const override { return layout_; }
  double eval(const ParamVector&) const override { return 1.0; }
  double eval_with_grad(const ParamVector&, ParamVector& g) const override {
    g.set_zero();
    g[3] = std::numeric_limits<double>::quiet_NaN();  // beta offset 1
    return 1.0;
  }

 private:
  ParamLayout layout_;
};

}  // namespace

TEST_CASE("affine forward/backward matches finite differences") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  const std::size_t rows = 4, cols = 5;
  std::vector<double> W(rows * cols), b(rows), x(cols), y(rows);
  for (auto& v : W) v = gauss(rng);
  for (auto& v : b) v = gauss(rng);
  for (auto& v : x) v = gauss(rng);
  diff::affine_forward(W, b, x, y);

  // Oracle: y_r = b_r + sum_c W_rc x_c computed independently.
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += W[r * cols + c] * x[c];
    CHECK(y[r] == doctest::Approx(acc).epsilon(1e-14));
  }

  // Scalar loss L = sum_r w_r y_r; check all gradients by central differences.
  std::vector<double> dy(rows);
  for (auto& v : dy) v = gauss(rng);
  std::vector<double> dW(rows * cols, 0.0), db(rows, 0.0), dx(cols, 0.0);
  diff::affine_backward(W, x, dy, dW, db, dx);
  auto loss = [&](const std::vector<double>& Wp, const std::vector<double>& bp,
                  const std::vector<double>& xp) {
    std::vector<double> yp(rows);
    diff::affine_forward(Wp, bp, xp, yp);
    double acc = 0;
    for (std::size_t r = 0; r < rows; ++r) acc += dy[r] * yp[r];
    return acc;
  };
  const double h = 1e-6;
  for (std::size_t i = 0; i < W.size(); ++i) {
    auto Wp = W;
    Wp[i] += h;
    auto Wm = W;
    Wm[i] -= h;
    double fd = (loss(Wp, b, x) - loss(Wm, b, x)) / (2 * h);
    CHECK(dW[i] == doctest::Approx(fd).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto xp = x;
    xp[i] += h;
    auto xm = x;
    xm[i] -= h;
    double fd = (loss(W, b, xp) - loss(W, b, xm)) / (2 * h);
    CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("activation derivatives from cached outputs") {
  for (double x : {-2.0, -0.5, 0.0, 0.7, 3.0}) {
    double h = 1e-6;
    double s = sigmoid(x);
    double fd = (sigmoid(x + h) - sigmoid(x - h)) / (2 * h);
    CHECK(diff::sigmoid_backward(s, 1.0) == doctest::Approx(fd).epsilon(1e-7));
    double t = std::tanh(x);
    fd = (std::tanh(x + h) - std::tanh(x - h)) / (2 * h);
    CHECK(diff::tanh_backward(t, 1.0) == doctest::Approx(fd).epsilon(1e-7));
    fd = (softplus(x + h) - softplus(x - h)) / (2 * h);
    CHECK(diff::softplus_backward(x, 1.0) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("trilinear weights form a partition of unity and reproduce corners") {
  Vec3 frac(0.3, 0.75, 0.1);
  double w[8];
  diff::trilinear_weights(frac, w);
  double sum = 0;
  for (double v : w) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));

  // A trilinear function must be interpolated exactly.
  auto f = [](double x, double y, double z) {
    return 1.0 + 2 * x - 3 * y + 0.5 * z + x * y - 2 * y * z + 0.25 * x * z +
           1.5 * x * y * z;
  };
  double interp = 0;
  for (int k = 0; k < 8; ++k)
    interp += w[k] * f(k & 1 ? 1 : 0, k & 2 ? 1 : 0, k & 4 ? 1 : 0);
  CHECK(interp ==
        doctest::Approx(f(frac.x(), frac.y(), frac.z())).epsilon(1e-12));

  Vec3 dw[8];
  diff::trilinear_weight_gradients(frac, dw);
  double h = 1e-6;
  for (int axis = 0; axis < 3; ++axis) {
    Vec3 fp = frac, fm = frac;
    fp[axis] += h;
    fm[axis] -= h;
    double wp[8], wm[8];
    diff::trilinear_weights(fp, wp);
    diff::trilinear_weights(fm, wm);
    for (int k = 0; k < 8; ++k)
      CHECK(dw[k][axis] ==
            doctest::Approx((wp[k] - wm[k]) / (2 * h)).epsilon(1e-7));
  }
}

TEST_CASE("finite difference check accepts an exact gradient") {
  QuadraticWorkload w({0.3, -1.2, 0.8, 2.0});
  ParamVector p(w.layout());
  p[0] = 1.0;
  p[1] = 0.5;
  p[2] = -0.2;
  p[3] = 0.0;
  auto report = finite_difference_check(p, w, 1e-5, 4, 0);
  CHECK(report.max_rel_error < 1e-7);
}

TEST_CASE("finite difference check flags a wrong gradient") {
  QuadraticWorkload w({0.3, -1.2, 0.8}, /*sabotage=*/true);
  ParamVector p(w.layout());
  p[0] = 1.0;
  p[1] = 0.5;
  p[2] = -0.2;
  auto report = finite_difference_check(p, w, 1e-5, 3, 0);
  CHECK(report.max_rel_error > 0.2);
  CHECK(report.worst_segment == "x");
}

TEST_CASE("non-finite gradients are reported with segment and offset") {
  NanGradWorkload w;
  ParamVector p(w.layout());
  try {
    evaluate_with_gradient(p, w);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    std::string msg = e.what();
    CHECK(msg.find("beta") != std::string::npos);
    CHECK(msg.find("offset 1") != std::string::npos);
  }
}

TEST_CASE("finite difference check validates its inputs") {
  QuadraticWorkload w({1.0});
  ParamVector p(w.layout());
  CHECK_THROWS_AS(finite_difference_check(p, w, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(finite_difference_check(p, w, -1e-5, 1), ConfigError);
  CHECK_THROWS_AS(finite_difference_check(ParamVector(), w, 1e-5, 1),
                  ConfigError);
}
