#pragma once

#include <array>
#include <filesystem>

#include "evislam/diff.hpp"
#include "evislam/params.hpp"

namespace evislam {

struct FieldConfig {
  Aabb bounds;
  std::array<int, 3> level_resolutions = {16, 32, 64};  // cells per axis
  int feature_width = 2;
  int decoder_hidden = 32;
  int hidden_feature_dim = 16;  // h
  int mapper_hidden = 16;
  bool mapper_uses_hidden = false;  // append h to the CRF mapper input
  bool crf_enabled = true;          // false: fixed sigmoid / identity mappers
};

// Dimension caps for stack-allocated per-query scratch.
constexpr int kMaxLevels = 3;
constexpr int kMaxFeatures = 24;    // concatenated grid features
constexpr int kMaxHidden = 64;      // decoder hidden width
constexpr int kMaxDecoderOut = 40;  // h + e(3) + s(1)
constexpr int kMaxMapperIn = 24;
constexpr int kMaxMapperHidden = 32;

constexpr double kRadianceFloor = 1e-6;
// Learned log-exposure bound: ln dt = exposure_span * sigmoid(a) - span/2.
constexpr double kLogExposureSpan = 10.0;

struct FieldQueryCache {
  bool clamped = false;
  Vec3 x = Vec3::Zero();  // clamped query point
  struct LevelCache {
    int ix = 0, iy = 0, iz = 0;
    Vec3 frac = Vec3::Zero();
    Vec3 inv_cell = Vec3::Ones();  // d(frac)/d(x) per axis
  };
  std::array<LevelCache, kMaxLevels> levels;
  std::array<double, kMaxFeatures> features{};
  std::array<double, kMaxHidden> y1{}, y2{};   // tanh activations
  std::array<double, kMaxDecoderOut> out{};    // linear outputs
  std::array<double, 3> e{};                   // softplus + floor
  double s = 0.0;                              // tanh
};

struct MapperCache {
  std::array<double, kMaxMapperIn> input{};
  std::array<double, kMaxMapperHidden> hidden{};  // sigmoid activations
  std::array<double, 3> pre_out{};
  std::array<double, 3> out{};
};

// The shared implicit representation. Parameters live in an external flat
// vector with the layout produced by make_layout(); this class holds only the
// architecture.
class FieldModel {
 public:
  explicit FieldModel(const FieldConfig& config);

  const FieldConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }

  void init_params(ParamVector& params, std::uint64_t seed) const;

  int feature_dim() const { return feature_dim_; }
  int decoder_out_dim() const { return decoder_out_; }
  int mapper_input_dim(bool color) const;

  // Field query: grids -> decoder -> (h, e, s). Differentiable w.r.t. grids,
  // decoder, and x. Out-of-bounds points are clamped and flagged in the cache.
  void query_forward(const double* params, const Vec3& x,
                     FieldQueryCache& cache, std::span<double> h_out) const;

  // Accumulates parameter gradients; dx (optional) receives the gradient
  // w.r.t. the query point.
  void query_backward(const double* params, const FieldQueryCache& cache,
                      std::span<const double> dh, const std::array<double, 3>& de,
                      double ds, double* grad, Vec3* dx) const;

  // CRF mappers. Input is ln(e)+ln_dt per channel (color) or the luma-weighted
  // scalar (luminance), optionally concatenated with h.
  void map_color_forward(const double* params, const std::array<double, 3>& e,
                         double ln_dt, std::span<const double> h,
                         MapperCache& cache) const;
  void map_color_backward(const double* params, const MapperCache& cache,
                          const std::array<double, 3>& e,
                          const std::array<double, 3>& dout, double* grad,
                          std::array<double, 3>* de, double* dln_dt,
                          std::span<double> dh) const;

  double map_luminance_forward(const double* params,
                               const std::array<double, 3>& e, double ln_dt,
                               std::span<const double> h,
                               MapperCache& cache) const;
  void map_luminance_backward(const double* params, const MapperCache& cache,
                              const std::array<double, 3>& e, double dout,
                              double* grad, std::array<double, 3>* de,
                              double* dln_dt, std::span<double> dh) const;

  // Learned log-exposure from the raw scalar; bounded to +-span/2.
  static double log_exposure(double raw) {
    return kLogExposureSpan * sigmoid(raw) - 0.5 * kLogExposureSpan;
  }
  static double log_exposure_backward(double raw, double dout) {
    double s = sigmoid(raw);
    return dout * kLogExposureSpan * s * (1.0 - s);
  }

  // Clamp CRF mapper weight entries (not biases) to be non-negative.
  void project_mapper_weights(ParamVector& params) const;

  // Convenience forward-only TSDF query.
  double tsdf(const ParamVector& params, const Vec3& x) const;

 private:
  struct MapperDims {
    int input = 0, hidden = 0, output = 0;
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;  // offsets within segment
    std::size_t size = 0;
  };

  void mapper_forward(const double* seg, const MapperDims& dims,
                      bool sigmoid_out, MapperCache& cache) const;
  void mapper_backward(const double* seg, const MapperDims& dims,
                       bool sigmoid_out, const MapperCache& cache,
                       std::span<const double> dout, double* grad_seg,
                       std::span<double> din) const;

  FieldConfig config_;
  ParamLayout layout_;
  int feature_dim_ = 0;
  int decoder_out_ = 0;
  MapperDims color_dims_;
  MapperDims lum_dims_;
  std::array<std::size_t, kMaxLevels> grid_g_off_{}, grid_c_off_{};
  std::size_t decoder_off_ = 0, color_off_ = 0, lum_off_ = 0, exposure_off_ = 0;
  // decoder offsets within segment
  std::size_t d_w1_ = 0, d_b1_ = 0, d_w2_ = 0, d_b2_ = 0, d_w3_ = 0, d_b3_ = 0;
};

void save_checkpoint(const FieldModel& model, const ParamVector& params,
                     const std::filesystem::path& path);
std::pair<FieldConfig, std::vector<float>> load_checkpoint_raw(
    const std::filesystem::path& path);
// Rebuilds the model and parameter vector from a checkpoint file.
std::pair<FieldModel, ParamVector> load_checkpoint(
    const std::filesystem::path& path);

}  // namespace evislam
