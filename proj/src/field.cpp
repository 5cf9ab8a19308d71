#include "evislam/field.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <random>

namespace evislam {

namespace {

std::size_t grid_vertices(int res) {
  return std::size_t(res + 1) * (res + 1) * (res + 1);
}

}  // namespace

FieldModel::FieldModel(const FieldConfig& config) : config_(config) {
  const int levels = int(config_.level_resolutions.size());
  const int F = config_.feature_width;
  feature_dim_ = levels * F * 2;
  decoder_out_ = config_.hidden_feature_dim + 4;

  if (levels > kMaxLevels || feature_dim_ > kMaxFeatures ||
      config_.decoder_hidden > kMaxHidden || decoder_out_ > kMaxDecoderOut ||
      config_.mapper_hidden > kMaxMapperHidden)
    throw ConfigError("field configuration exceeds compiled dimension caps");

  for (int l = 0; l < levels; ++l) {
    grid_g_off_[l] = layout_.total_size();
    layout_.add("grid_g" + std::to_string(l),
                grid_vertices(config_.level_resolutions[l]) * F);
  }
  for (int l = 0; l < levels; ++l) {
    grid_c_off_[l] = layout_.total_size();
    layout_.add("grid_c" + std::to_string(l),
                grid_vertices(config_.level_resolutions[l]) * F);
  }

  const int H = config_.decoder_hidden;
  d_w1_ = 0;
  d_b1_ = d_w1_ + std::size_t(H) * feature_dim_;
  d_w2_ = d_b1_ + H;
  d_b2_ = d_w2_ + std::size_t(H) * H;
  d_w3_ = d_b2_ + H;
  d_b3_ = d_w3_ + std::size_t(decoder_out_) * H;
  decoder_off_ = layout_.total_size();
  layout_.add("decoder", d_b3_ + decoder_out_);

  auto make_mapper = [&](int input, int output) {
    MapperDims d;
    d.input = input;
    d.hidden = config_.mapper_hidden;
    d.output = output;
    d.w1 = 0;
    d.b1 = d.w1 + std::size_t(d.hidden) * input;
    d.w2 = d.b1 + d.hidden;
    d.b2 = d.w2 + std::size_t(output) * d.hidden;
    d.size = d.b2 + output;
    return d;
  };
  color_dims_ = make_mapper(mapper_input_dim(true), 3);
  lum_dims_ = make_mapper(mapper_input_dim(false), 1);
  if (color_dims_.input > kMaxMapperIn || lum_dims_.input > kMaxMapperIn)
    throw ConfigError("mapper input exceeds compiled dimension caps");

  color_off_ = layout_.total_size();
  layout_.add("crf_color", color_dims_.size);
  lum_off_ = layout_.total_size();
  layout_.add("crf_lum", lum_dims_.size);
  exposure_off_ = layout_.total_size();
  layout_.add("exposure", 2);
}

int FieldModel::mapper_input_dim(bool color) const {
  int base = color ? 3 : 1;
  return base + (config_.mapper_uses_hidden ? config_.hidden_feature_dim : 0);
}

void FieldModel::init_params(ParamVector& params, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  for (const auto& seg : layout_.segments()) {
    auto span = params.segment(seg.name);
    if (seg.name.rfind("grid_", 0) == 0) {
      for (double& v : span) v = 0.01 * gauss(rng);
    }
  }

  // Decoder: Xavier-uniform weights, zero biases, positive radiance bias.
  {
    auto d = params.segment("decoder");
    const int H = config_.decoder_hidden;
    auto fill = [&](std::size_t off, int rows, int cols) {
      double a = std::sqrt(6.0 / (rows + cols));
      for (int i = 0; i < rows * cols; ++i) d[off + i] = a * uni(rng);
    };
    fill(d_w1_, H, feature_dim_);
    fill(d_w2_, H, H);
    fill(d_w3_, decoder_out_, H);
    for (int i = 0; i < H; ++i) d[d_b1_ + i] = 0.0;
    for (int i = 0; i < H; ++i) d[d_b2_ + i] = 0.0;
    for (int i = 0; i < decoder_out_; ++i) d[d_b3_ + i] = 0.0;
    // softplus(0.5413) ~= 1.0: unit radiance at start
    for (int c = 0; c < 3; ++c) d[d_b3_ + config_.hidden_feature_dim + c] = 0.5413;
  }

  // Monotone CRF mappers: non-negative weights, output centered at 0.5
  // (color) / 0 (luminance) for zero input.
  auto init_mapper = [&](const std::string& name, const MapperDims& dims,
                         int radiance_inputs, double gain) {
    auto m = params.segment(name);
    for (int k = 0; k < dims.hidden; ++k) {
      for (int i = 0; i < dims.input; ++i) {
        double w = i < radiance_inputs ? 1.0 + 0.05 * uni(rng) : 0.0;
        m[dims.w1 + std::size_t(k) * dims.input + i] = w;
      }
      m[dims.b1 + k] = -3.0 + 6.0 * (k + 0.5) / dims.hidden;
    }
    for (int o = 0; o < dims.output; ++o) {
      double acc = 0.0;
      for (int k = 0; k < dims.hidden; ++k) {
        double w = gain / dims.hidden * (1.0 + 0.05 * uni(rng));
        m[dims.w2 + std::size_t(o) * dims.hidden + k] = w;
        acc += w * sigmoid(m[dims.b1 + k]);
      }
      m[dims.b2 + o] = -acc;  // zero pre-activation at zero input
    }
  };
  init_mapper("crf_color", color_dims_, 3, 6.0);
  init_mapper("crf_lum", lum_dims_, 1, 5.0);

  auto exp_seg = params.segment("exposure");
  exp_seg[0] = 0.0;
  exp_seg[1] = 0.0;
}

void FieldModel::query_forward(const double* params, const Vec3& x,
                               FieldQueryCache& cache,
                               std::span<double> h_out) const {
  const auto& b = config_.bounds;
  Vec3 xc = b.clamp(x);
  cache.clamped = (xc - x).norm() > 0;
  cache.x = xc;

  const int levels = int(config_.level_resolutions.size());
  const int F = config_.feature_width;
  const Vec3 ext = b.extent();

  int fi = 0;
  for (int fam = 0; fam < 2; ++fam) {
    for (int l = 0; l < levels; ++l) {
      const int res = config_.level_resolutions[l];
      auto& lc = cache.levels[l];
      if (fam == 0) {
        for (int a = 0; a < 3; ++a) {
          double u = (xc[a] - b.lo[a]) / ext[a] * res;
          int i = std::min(int(u), res - 1);
          i = std::max(i, 0);
          (a == 0 ? lc.ix : a == 1 ? lc.iy : lc.iz) = i;
          lc.frac[a] = u - i;
          lc.inv_cell[a] = res / ext[a];
        }
      }
      double w[8];
      diff::trilinear_weights(lc.frac, w);
      const double* grid =
          params + (fam == 0 ? grid_g_off_[l] : grid_c_off_[l]);
      const int n = res + 1;
      for (int f = 0; f < F; ++f) cache.features[fi + f] = 0.0;
      for (int k = 0; k < 8; ++k) {
        int ix = lc.ix + (k & 1);
        int iy = lc.iy + ((k >> 1) & 1);
        int iz = lc.iz + ((k >> 2) & 1);
        const double* vtx = grid + (std::size_t(iz) * n * n + std::size_t(iy) * n + ix) * F;
        for (int f = 0; f < F; ++f) cache.features[fi + f] += w[k] * vtx[f];
      }
      fi += F;
    }
  }

  const int H = config_.decoder_hidden;
  const double* d = params + decoder_off_;
  diff::affine_forward({d + d_w1_, std::size_t(H) * feature_dim_},
                       {d + d_b1_, std::size_t(H)},
                       {cache.features.data(), std::size_t(feature_dim_)},
                       {cache.y1.data(), std::size_t(H)});
  for (int i = 0; i < H; ++i) cache.y1[i] = std::tanh(cache.y1[i]);
  diff::affine_forward({d + d_w2_, std::size_t(H) * H}, {d + d_b2_, std::size_t(H)},
                       {cache.y1.data(), std::size_t(H)},
                       {cache.y2.data(), std::size_t(H)});
  for (int i = 0; i < H; ++i) cache.y2[i] = std::tanh(cache.y2[i]);
  diff::affine_forward({d + d_w3_, std::size_t(decoder_out_) * H},
                       {d + d_b3_, std::size_t(decoder_out_)},
                       {cache.y2.data(), std::size_t(H)},
                       {cache.out.data(), std::size_t(decoder_out_)});

  const int hd = config_.hidden_feature_dim;
  for (int c = 0; c < 3; ++c)
    cache.e[c] = softplus(cache.out[hd + c]) + kRadianceFloor;
  cache.s = std::tanh(cache.out[hd + 3]);
  if (!h_out.empty()) {
    for (int i = 0; i < hd; ++i) h_out[i] = cache.out[i];
  }
}

void FieldModel::query_backward(const double* params,
                                const FieldQueryCache& cache,
                                std::span<const double> dh,
                                const std::array<double, 3>& de, double ds,
                                double* grad, Vec3* dx) const {
  const int H = config_.decoder_hidden;
  const int hd = config_.hidden_feature_dim;

  std::array<double, kMaxDecoderOut> dout{};
  for (int i = 0; i < hd && i < int(dh.size()); ++i) dout[i] = dh[i];
  for (int c = 0; c < 3; ++c)
    dout[hd + c] = diff::softplus_backward(cache.out[hd + c], de[c]);
  dout[hd + 3] = diff::tanh_backward(cache.s, ds);

  const double* d = params + decoder_off_;
  double* gd = grad + decoder_off_;

  std::array<double, kMaxHidden> dy2{}, dy1{};
  std::array<double, kMaxFeatures> dfeat{};
  diff::affine_backward({d + d_w3_, std::size_t(decoder_out_) * H},
                        {cache.y2.data(), std::size_t(H)},
                        {dout.data(), std::size_t(decoder_out_)},
                        {gd + d_w3_, std::size_t(decoder_out_) * H},
                        {gd + d_b3_, std::size_t(decoder_out_)},
                        {dy2.data(), std::size_t(H)});
  for (int i = 0; i < H; ++i) dy2[i] = diff::tanh_backward(cache.y2[i], dy2[i]);
  diff::affine_backward({d + d_w2_, std::size_t(H) * H},
                        {cache.y1.data(), std::size_t(H)},
                        {dy2.data(), std::size_t(H)},
                        {gd + d_w2_, std::size_t(H) * H},
                        {gd + d_b2_, std::size_t(H)},
                        {dy1.data(), std::size_t(H)});
  for (int i = 0; i < H; ++i) dy1[i] = diff::tanh_backward(cache.y1[i], dy1[i]);
  diff::affine_backward({d + d_w1_, std::size_t(H) * feature_dim_},
                        {cache.features.data(), std::size_t(feature_dim_)},
                        {dy1.data(), std::size_t(H)},
                        {gd + d_w1_, std::size_t(H) * feature_dim_},
                        {gd + d_b1_, std::size_t(H)},
                        {dfeat.data(), std::size_t(feature_dim_)});

  // Scatter feature adjoints into grids; accumulate position gradient.
  const int levels = int(config_.level_resolutions.size());
  const int F = config_.feature_width;
  int fi = 0;
  Vec3 dxl = Vec3::Zero();
  for (int fam = 0; fam < 2; ++fam) {
    for (int l = 0; l < levels; ++l) {
      const int res = config_.level_resolutions[l];
      const auto& lc = cache.levels[l];
      double w[8];
      Vec3 dw[8];
      diff::trilinear_weights(lc.frac, w);
      if (dx) diff::trilinear_weight_gradients(lc.frac, dw);
      const std::size_t off = fam == 0 ? grid_g_off_[l] : grid_c_off_[l];
      const double* grid = params + off;
      double* ggrid = grad + off;
      const int n = res + 1;
      for (int k = 0; k < 8; ++k) {
        int ix = lc.ix + (k & 1);
        int iy = lc.iy + ((k >> 1) & 1);
        int iz = lc.iz + ((k >> 2) & 1);
        std::size_t vi = (std::size_t(iz) * n * n + std::size_t(iy) * n + ix) * F;
        for (int f = 0; f < F; ++f) {
          double g = dfeat[fi + f];
          ggrid[vi + f] += g * w[k];
          if (dx) dxl += g * grid[vi + f] * dw[k].cwiseProduct(lc.inv_cell);
        }
      }
      fi += F;
    }
  }
  // Clamped queries keep a zero position gradient on the clamped axes.
  if (dx && !cache.clamped) *dx += dxl;
}

void FieldModel::mapper_forward(const double* seg, const MapperDims& dims,
                                bool sigmoid_out, MapperCache& cache) const {
  diff::affine_forward({seg + dims.w1, std::size_t(dims.hidden) * dims.input},
                       {seg + dims.b1, std::size_t(dims.hidden)},
                       {cache.input.data(), std::size_t(dims.input)},
                       {cache.hidden.data(), std::size_t(dims.hidden)});
  for (int i = 0; i < dims.hidden; ++i) cache.hidden[i] = sigmoid(cache.hidden[i]);
  diff::affine_forward({seg + dims.w2, std::size_t(dims.output) * dims.hidden},
                       {seg + dims.b2, std::size_t(dims.output)},
                       {cache.hidden.data(), std::size_t(dims.hidden)},
                       {cache.pre_out.data(), std::size_t(dims.output)});
  for (int o = 0; o < dims.output; ++o)
    cache.out[o] = sigmoid_out ? sigmoid(cache.pre_out[o]) : cache.pre_out[o];
}

void FieldModel::mapper_backward(const double* seg, const MapperDims& dims,
                                 bool sigmoid_out, const MapperCache& cache,
                                 std::span<const double> dout, double* grad_seg,
                                 std::span<double> din) const {
  std::array<double, 3> dpre{};
  for (int o = 0; o < dims.output; ++o)
    dpre[o] = sigmoid_out ? diff::sigmoid_backward(cache.out[o], dout[o])
                          : dout[o];
  std::array<double, kMaxMapperHidden> dhid{};
  diff::affine_backward({seg + dims.w2, std::size_t(dims.output) * dims.hidden},
                        {cache.hidden.data(), std::size_t(dims.hidden)},
                        {dpre.data(), std::size_t(dims.output)},
                        {grad_seg + dims.w2, std::size_t(dims.output) * dims.hidden},
                        {grad_seg + dims.b2, std::size_t(dims.output)},
                        {dhid.data(), std::size_t(dims.hidden)});
  for (int i = 0; i < dims.hidden; ++i)
    dhid[i] = diff::sigmoid_backward(cache.hidden[i], dhid[i]);
  diff::affine_backward({seg + dims.w1, std::size_t(dims.hidden) * dims.input},
                        {cache.input.data(), std::size_t(dims.input)},
                        {dhid.data(), std::size_t(dims.hidden)},
                        {grad_seg + dims.w1, std::size_t(dims.hidden) * dims.input},
                        {grad_seg + dims.b1, std::size_t(dims.hidden)},
                        din);
}

void FieldModel::map_color_forward(const double* params,
                                   const std::array<double, 3>& e, double ln_dt,
                                   std::span<const double> h,
                                   MapperCache& cache) const {
  for (int c = 0; c < 3; ++c) {
    if (e[c] <= 0) throw NumericalError("map_color: non-positive radiance");
    cache.input[c] = std::log(e[c]) + ln_dt;
  }
  if (config_.mapper_uses_hidden) {
    for (int i = 0; i < config_.hidden_feature_dim; ++i)
      cache.input[3 + i] = h[i];
  }
  if (!config_.crf_enabled) {
    for (int c = 0; c < 3; ++c) cache.out[c] = sigmoid(cache.input[c]);
    return;
  }
  mapper_forward(params + color_off_, color_dims_, true, cache);
}

void FieldModel::map_color_backward(const double* params,
                                    const MapperCache& cache,
                                    const std::array<double, 3>& e,
                                    const std::array<double, 3>& dout,
                                    double* grad, std::array<double, 3>* de,
                                    double* dln_dt, std::span<double> dh) const {
  std::array<double, kMaxMapperIn> din{};
  if (!config_.crf_enabled) {
    for (int c = 0; c < 3; ++c)
      din[c] = diff::sigmoid_backward(cache.out[c], dout[c]);
  } else {
    mapper_backward(params + color_off_, color_dims_, true, cache,
                    {dout.data(), 3}, grad + color_off_,
                    {din.data(), std::size_t(color_dims_.input)});
  }
  for (int c = 0; c < 3; ++c) {
    if (de) (*de)[c] += din[c] / e[c];
    if (dln_dt) *dln_dt += din[c];
  }
  if (config_.mapper_uses_hidden && !dh.empty()) {
    for (int i = 0; i < config_.hidden_feature_dim; ++i) dh[i] += din[3 + i];
  }
}

double FieldModel::map_luminance_forward(const double* params,
                                         const std::array<double, 3>& e,
                                         double ln_dt, std::span<const double> h,
                                         MapperCache& cache) const {
  double y = luma(e[0], e[1], e[2]);
  if (y <= 0) throw NumericalError("map_luminance: non-positive radiance");
  cache.input[0] = std::log(y) + ln_dt;
  if (config_.mapper_uses_hidden) {
    for (int i = 0; i < config_.hidden_feature_dim; ++i)
      cache.input[1 + i] = h[i];
  }
  if (!config_.crf_enabled) {
    cache.out[0] = cache.input[0];
    return cache.out[0];
  }
  mapper_forward(params + lum_off_, lum_dims_, false, cache);
  return cache.out[0];
}

void FieldModel::map_luminance_backward(const double* params,
                                        const MapperCache& cache,
                                        const std::array<double, 3>& e,
                                        double dout, double* grad,
                                        std::array<double, 3>* de,
                                        double* dln_dt,
                                        std::span<double> dh) const {
  std::array<double, kMaxMapperIn> din{};
  if (!config_.crf_enabled) {
    din[0] = dout;
  } else {
    std::array<double, 1> dout_arr = {dout};
    mapper_backward(params + lum_off_, lum_dims_, false, cache,
                    {dout_arr.data(), 1}, grad + lum_off_,
                    {din.data(), std::size_t(lum_dims_.input)});
  }
  double y = luma(e[0], e[1], e[2]);
  static const double lw[3] = {0.2126, 0.7152, 0.0722};
  for (int c = 0; c < 3; ++c)
    if (de) (*de)[c] += din[0] * lw[c] / y;
  if (dln_dt) *dln_dt += din[0];
  if (config_.mapper_uses_hidden && !dh.empty()) {
    for (int i = 0; i < config_.hidden_feature_dim; ++i) dh[i] += din[1 + i];
  }
}

void FieldModel::project_mapper_weights(ParamVector& params) const {
  auto clamp_mapper = [&](const std::string& name, const MapperDims& dims,
                          int radiance_inputs) {
    auto m = params.segment(name);
    for (int k = 0; k < dims.hidden; ++k)
      for (int i = 0; i < radiance_inputs; ++i) {
        double& w = m[dims.w1 + std::size_t(k) * dims.input + i];
        w = std::max(w, 0.0);
      }
    for (std::size_t i = dims.w2; i < dims.b2; ++i)
      m[i] = std::max(m[i], 0.0);
  };
  clamp_mapper("crf_color", color_dims_, 3);
  clamp_mapper("crf_lum", lum_dims_, 1);
}

double FieldModel::tsdf(const ParamVector& params, const Vec3& x) const {
  FieldQueryCache cache;
  query_forward(params.data(), x, cache, {});
  return cache.s;
}

// --------------------------------------------------------------------------
/// Checkpoint io: magic, version, config json, then per-segment f32 data.
// --------------------------------------------------------------------------

namespace {
constexpr std::uint32_t kCkptMagic = 0x4b435645;  // "EVCK"
constexpr std::uint32_t kCkptVersion = 1;

nlohmann::json config_json(const FieldConfig& c) {
  nlohmann::json j;
  j["bounds_lo"] = {c.bounds.lo.x(), c.bounds.lo.y(), c.bounds.lo.z()};
  j["bounds_hi"] = {c.bounds.hi.x(), c.bounds.hi.y(), c.bounds.hi.z()};
  j["level_resolutions"] = c.level_resolutions;
  j["feature_width"] = c.feature_width;
  j["decoder_hidden"] = c.decoder_hidden;
  j["hidden_feature_dim"] = c.hidden_feature_dim;
  j["mapper_hidden"] = c.mapper_hidden;
  j["mapper_uses_hidden"] = c.mapper_uses_hidden;
  j["crf_enabled"] = c.crf_enabled;
  return j;
}

FieldConfig config_from_json(const nlohmann::json& j) {
  FieldConfig c;
  c.bounds.lo = Vec3(j["bounds_lo"][0], j["bounds_lo"][1], j["bounds_lo"][2]);
  c.bounds.hi = Vec3(j["bounds_hi"][0], j["bounds_hi"][1], j["bounds_hi"][2]);
  for (int i = 0; i < 3; ++i) c.level_resolutions[i] = j["level_resolutions"][i];
  c.feature_width = j["feature_width"];
  c.decoder_hidden = j["decoder_hidden"];
  c.hidden_feature_dim = j["hidden_feature_dim"];
  c.mapper_hidden = j["mapper_hidden"];
  c.mapper_uses_hidden = j["mapper_uses_hidden"];
  c.crf_enabled = j["crf_enabled"];
  return c;
}
}  // namespace

void save_checkpoint(const FieldModel& model, const ParamVector& params,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  auto put32 = [&](std::uint32_t v) {
    char b[4] = {char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
    out.write(b, 4);
  };
  put32(kCkptMagic);
  put32(kCkptVersion);
  std::string cfg = config_json(model.config()).dump();
  put32(std::uint32_t(cfg.size()));
  out.write(cfg.data(), std::streamsize(cfg.size()));
  const auto& segs = model.layout().segments();
  put32(std::uint32_t(segs.size()));
  for (const auto& seg : segs) {
    put32(std::uint32_t(seg.name.size()));
    out.write(seg.name.data(), std::streamsize(seg.name.size()));
    put32(std::uint32_t(seg.size));
    std::vector<float> data(seg.size);
    for (std::size_t i = 0; i < seg.size; ++i)
      data[i] = float(params[seg.offset + i]);
    out.write(reinterpret_cast<const char*>(data.data()),
              std::streamsize(seg.size * sizeof(float)));
  }
  if (!out) throw DataError("checkpoint write failed: " + path.string());
}

std::pair<FieldConfig, std::vector<float>> load_checkpoint_raw(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  auto get32 = [&]() {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError("truncated checkpoint: " + path.string());
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
           std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
  };
  if (get32() != kCkptMagic) throw DataError("bad checkpoint magic: " + path.string());
  if (get32() != kCkptVersion)
    throw DataError("unsupported checkpoint version: " + path.string());
  std::string cfg(get32(), '\0');
  in.read(cfg.data(), std::streamsize(cfg.size()));
  FieldConfig config;
  try {
    config = config_from_json(nlohmann::json::parse(cfg));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint config: " + std::string(e.what()));
  }
  FieldModel model(config);
  std::vector<float> values(model.layout().total_size());
  std::uint32_t nseg = get32();
  for (std::uint32_t s = 0; s < nseg; ++s) {
    std::string name(get32(), '\0');
    in.read(name.data(), std::streamsize(name.size()));
    std::uint32_t size = get32();
    const auto& seg = model.layout().segment(name);
    if (seg.size != size)
      throw DataError("checkpoint segment size mismatch for " + name);
    in.read(reinterpret_cast<char*>(values.data() + seg.offset),
            std::streamsize(size * sizeof(float)));
    if (!in) throw DataError("truncated checkpoint: " + path.string());
  }
  return {config, std::move(values)};
}

std::pair<FieldModel, ParamVector> load_checkpoint(
    const std::filesystem::path& path) {
  auto [config, values] = load_checkpoint_raw(path);
  FieldModel model(config);
  ParamVector params(model.layout());
  for (std::size_t i = 0; i < values.size(); ++i) params[i] = values[i];
  return {std::move(model), std::move(params)};
}

}  // namespace evislam
