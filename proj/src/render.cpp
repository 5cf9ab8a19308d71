#include "evislam/render.hpp"

#include <algorithm>

namespace evislam {

Ray make_ray(const PoseSE3& pose, const Intrinsics& K, const Vec2& pixel,
             CameraId camera_id) {
  Ray ray;
  ray.origin = pose.translation();
  ray.dir = (pose.rotation() * K.unproject(pixel.x(), pixel.y()).normalized())
                .normalized();
  ray.pixel = pixel;
  ray.camera_id = camera_id;
  return ray;
}

std::vector<Ray> make_rays(const PoseSE3& pose, const Intrinsics& K,
                           const std::vector<Vec2>& pixels, CameraId camera_id) {
  std::vector<Ray> rays;
  rays.reserve(pixels.size());
  for (const auto& px : pixels) {
    if (!K.in_bounds(px.x(), px.y()))
      throw DataError("make_rays: pixel out of bounds");
    rays.push_back(make_ray(pose, K, px, camera_id));
  }
  return rays;
}

std::vector<double> sample_ray(double near, double far, double sensor_depth,
                               bool depth_valid, double tr, int m_strat,
                               int m_surf, std::mt19937_64& rng) {
  if (near >= far) throw DataError("sample_ray: near >= far");
  if (tr <= 0) throw DataError("sample_ray: tr must be positive");
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> depths;
  depths.reserve(std::size_t(m_strat) + (depth_valid ? m_surf : 0));
  for (int i = 0; i < m_strat; ++i) {
    double lo = near + (far - near) * i / m_strat;
    double hi = near + (far - near) * (i + 1) / m_strat;
    depths.push_back(lo + (hi - lo) * uni(rng));
  }
  if (depth_valid) {
    for (int i = 0; i < m_surf; ++i) {
      double z = sensor_depth - tr + 2.0 * tr * uni(rng);
      depths.push_back(std::max(z, near));
    }
  }
  std::sort(depths.begin(), depths.end());
  return depths;
}

std::vector<double> bell_weights(const std::vector<double>& tsdf, double tr) {
  if (tr <= 0) throw DataError("bell_weights: tr must be positive");
  std::vector<double> w(tsdf.size());
  for (std::size_t i = 0; i < tsdf.size(); ++i) w[i] = bell_weight(tsdf[i], tr);
  return w;
}

RenderBundle render_ray(const FieldModel& model, const ParamVector& params,
                        const Ray& ray, const std::vector<double>& depths,
                        double tr, bool want_color, bool want_luminance) {
  const std::size_t m = depths.size();
  if (m == 0) throw DataError("render_ray: empty sample set");
  if (tr <= 0) throw DataError("render_ray: tr must be positive");

  RenderBundle bundle;
  bundle.weights.resize(m);

  auto exposure = params.segment("exposure");
  double ln_dt_c = FieldModel::log_exposure(exposure[0]);
  double ln_dt_l = FieldModel::log_exposure(exposure[1]);

  std::vector<double> h(model.config().hidden_feature_dim);
  FieldQueryCache qcache;
  MapperCache mcache;

  std::vector<Vec3> colors(m, Vec3::Zero());
  std::vector<double> lums(m, 0.0);
  double wsum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    Vec3 x = ray.origin + depths[i] * ray.dir;
    model.query_forward(params.data(), x, qcache, h);
    double w = bell_weight(qcache.s, tr);
    bundle.weights[i] = w;
    wsum += w;
    if (want_color) {
      model.map_color_forward(params.data(), qcache.e, ln_dt_c, h, mcache);
      colors[i] = Vec3(mcache.out[0], mcache.out[1], mcache.out[2]);
    }
    if (want_luminance) {
      lums[i] = model.map_luminance_forward(params.data(), qcache.e, ln_dt_l, h,
                                            mcache);
    }
  }

  if (wsum < kWeightFloor) {
    bundle.non_surface = true;
    return bundle;
  }
  for (std::size_t i = 0; i < m; ++i) {
    double wn = bundle.weights[i] / wsum;
    bundle.weights[i] = wn;
    bundle.c_hat += wn * colors[i];
    bundle.l_hat += wn * lums[i];
    bundle.d_hat += wn * depths[i];
  }
  return bundle;
}

}  // namespace evislam
