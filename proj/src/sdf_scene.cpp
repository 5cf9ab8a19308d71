#include "evislam/sdf_scene.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <limits>

namespace evislam {

double SdfPrimitive::sdf(const Vec3& p) const {
  switch (kind) {
    case Kind::Sphere:
      return (p - center).norm() - radius;
    case Kind::Box: {
      Vec3 q = (p - center).cwiseAbs() - half_extent;
      double outside = q.cwiseMax(0.0).norm();
      double inside = std::min(q.maxCoeff(), 0.0);
      double d = outside + inside;
      return inverted ? -d : d;
    }
    case Kind::Plane:
      return normal.dot(p - center);
  }
  return std::numeric_limits<double>::infinity();
}

double AnalyticScene::sdf(const Vec3& p) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& prim : primitives) d = std::min(d, prim.sdf(p));
  return d;
}

std::size_t AnalyticScene::closest_primitive(const Vec3& p) const {
  double best = std::numeric_limits<double>::infinity();
  std::size_t idx = 0;
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    double d = primitives[i].sdf(p);
    if (d < best) {
      best = d;
      idx = i;
    }
  }
  return idx;
}

Vec3 AnalyticScene::normal(const Vec3& p) const {
  const double h = 1e-5;
  Vec3 n;
  for (int a = 0; a < 3; ++a) {
    Vec3 e = Vec3::Zero();
    e[a] = h;
    n[a] = sdf(p + e) - sdf(p - e);
  }
  double len = n.norm();
  return len > 0 ? Vec3(n / len) : Vec3::UnitZ();
}

std::optional<double> AnalyticScene::trace(const Vec3& origin, const Vec3& dir,
                                           double t_max) const {
  const double eps = 1e-6;
  double t = 0.0;
  for (int iter = 0; iter < 512 && t < t_max; ++iter) {
    double d = sdf(origin + t * dir);
    if (d < eps) {
      // Bisect the last step for a tight root.
      double lo = std::max(0.0, t - std::max(d, 0.0));
      double hi = t;
      for (int b = 0; b < 30; ++b) {
        double mid = 0.5 * (lo + hi);
        if (sdf(origin + mid * dir) < 0)
          hi = mid;
        else
          lo = mid;
      }
      return 0.5 * (lo + hi);
    }
    t += std::max(d, 1e-5);
  }
  return std::nullopt;
}

Vec3 AnalyticScene::shade(const Vec3& p) const {
  const auto& prim = primitives[closest_primitive(p)];
  Vec3 n = normal(p);
  double lambert = 0.3 + 0.7 * std::max(0.0, n.dot(light_dir));
  Vec3 rgb = prim.albedo * lambert * ambient_level;
  return rgb.cwiseMax(0.0).cwiseMin(1.0);
}

AnalyticScene default_room_scene() {
  AnalyticScene scene;
  scene.bounds.lo = Vec3(-2.0, -2.0, -1.5);
  scene.bounds.hi = Vec3(2.0, 2.0, 1.5);

  SdfPrimitive room;
  room.kind = SdfPrimitive::Kind::Box;
  room.center = Vec3::Zero();
  room.half_extent = Vec3(2.0, 2.0, 1.5);
  room.inverted = true;
  room.albedo = Vec3(0.75, 0.72, 0.65);
  scene.primitives.push_back(room);

  SdfPrimitive ball;
  ball.kind = SdfPrimitive::Kind::Sphere;
  ball.center = Vec3(0.8, 0.6, -0.9);
  ball.radius = 0.45;
  ball.albedo = Vec3(0.85, 0.25, 0.2);
  scene.primitives.push_back(ball);

  SdfPrimitive crate;
  crate.kind = SdfPrimitive::Kind::Box;
  crate.center = Vec3(-1.0, 0.9, -1.05);
  crate.half_extent = Vec3(0.45, 0.35, 0.45);
  crate.albedo = Vec3(0.2, 0.45, 0.85);
  scene.primitives.push_back(crate);

  SdfPrimitive pillar;
  pillar.kind = SdfPrimitive::Kind::Box;
  pillar.center = Vec3(0.2, -1.3, 0.0);
  pillar.half_extent = Vec3(0.25, 0.25, 1.5);
  pillar.albedo = Vec3(0.3, 0.75, 0.35);
  scene.primitives.push_back(pillar);

  SdfPrimitive bead;
  bead.kind = SdfPrimitive::Kind::Sphere;
  bead.center = Vec3(-0.9, -0.8, 0.4);
  bead.radius = 0.3;
  bead.albedo = Vec3(0.9, 0.8, 0.2);
  scene.primitives.push_back(bead);

  return scene;
}

namespace {

nlohmann::json vec3_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
Vec3 json_vec3(const nlohmann::json& j) { return Vec3(j[0], j[1], j[2]); }

}  // namespace

void write_scene_json(const AnalyticScene& scene,
                      const std::filesystem::path& path) {
  nlohmann::json j;
  j["ambient_level"] = scene.ambient_level;
  j["bounds_lo"] = vec3_json(scene.bounds.lo);
  j["bounds_hi"] = vec3_json(scene.bounds.hi);
  j["light_dir"] = vec3_json(scene.light_dir);
  j["primitives"] = nlohmann::json::array();
  for (const auto& p : scene.primitives) {
    nlohmann::json pj;
    pj["kind"] = p.kind == SdfPrimitive::Kind::Sphere ? "sphere"
                 : p.kind == SdfPrimitive::Kind::Box  ? "box"
                                                      : "plane";
    pj["center"] = vec3_json(p.center);
    pj["radius"] = p.radius;
    pj["half_extent"] = vec3_json(p.half_extent);
    pj["normal"] = vec3_json(p.normal);
    pj["inverted"] = p.inverted;
    pj["albedo"] = vec3_json(p.albedo);
    j["primitives"].push_back(pj);
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

AnalyticScene read_scene_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed scene json: " + std::string(e.what()));
  }
  AnalyticScene scene;
  scene.ambient_level = j.at("ambient_level");
  scene.bounds.lo = json_vec3(j.at("bounds_lo"));
  scene.bounds.hi = json_vec3(j.at("bounds_hi"));
  scene.light_dir = json_vec3(j.at("light_dir")).normalized();
  for (const auto& pj : j.at("primitives")) {
    SdfPrimitive p;
    std::string kind = pj.at("kind");
    p.kind = kind == "sphere" ? SdfPrimitive::Kind::Sphere
             : kind == "box"  ? SdfPrimitive::Kind::Box
                              : SdfPrimitive::Kind::Plane;
    p.center = json_vec3(pj.at("center"));
    p.radius = pj.at("radius");
    p.half_extent = json_vec3(pj.at("half_extent"));
    p.normal = json_vec3(pj.at("normal"));
    p.inverted = pj.at("inverted");
    p.albedo = json_vec3(pj.at("albedo"));
    scene.primitives.push_back(p);
  }
  return scene;
}

namespace {

template <typename Fn>
void for_each_pixel(const Intrinsics& K, const PoseSE3& pose,
                    const AnalyticScene& scene, Fn&& fn) {
  const Mat3 R = pose.rotation();
  const Vec3 origin = pose.translation();
  const double t_max = 2.0 * scene.bounds.diagonal();
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      Vec3 dir = (R * K.unproject(u, v).normalized()).normalized();
      auto hit = scene.trace(origin, dir, t_max);
      fn(u, v, origin, dir, hit);
    }
  }
}

}  // namespace

ImageRgb render_rgb(const AnalyticScene& scene, const PoseSE3& pose,
                    const Intrinsics& K) {
  ImageRgb img(K.width, K.height);
  for_each_pixel(K, pose, scene,
                 [&](int u, int v, const Vec3& o, const Vec3& d,
                     const std::optional<double>& hit) {
                   if (!hit) return;
                   Vec3 rgb = scene.shade(o + *hit * d);
                   float* px = img.px(u, v);
                   px[0] = float(rgb.x());
                   px[1] = float(rgb.y());
                   px[2] = float(rgb.z());
                 });
  return img;
}

ImageGray render_depth(const AnalyticScene& scene, const PoseSE3& pose,
                       const Intrinsics& K) {
  ImageGray img(K.width, K.height);
  for_each_pixel(K, pose, scene,
                 [&](int u, int v, const Vec3&, const Vec3&,
                     const std::optional<double>& hit) {
                   if (hit) *img.px(u, v) = float(*hit);
                 });
  return img;
}

ImageGray render_intensity(const AnalyticScene& scene, const PoseSE3& pose,
                           const Intrinsics& K) {
  ImageGray img(K.width, K.height);
  for_each_pixel(K, pose, scene,
                 [&](int u, int v, const Vec3& o, const Vec3& d,
                     const std::optional<double>& hit) {
                   if (!hit) return;
                   Vec3 rgb = scene.shade(o + *hit * d);
                   *img.px(u, v) = float(luma(rgb) * 255.0);
                 });
  return img;
}

}  // namespace evislam
