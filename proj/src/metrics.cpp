#include "evislam/metrics.hpp"

#include "evislam/sampling.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace evislam {

namespace {

double median_of(std::vector<double> v) {
  std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double m = v[n / 2];
  if (n % 2 == 0) {
    double lower = *std::max_element(v.begin(), v.begin() + n / 2);
    m = 0.5 * (m + lower);
  }
  return m;
}

}  // namespace

AteReport compute_ate(const Trajectory& estimate, const Trajectory& ground_truth,
                      AteAlignment alignment) {
  if (ground_truth.poses.empty() || estimate.poses.empty())
    throw DataError("ate: empty trajectory");
  const double max_dt = 0.5 / ground_truth.frame_rate;

  // Associate every estimated pose with the nearest ground-truth timestamp.
  std::vector<Vec3> est_pts, gt_pts;
  for (const TimedPose& ep : estimate.poses) {
    auto it = std::lower_bound(
        ground_truth.poses.begin(), ground_truth.poses.end(), ep.timestamp,
        [](const TimedPose& p, double t) { return p.timestamp < t; });
    const TimedPose* best = nullptr;
    if (it != ground_truth.poses.end()) best = &*it;
    if (it != ground_truth.poses.begin()) {
      const TimedPose* prev = &*std::prev(it);
      if (!best || std::abs(prev->timestamp - ep.timestamp) <
                       std::abs(best->timestamp - ep.timestamp))
        best = prev;
    }
    if (!best || std::abs(best->timestamp - ep.timestamp) > max_dt) continue;
    est_pts.push_back(ep.pose.translation());
    gt_pts.push_back(best->pose.translation());
  }
  if (est_pts.size() < 3)
    throw DataError("ate: fewer than 3 timestamp matches between trajectories");

  MatX src(3, est_pts.size()), dst(3, est_pts.size());
  for (std::size_t i = 0; i < est_pts.size(); ++i) {
    src.col(i) = est_pts[i];
    dst.col(i) = gt_pts[i];
  }
  Mat4 T = Eigen::umeyama(src, dst, alignment == AteAlignment::Sim3);

  std::vector<double> errs(est_pts.size());
  double sq_sum = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < est_pts.size(); ++i) {
    Vec3 aligned = T.topLeftCorner<3, 3>() * est_pts[i] + T.topRightCorner<3, 1>();
    errs[i] = (aligned - gt_pts[i]).norm();
    sq_sum += errs[i] * errs[i];
    sum += errs[i];
  }
  AteReport report;
  report.matched = est_pts.size();
  report.rmse_cm = 100.0 * std::sqrt(sq_sum / double(errs.size()));
  report.mean_cm = 100.0 * sum / double(errs.size());
  report.median_cm = 100.0 * median_of(errs);
  report.alignment = T;
  return report;
}

DepthL1Report compute_depth_l1(const FieldModel& model, const ParamVector& params,
                               const AnalyticScene& scene,
                               const Trajectory& poses, const Intrinsics& k,
                               int n_poses, int pixels_per_pose,
                               std::uint64_t seed,
                               const DepthRenderParams& render) {
  if (poses.poses.empty()) throw DataError("depth-l1: empty trajectory");
  if (n_poses < 1 || pixels_per_pose < 1)
    throw ConfigError("depth-l1: pose and pixel counts must be positive");
  const double far =
      render.far > 0 ? render.far : scene.bounds.diagonal();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, poses.poses.size() - 1);

  double abs_sum = 0.0;
  std::size_t n_valid = 0;
  for (int p = 0; p < n_poses; ++p) {
    const PoseSE3& pose = poses.poses[pick(rng)].pose;
    auto pixels = sample_uniform_pixels(k, pixels_per_pose, rng);
    for (const Vec2& px : pixels) {
      Ray ray = make_ray(pose, k, px);
      auto gt = scene.trace(ray.origin, ray.dir, far);
      if (!gt) continue;
      auto depths = sample_ray(render.near, far, *gt, true, render.tr,
                               render.m_strat, render.m_surf, rng);
      RenderBundle bundle = render_ray(model, params, ray, depths, render.tr,
                                       /*want_color=*/false,
                                       /*want_luminance=*/false);
      if (bundle.non_surface) continue;
      abs_sum += std::abs(bundle.d_hat - *gt);
      ++n_valid;
    }
  }
  if (n_valid == 0) throw DataError("depth-l1: no valid depth samples");
  DepthL1Report report;
  report.samples = n_valid;
  report.mean_cm = 100.0 * abs_sum / double(n_valid);
  return report;
}

// --- isosurface extraction --------------------------------------------------

namespace {

// Six-tetrahedron decomposition of a cube around the 0-7 diagonal. Corner
// index bit order: x | y<<1 | z<<2.
constexpr int kTets[6][4] = {{0, 5, 1, 7}, {0, 1, 3, 7}, {0, 3, 2, 7},
                             {0, 2, 6, 7}, {0, 6, 4, 7}, {0, 4, 5, 7}};

struct EdgeKey {
  std::int64_t a, b;
  bool operator<(const EdgeKey& o) const {
    return a != o.a ? a < o.a : b < o.b;
  }
};

}  // namespace

Mesh extract_isosurface(const std::function<double(const Vec3&)>& f,
                        const Aabb& bounds, int resolution) {
  if (resolution < 4)
    throw ConfigError("isosurface: resolution too coarse (need >= 4 cells)");
  const int n = resolution;          // cells per axis
  const int nv = n + 1;              // grid points per axis
  const Vec3 cell = bounds.extent() / double(n);

  auto point = [&](int i, int j, int k) {
    return Vec3(bounds.lo.x() + i * cell.x(), bounds.lo.y() + j * cell.y(),
                bounds.lo.z() + k * cell.z());
  };
  auto gid = [&](int i, int j, int k) -> std::int64_t {
    return (std::int64_t(k) * nv + j) * nv + i;
  };

  // Sample the field at every grid point.
  std::vector<double> values(std::size_t(nv) * nv * nv);
  for (int k = 0; k < nv; ++k)
    for (int j = 0; j < nv; ++j)
      for (int i = 0; i < nv; ++i) {
        double v = f(point(i, j, k));
        if (!std::isfinite(v))
          throw NumericalError("isosurface: non-finite field value");
        values[std::size_t(gid(i, j, k))] = v;
      }

  Mesh mesh;
  std::map<EdgeKey, int> edge_vertices;
  auto edge_vertex = [&](std::int64_t ga, std::int64_t gb, const Vec3& pa,
                         const Vec3& pb, double fa, double fb) {
    EdgeKey key = ga < gb ? EdgeKey{ga, gb} : EdgeKey{gb, ga};
    auto it = edge_vertices.find(key);
    if (it != edge_vertices.end()) return it->second;
    double t = fa / (fa - fb);  // fa and fb have opposite signs
    t = std::clamp(t, 0.0, 1.0);
    int idx = int(mesh.vertices.size());
    mesh.vertices.push_back(pa + t * (pb - pa));
    edge_vertices.emplace(key, idx);
    return idx;
  };

  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        std::int64_t cg[8];
        Vec3 cp[8];
        double cf[8];
        for (int c = 0; c < 8; ++c) {
          int ci = i + (c & 1), cj = j + ((c >> 1) & 1), ck = k + ((c >> 2) & 1);
          cg[c] = gid(ci, cj, ck);
          cp[c] = point(ci, cj, ck);
          cf[c] = values[std::size_t(cg[c])];
        }
        for (const auto& tet : kTets) {
          int neg[4], pos[4], nn = 0, np = 0;
          for (int c = 0; c < 4; ++c) {
            if (cf[tet[c]] < 0)
              neg[nn++] = tet[c];
            else
              pos[np++] = tet[c];
          }
          if (nn == 0 || np == 0) continue;

          auto ev = [&](int a, int b) {
            return edge_vertex(cg[a], cg[b], cp[a], cp[b], cf[a], cf[b]);
          };
          auto emit = [&](int a, int b, int c) {
            if (a == b || b == c || a == c) return;
            // Orient along the (linear) field gradient so normals point from
            // negative to positive.
            const Vec3& p0 = mesh.vertices[std::size_t(a)];
            const Vec3& p1 = mesh.vertices[std::size_t(b)];
            const Vec3& p2 = mesh.vertices[std::size_t(c)];
            Mat3 basis;
            basis.col(0) = cp[tet[1]] - cp[tet[0]];
            basis.col(1) = cp[tet[2]] - cp[tet[0]];
            basis.col(2) = cp[tet[3]] - cp[tet[0]];
            Vec3 df(cf[tet[1]] - cf[tet[0]], cf[tet[2]] - cf[tet[0]],
                    cf[tet[3]] - cf[tet[0]]);
            Vec3 grad = basis.transpose().fullPivLu().solve(df);
            Vec3 normal = (p1 - p0).cross(p2 - p0);
            if (normal.dot(grad) < 0)
              mesh.triangles.push_back({a, c, b});
            else
              mesh.triangles.push_back({a, b, c});
          };

          if (nn == 1) {
            emit(ev(neg[0], pos[0]), ev(neg[0], pos[1]), ev(neg[0], pos[2]));
          } else if (nn == 3) {
            emit(ev(pos[0], neg[0]), ev(pos[0], neg[1]), ev(pos[0], neg[2]));
          } else {
            int v00 = ev(neg[0], pos[0]), v01 = ev(neg[0], pos[1]);
            int v10 = ev(neg[1], pos[0]), v11 = ev(neg[1], pos[1]);
            emit(v00, v01, v11);
            emit(v00, v11, v10);
          }
        }
      }
  return mesh;
}

Mesh extract_mesh(const FieldModel& model, const ParamVector& params,
                  int resolution) {
  return extract_isosurface(
      [&](const Vec3& x) { return model.tsdf(params, x); },
      model.config().bounds, resolution);
}

// --- PLY --------------------------------------------------------------------

void write_ply(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("ply: cannot open for writing: " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  for (const Vec3& v : mesh.vertices) {
    float xyz[3] = {float(v.x()), float(v.y()), float(v.z())};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
  for (const auto& t : mesh.triangles) {
    std::uint8_t n = 3;
    std::int32_t idx[3] = {t[0], t[1], t[2]};
    out.write(reinterpret_cast<const char*>(&n), 1);
    out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
  }
  if (!out) throw DataError("ply: write failed: " + path.string());
}

Mesh read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("ply: cannot open: " + path.string());
  std::string line;
  std::size_t n_vertices = 0, n_faces = 0;
  bool header_done = false, binary_le = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (tok == "element") {
      std::string kind;
      std::size_t count;
      ls >> kind >> count;
      if (kind == "vertex") n_vertices = count;
      if (kind == "face") n_faces = count;
    } else if (tok == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done || !binary_le)
    throw DataError("ply: unsupported or truncated header: " + path.string());

  Mesh mesh;
  mesh.vertices.resize(n_vertices);
  for (auto& v : mesh.vertices) {
    float xyz[3];
    in.read(reinterpret_cast<char*>(xyz), sizeof(xyz));
    v = Vec3(xyz[0], xyz[1], xyz[2]);
  }
  mesh.triangles.resize(n_faces);
  for (auto& t : mesh.triangles) {
    std::uint8_t n = 0;
    std::int32_t idx[3];
    in.read(reinterpret_cast<char*>(&n), 1);
    if (n != 3) throw DataError("ply: only triangle faces are supported");
    in.read(reinterpret_cast<char*>(idx), sizeof(idx));
    t = {idx[0], idx[1], idx[2]};
  }
  if (!in) throw DataError("ply: truncated body: " + path.string());
  return mesh;
}

// --- mesh metrics -----------------------------------------------------------

namespace {

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c) {
  // Ericson, "Real-Time Collision Detection", closest point on triangle.
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return (p - a).norm();
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return (p - b).norm();
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    double v = d1 / (d1 - d3);
    return (p - (a + v * ab)).norm();
  }
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return (p - c).norm();
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    double w = d2 / (d2 - d6);
    return (p - (a + w * ac)).norm();
  }
  double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).norm();
  }
  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom, w = vc * denom;
  return (p - (a + v * ab + w * ac)).norm();
}

struct TriBound {
  Vec3 centroid;
  double radius;
};

double point_mesh_distance(const Vec3& p, const Mesh& mesh,
                           const std::vector<TriBound>& bounds) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    double lower = (p - bounds[i].centroid).norm() - bounds[i].radius;
    if (lower >= best) continue;
    const auto& t = mesh.triangles[i];
    best = std::min(best, point_triangle_distance(
                              p, mesh.vertices[std::size_t(t[0])],
                              mesh.vertices[std::size_t(t[1])],
                              mesh.vertices[std::size_t(t[2])]));
  }
  return best;
}

// Projects a random in-bounds point onto the scene surface by Newton steps
// along the SDF gradient.
std::optional<Vec3> surface_sample(const AnalyticScene& scene,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec3 p = scene.bounds.lo +
           Vec3(u(rng) * scene.bounds.extent().x(),
                u(rng) * scene.bounds.extent().y(),
                u(rng) * scene.bounds.extent().z());
  for (int it = 0; it < 20; ++it) {
    double d = scene.sdf(p);
    if (std::abs(d) < 1e-6) break;
    p -= d * scene.normal(p);
    p = scene.bounds.clamp(p);
  }
  if (std::abs(scene.sdf(p)) > 1e-4) return std::nullopt;
  return p;
}

}  // namespace

MeshReport compute_mesh_metrics(const Mesh& mesh, const AnalyticScene& scene,
                                int sample_count, std::uint64_t seed,
                                double ratio_threshold_m) {
  if (sample_count < 1) throw ConfigError("mesh-metrics: sample count must be positive");
  std::mt19937_64 rng(seed);
  MeshReport report;

  // Accuracy: area-weighted samples on the mesh, unsigned scene distance.
  if (!mesh.triangles.empty()) {
    std::vector<double> cum_area(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
      const auto& t = mesh.triangles[i];
      const Vec3& a = mesh.vertices[std::size_t(t[0])];
      const Vec3& b = mesh.vertices[std::size_t(t[1])];
      const Vec3& c = mesh.vertices[std::size_t(t[2])];
      total += 0.5 * (b - a).cross(c - a).norm();
      cum_area[i] = total;
    }
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      double acc = 0.0;
      for (int s = 0; s < sample_count; ++s) {
        auto it = std::lower_bound(cum_area.begin(), cum_area.end(), u(rng));
        std::size_t ti = std::size_t(it - cum_area.begin());
        const auto& t = mesh.triangles[ti];
        double r1 = std::sqrt(u01(rng)), r2 = u01(rng);
        Vec3 p = (1 - r1) * mesh.vertices[std::size_t(t[0])] +
                 r1 * (1 - r2) * mesh.vertices[std::size_t(t[1])] +
                 r1 * r2 * mesh.vertices[std::size_t(t[2])];
        acc += std::abs(scene.sdf(p));
      }
      report.accuracy_cm = 100.0 * acc / double(sample_count);
      report.accuracy_defined = true;
    }
  }

  // Completion: scene-surface samples to nearest mesh point.
  std::vector<TriBound> tri_bounds(mesh.triangles.size());
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    const Vec3& a = mesh.vertices[std::size_t(t[0])];
    const Vec3& b = mesh.vertices[std::size_t(t[1])];
    const Vec3& c = mesh.vertices[std::size_t(t[2])];
    tri_bounds[i].centroid = (a + b + c) / 3.0;
    tri_bounds[i].radius =
        std::max({(a - tri_bounds[i].centroid).norm(),
                  (b - tri_bounds[i].centroid).norm(),
                  (c - tri_bounds[i].centroid).norm()});
  }
  double comp_sum = 0.0;
  int comp_n = 0, within = 0;
  int attempts = 0;
  while (comp_n < sample_count && attempts < 50 * sample_count) {
    ++attempts;
    auto p = surface_sample(scene, rng);
    if (!p) continue;
    ++comp_n;
    if (mesh.triangles.empty()) {
      comp_sum += std::numeric_limits<double>::infinity();
      continue;
    }
    double d = point_mesh_distance(*p, mesh, tri_bounds);
    comp_sum += d;
    if (d <= ratio_threshold_m) ++within;
  }
  if (comp_n == 0) throw DataError("mesh-metrics: no scene surface samples found");
  report.completion_cm = 100.0 * comp_sum / double(comp_n);
  report.completion_ratio = 100.0 * double(within) / double(comp_n);
  return report;
}

double psnr(const ImageRgb& a, const ImageRgb& b) {
  if (a.width != b.width || a.height != b.height || a.data.size() != b.data.size())
    throw DataError("psnr: image size mismatch");
  if (a.data.empty()) throw DataError("psnr: empty image");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = double(a.data[i]) - double(b.data[i]);
    mse += d * d;
  }
  mse /= double(a.data.size());
  if (mse <= 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace evislam
