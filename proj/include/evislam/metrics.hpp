#pragma once

#include <array>
#include <functional>

#include "evislam/render.hpp"
#include "evislam/sdf_scene.hpp"
#include "evislam/trajectory.hpp"

namespace evislam {

enum class AteAlignment { Se3, Sim3 };

struct AteReport {
  double rmse_cm = 0.0;
  double mean_cm = 0.0;
  double median_cm = 0.0;
  std::size_t matched = 0;
  Mat4 alignment = Mat4::Identity();  // applied to the estimate
};

// Nearest-timestamp association (within half a frame period), closed-form
// least-squares alignment, then translational error statistics.
AteReport compute_ate(const Trajectory& estimate, const Trajectory& ground_truth,
                      AteAlignment alignment = AteAlignment::Se3);

struct DepthL1Report {
  double mean_cm = 0.0;
  std::size_t samples = 0;
};

struct DepthRenderParams {
  double near = 0.05;
  double far = 0.0;  // <= 0: scene diagonal
  double tr = 0.05;
  int m_strat = 24;
  int m_surf = 8;
};

// Mean |rendered depth - ground-truth depth| over random pixels of random
// trajectory poses.
DepthL1Report compute_depth_l1(const FieldModel& model, const ParamVector& params,
                               const AnalyticScene& scene,
                               const Trajectory& poses, const Intrinsics& k,
                               int n_poses, int pixels_per_pose,
                               std::uint64_t seed,
                               const DepthRenderParams& render = {});

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

// Zero-isosurface extraction on a regular grid (tetrahedral cell
// decomposition with shared interpolated edge vertices).
Mesh extract_isosurface(const std::function<double(const Vec3&)>& f,
                        const Aabb& bounds, int resolution);

Mesh extract_mesh(const FieldModel& model, const ParamVector& params,
                  int resolution);

// Binary little-endian PLY.
void write_ply(const Mesh& mesh, const std::filesystem::path& path);
Mesh read_ply(const std::filesystem::path& path);

struct MeshReport {
  double accuracy_cm = 0.0;  // mesh sample -> gt surface
  bool accuracy_defined = false;
  double completion_cm = 0.0;  // gt surface sample -> mesh
  double completion_ratio = 0.0;  // % of gt samples within the threshold
};

MeshReport compute_mesh_metrics(const Mesh& mesh, const AnalyticScene& scene,
                                int sample_count, std::uint64_t seed,
                                double ratio_threshold_m = 0.05);

// Peak signal-to-noise ratio between same-size images, peak 1.0.
double psnr(const ImageRgb& a, const ImageRgb& b);

}  // namespace evislam
