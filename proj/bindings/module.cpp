// Python bindings for the core pipeline: dataset generation, the
// tracking/mapping loop, and the evaluation metrics.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "evislam/metrics.hpp"
#include "evislam/slam.hpp"

namespace py = pybind11;
using namespace evislam;

namespace {

py::array_t<double> trajectory_array(const Trajectory& traj) {
  py::array_t<double> out({py::ssize_t(traj.poses.size()), py::ssize_t(8)});
  auto view = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < view.shape(0); ++i) {
    const TimedPose& p = traj.poses[std::size_t(i)];
    const Vec3& t = p.pose.translation();
    const Eigen::Quaterniond& q = p.pose.quaternion();
    view(i, 0) = p.timestamp;
    view(i, 1) = t.x();
    view(i, 2) = t.y();
    view(i, 3) = t.z();
    view(i, 4) = q.x();
    view(i, 5) = q.y();
    view(i, 6) = q.z();
    view(i, 7) = q.w();
  }
  return out;
}

py::dict ate_dict(const AteReport& r) {
  py::dict d;
  d["rmse_cm"] = r.rmse_cm;
  d["mean_cm"] = r.mean_cm;
  d["median_cm"] = r.median_cm;
  d["matched"] = r.matched;
  return d;
}

AteAlignment parse_align(const std::string& s) {
  if (s == "se3") return AteAlignment::Se3;
  if (s == "sim3") return AteAlignment::Sim3;
  throw ConfigError("alignment must be se3 or sim3: " + s);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "event-RGBD implicit-surface tracking and mapping";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError",
                                         PyExc_ArithmeticError);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("level_res0", &RunConfig::level_res0)
      .def_readwrite("level_res1", &RunConfig::level_res1)
      .def_readwrite("level_res2", &RunConfig::level_res2)
      .def_readwrite("feature_width", &RunConfig::feature_width)
      .def_readwrite("decoder_hidden", &RunConfig::decoder_hidden)
      .def_readwrite("hidden_feature_dim", &RunConfig::hidden_feature_dim)
      .def_readwrite("mapper_hidden", &RunConfig::mapper_hidden)
      .def_readwrite("mapper_uses_hidden", &RunConfig::mapper_uses_hidden)
      .def_readwrite("crf_enabled", &RunConfig::crf_enabled)
      .def_readwrite("bounds_pad", &RunConfig::bounds_pad)
      .def_readwrite("tr", &RunConfig::tr)
      .def_readwrite("lambda_ev", &RunConfig::lambda_ev)
      .def_readwrite("lambda_rgb", &RunConfig::lambda_rgb)
      .def_readwrite("lambda_d", &RunConfig::lambda_d)
      .def_readwrite("lambda_sdf", &RunConfig::lambda_sdf)
      .def_readwrite("lambda_fs", &RunConfig::lambda_fs)
      .def_readwrite("event_mode", &RunConfig::event_mode)
      .def_readwrite("event_c", &RunConfig::event_c)
      .def_readwrite("eta_enabled", &RunConfig::eta_enabled)
      .def_readwrite("loss_threshold", &RunConfig::loss_threshold)
      .def_readwrite("w_d", &RunConfig::w_d)
      .def_readwrite("w_s", &RunConfig::w_s)
      .def_readwrite("n_track", &RunConfig::n_track)
      .def_readwrite("n_ba", &RunConfig::n_ba)
      .def_readwrite("event_rays_track", &RunConfig::event_rays_track)
      .def_readwrite("event_rays_ba", &RunConfig::event_rays_ba)
      .def_readwrite("m_strat", &RunConfig::m_strat)
      .def_readwrite("m_surf", &RunConfig::m_surf)
      .def_readwrite("near", &RunConfig::near)
      .def_readwrite("iters_track", &RunConfig::iters_track)
      .def_readwrite("iters_ba", &RunConfig::iters_ba)
      .def_readwrite("ba_interval", &RunConfig::ba_interval)
      .def_readwrite("keyframe_interval", &RunConfig::keyframe_interval)
      .def_readwrite("max_frames", &RunConfig::max_frames)
      .def_readwrite("lr_rot", &RunConfig::lr_rot)
      .def_readwrite("lr_trans", &RunConfig::lr_trans)
      .def_readwrite("lr_grid", &RunConfig::lr_grid)
      .def_readwrite("lr_decoder", &RunConfig::lr_decoder)
      .def_readwrite("lr_crf", &RunConfig::lr_crf)
      .def_readwrite("seed", &RunConfig::seed)
      .def("validate", &RunConfig::validate);

  m.def("read_run_config", &read_run_config, py::arg("path"));
  m.def("write_run_config", &write_run_config, py::arg("config"),
        py::arg("path"));

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("frame_count",
                             [](const Dataset& d) { return d.rgb.size(); })
      .def_property_readonly("event_count",
                             [](const Dataset& d) {
                               return d.events.records.size();
                             })
      .def_property_readonly("ground_truth", [](const Dataset& d) {
        return trajectory_array(d.traj_gt);
      });

  m.def("load_dataset", &load_dataset, py::arg("dir"));

  m.def(
      "generate_dataset",
      [](const std::filesystem::path& out_dir,
         const std::vector<std::string>& modes, int frames, double frame_rate,
         std::uint64_t seed) {
        AnalyticScene scene = default_room_scene();
        GenParams gp;
        gp.frame_count = frames;
        gp.frame_rate = frame_rate;
        gp.seed = seed;
        std::vector<DegradeMode> parsed;
        for (const std::string& mode : modes)
          parsed.push_back(parse_degrade_mode(mode));
        Trajectory traj =
            make_orbit_trajectory(scene, frames, frame_rate, seed);
        make_sequence(scene, traj, parsed, out_dir, gp);
      },
      py::arg("out_dir"), py::arg("modes"), py::arg("frames") = 60,
      py::arg("frame_rate") = 30.0, py::arg("seed") = 1,
      "Render a synthetic room sequence (one subdirectory per mode).");

  py::class_<SlamSystem>(m, "SlamSystem")
      .def(py::init<const Dataset&, const RunConfig&>(), py::arg("dataset"),
           py::arg("config"), py::keep_alive<1, 2>())
      .def("run", &SlamSystem::run,
           py::call_guard<py::gil_scoped_release>())
      .def("step", &SlamSystem::step,
           py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("frames_total", &SlamSystem::frames_total)
      .def_property_readonly("frames_done", &SlamSystem::frames_done)
      .def_property_readonly("diverged_frames", &SlamSystem::diverged_frames)
      .def_property_readonly("rejected_ba_steps",
                             &SlamSystem::rejected_ba_steps)
      .def_property_readonly("trajectory",
                             [](const SlamSystem& s) {
                               return trajectory_array(s.trajectory());
                             })
      .def_property_readonly("losses",
                             [](const SlamSystem& s) {
                               py::list rows;
                               for (const FrameLog& log : s.logs()) {
                                 py::dict d;
                                 d["frame"] = log.frame;
                                 d["l_ev"] = log.losses.l_ev;
                                 d["l_rgb"] = log.losses.l_rgb;
                                 d["l_d"] = log.losses.l_d;
                                 d["l_sdf"] = log.losses.l_sdf;
                                 d["l_fs"] = log.losses.l_fs;
                                 d["total"] = log.losses.total;
                                 d["prev_id"] = log.prev_id;
                                 d["diverged"] = log.diverged;
                                 rows.append(d);
                               }
                               return rows;
                             })
      .def("write_outputs", &SlamSystem::write_outputs, py::arg("out_dir"));

  m.def(
      "ate",
      [](const std::filesystem::path& estimate,
         const std::filesystem::path& reference, const std::string& align) {
        return ate_dict(compute_ate(read_tum(estimate), read_tum(reference),
                                    parse_align(align)));
      },
      py::arg("estimate"), py::arg("reference"), py::arg("align") = "se3",
      "Absolute trajectory error between two TUM files.");

  m.def(
      "depth_l1",
      [](const std::filesystem::path& checkpoint,
         const std::filesystem::path& data_dir, int poses, int pixels,
         std::uint64_t seed) {
        auto [model, params] = load_checkpoint(checkpoint);
        Dataset data = load_dataset(data_dir);
        DepthL1Report r = compute_depth_l1(model, params, data.scene,
                                           data.traj_gt, data.calib.rgbd,
                                           poses, pixels, seed);
        py::dict d;
        d["mean_cm"] = r.mean_cm;
        d["samples"] = r.samples;
        return d;
      },
      py::arg("checkpoint"), py::arg("data_dir"), py::arg("poses") = 50,
      py::arg("pixels") = 500, py::arg("seed") = 1,
      "Mean rendered-depth error of a checkpointed field.");

  m.def(
      "extract_mesh",
      [](const std::filesystem::path& checkpoint,
         const std::filesystem::path& out_ply, int resolution) {
        auto [model, params] = load_checkpoint(checkpoint);
        Mesh mesh = extract_mesh(model, params, resolution);
        write_ply(mesh, out_ply);
        return py::make_tuple(mesh.vertices.size(), mesh.triangles.size());
      },
      py::arg("checkpoint"), py::arg("out_ply"), py::arg("resolution") = 128,
      "Zero-isosurface mesh of a checkpointed field, written as binary PLY.");

  m.def(
      "mesh_metrics",
      [](const std::filesystem::path& mesh_ply,
         const std::filesystem::path& data_dir, int samples, double threshold,
         std::uint64_t seed) {
        Mesh mesh = read_ply(mesh_ply);
        Dataset data = load_dataset(data_dir);
        MeshReport r =
            compute_mesh_metrics(mesh, data.scene, samples, seed, threshold);
        py::dict d;
        d["accuracy_cm"] =
            r.accuracy_defined ? py::cast(r.accuracy_cm) : py::none();
        d["completion_cm"] = r.completion_cm;
        d["completion_ratio"] = r.completion_ratio;
        return d;
      },
      py::arg("mesh_ply"), py::arg("data_dir"), py::arg("samples") = 2000,
      py::arg("threshold") = 0.05, py::arg("seed") = 1,
      "Accuracy / completion of a mesh against the generating scene.");

  m.def(
      "simulate_events",
      [](py::array_t<double, py::array::c_style | py::array::forcecast>
             log_frames,
         std::vector<std::uint64_t> times_ns, double threshold_c,
         double linlog_b) {
        auto view = log_frames.unchecked<3>();
        if (std::size_t(view.shape(0)) != times_ns.size())
          throw DataError("simulate_events: frame/timestamp count mismatch");
        int height = int(view.shape(1)), width = int(view.shape(2));
        std::vector<LogFrame> frames(times_ns.size());
        for (std::size_t i = 0; i < times_ns.size(); ++i) {
          frames[i].t = times_ns[i];
          frames[i].log_levels.resize(std::size_t(width) * height);
          for (int v = 0; v < height; ++v)
            for (int u = 0; u < width; ++u)
              frames[i].log_levels[std::size_t(v) * width + u] =
                  view(py::ssize_t(i), v, u);
        }
        PixelMemory memory(width, height);
        memory.last_log_level = frames.front().log_levels;
        EventStream stream = generate_events(frames, width, height,
                                             threshold_c, memory, linlog_b);
        py::array_t<std::int64_t> out(
            {py::ssize_t(stream.records.size()), py::ssize_t(4)});
        auto o = out.mutable_unchecked<2>();
        for (py::ssize_t i = 0; i < o.shape(0); ++i) {
          const EventRecord& e = stream.records[std::size_t(i)];
          o(i, 0) = std::int64_t(e.t);
          o(i, 1) = e.u;
          o(i, 2) = e.v;
          o(i, 3) = e.p;
        }
        return out;
      },
      py::arg("log_frames"), py::arg("times_ns"),
      py::arg("threshold_c") = 0.2, py::arg("linlog_b") = 20.0,
      "Threshold-crossing events from a stack of log-intensity frames; "
      "returns an (n, 4) array of (t_ns, u, v, polarity).");
}
