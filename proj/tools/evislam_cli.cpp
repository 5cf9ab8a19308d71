// Command-line front end: dataset generation, tracking/mapping runs, and
// evaluation metrics (trajectory error, depth L1, mesh extraction/metrics,
// event stream tooling).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "evislam/metrics.hpp"
#include "evislam/slam.hpp"

using namespace evislam;

namespace {

// --- flat key=value helper for the dataset-generation config ----------------

std::map<std::string, std::string> read_flat_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return std::string();
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

struct GenConfig {
  GenParams params;
  std::vector<DegradeMode> modes;
};

GenConfig parse_gen_config(const std::filesystem::path& path) {
  auto kv = read_flat_file(path);
  static const char* kKnown[] = {"frames", "frame_rate", "threshold_c",
                                 "linlog_b", "k_sub", "gamma", "modes", "seed"};
  for (const auto& [key, value] : kv) {
    bool known = false;
    for (const char* k : kKnown) known = known || key == k;
    if (!known) throw ConfigError("gen config: unknown key '" + key + "'");
  }
  auto require = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end())
      throw ConfigError("gen config: missing key '" + key + "'");
    return it->second;
  };
  GenConfig cfg;
  try {
    cfg.params.frame_count = std::stoi(require("frames"));
    cfg.params.frame_rate = std::stod(require("frame_rate"));
    cfg.params.threshold_c = std::stod(require("threshold_c"));
    cfg.params.linlog_b = std::stod(require("linlog_b"));
    cfg.params.k_sub = std::stoi(require("k_sub"));
    cfg.params.gamma = std::stod(require("gamma"));
    cfg.params.seed = std::stoull(require("seed"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("gen config: malformed numeric value");
  }
  std::stringstream modes(require("modes"));
  std::string mode;
  while (std::getline(modes, mode, ','))
    cfg.modes.push_back(parse_degrade_mode(mode));
  if (cfg.modes.empty()) throw ConfigError("gen config: empty modes list");
  if (cfg.params.frame_count < 1)
    throw ConfigError("gen config: frames must be positive");
  return cfg;
}

std::filesystem::path dataset_dir(const std::string& base,
                                  const std::string& mode) {
  std::filesystem::path dir = base;
  if (!mode.empty()) dir /= mode;
  if (!std::filesystem::exists(dir / "scene.json"))
    throw DataError("not a dataset directory (no scene.json): " + dir.string());
  return dir;
}

// --- subcommand bodies ------------------------------------------------------

int cmd_gen(const std::string& config_path, const std::string& out_dir,
            std::uint64_t seed_override, bool has_seed) {
  GenConfig cfg = parse_gen_config(config_path);
  if (has_seed) cfg.params.seed = seed_override;
  AnalyticScene scene = default_room_scene();
  Trajectory traj = make_orbit_trajectory(scene, cfg.params.frame_count,
                                          cfg.params.frame_rate,
                                          cfg.params.seed);
  make_sequence(scene, traj, cfg.modes, out_dir, cfg.params);
  for (const DegradeMode& mode : cfg.modes)
    std::cout << "wrote " << (std::filesystem::path(out_dir) /
                              degrade_mode_name(mode)).string()
              << "\n";
  return 0;
}

int cmd_run(const std::string& data_dir, const std::string& mode,
            const std::string& config_path, const std::string& out_dir,
            std::uint64_t seed_override, bool has_seed) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = read_run_config(config_path);
  if (has_seed) cfg.seed = seed_override;
  Dataset data = load_dataset(dataset_dir(data_dir, mode));
  SlamSystem slam(data, cfg);
  slam.run();
  slam.write_outputs(out_dir);
  std::cout << "frames = " << slam.frames_done() << "\n"
            << "diverged_frames = " << slam.diverged_frames() << "\n"
            << "rejected_ba_steps = " << slam.rejected_ba_steps() << "\n"
            << "out = " << out_dir << "\n";
  return 0;
}

int cmd_ate(const std::string& est_path, const std::string& gt_path,
            const std::string& align) {
  AteAlignment alignment;
  if (align == "se3")
    alignment = AteAlignment::Se3;
  else if (align == "sim3")
    alignment = AteAlignment::Sim3;
  else
    throw ConfigError("ate: --align must be se3 or sim3");
  AteReport r = compute_ate(read_tum(est_path), read_tum(gt_path), alignment);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "rmse_cm = %.6f\nmean_cm = %.6f\nmedian_cm = %.6f\n"
                "matched = %zu\n",
                r.rmse_cm, r.mean_cm, r.median_cm, r.matched);
  std::cout << buf;
  return 0;
}

int cmd_depth_l1(const std::string& ckpt_path, const std::string& data_dir,
                 const std::string& mode, int n_poses, int n_pixels,
                 std::uint64_t seed) {
  auto [model, params] = load_checkpoint(ckpt_path);
  Dataset data = load_dataset(dataset_dir(data_dir, mode));
  DepthL1Report r = compute_depth_l1(model, params, data.scene, data.traj_gt,
                                     data.calib.rgbd, n_poses, n_pixels, seed);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "depth_l1_cm = %.6f\nsamples = %zu\n",
                r.mean_cm, r.samples);
  std::cout << buf;
  return 0;
}

int cmd_mesh(const std::string& ckpt_path, const std::string& out_path,
             int resolution) {
  auto [model, params] = load_checkpoint(ckpt_path);
  Mesh mesh = extract_mesh(model, params, resolution);
  write_ply(mesh, out_path);
  std::cout << "vertices = " << mesh.vertices.size() << "\n"
            << "triangles = " << mesh.triangles.size() << "\n"
            << "out = " << out_path << "\n";
  return 0;
}

int cmd_mesh_metrics(const std::string& mesh_path, const std::string& data_dir,
                     const std::string& mode, int samples, std::uint64_t seed,
                     double threshold) {
  Mesh mesh = read_ply(mesh_path);
  AnalyticScene scene =
      read_scene_json(dataset_dir(data_dir, mode) / "scene.json");
  MeshReport r = compute_mesh_metrics(mesh, scene, samples, seed, threshold);
  char buf[256];
  if (r.accuracy_defined)
    std::snprintf(buf, sizeof(buf), "accuracy_cm = %.6f\n", r.accuracy_cm);
  else
    std::snprintf(buf, sizeof(buf), "accuracy_cm = undefined\n");
  std::cout << buf;
  std::snprintf(buf, sizeof(buf),
                "completion_cm = %.6f\ncompletion_ratio = %.6f\n",
                r.completion_cm, r.completion_ratio);
  std::cout << buf;
  return 0;
}

int cmd_events_simulate(const std::string& config_path,
                        const std::string& out_path,
                        std::uint64_t seed_override, bool has_seed) {
  GenConfig cfg = parse_gen_config(config_path);
  if (has_seed) cfg.params.seed = seed_override;
  AnalyticScene scene = default_room_scene();
  Trajectory traj = make_orbit_trajectory(scene, cfg.params.frame_count,
                                          cfg.params.frame_rate,
                                          cfg.params.seed);
  const CalibData& calib = cfg.params.calib;
  EventStream stream;
  stream.width = calib.event.width;
  stream.height = calib.event.height;
  stream.threshold_c = cfg.params.threshold_c;
  stream.linlog_b = cfg.params.linlog_b;

  auto log_render = [&](double t) {
    ImageGray intensity = render_intensity(
        scene, calib.event_pose(traj.sample(t)), calib.event);
    LogFrame lf;
    lf.t = std::uint64_t(std::llround(t * 1e9));
    lf.log_levels.resize(intensity.data.size());
    for (std::size_t p = 0; p < intensity.data.size(); ++p)
      lf.log_levels[p] = linlog(intensity.data[p], cfg.params.linlog_b);
    return lf;
  };
  std::vector<LogFrame> frames;
  frames.push_back(log_render(0.0));
  for (int i = 1; i < cfg.params.frame_count; ++i) {
    double t0 = (i - 1) / cfg.params.frame_rate;
    double t1 = i / cfg.params.frame_rate;
    for (int s = 1; s <= cfg.params.k_sub; ++s)
      frames.push_back(log_render(t0 + (t1 - t0) * s / double(cfg.params.k_sub)));
  }
  PixelMemory memory(stream.width, stream.height);
  memory.last_log_level = frames.front().log_levels;
  EventStream chunk =
      generate_events(frames, stream.width, stream.height,
                      cfg.params.threshold_c, memory, cfg.params.linlog_b);
  stream.records = std::move(chunk.records);
  write_stream(stream, out_path);
  std::cout << "events = " << stream.records.size() << "\n"
            << "out = " << out_path << "\n";
  return 0;
}

int cmd_events_dump(const std::string& stream_path, const std::string& out_path,
                    std::int64_t limit) {
  EventStream stream = read_stream(stream_path);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw DataError("cannot open output: " + out_path);
    out = &file;
  }
  *out << "t_ns,u,v,p\n";
  std::int64_t n = 0;
  for (const EventRecord& e : stream.records) {
    if (limit >= 0 && n >= limit) break;
    *out << e.t << "," << e.u << "," << e.v << "," << int(e.p) << "\n";
    ++n;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-RGBD implicit-surface slam toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path, mode, data_dir;
  std::uint64_t seed = 0;
  bool has_seed = false;
  auto seed_cb = [&](std::uint64_t s) {
    seed = s;
    has_seed = true;
  };

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--config", config_path, "generation config (key = value)")
      ->required();
  gen->add_option("--out", out_path, "output directory")->required();
  gen->add_option_function<std::uint64_t>("--seed", seed_cb, "seed override");

  // run
  auto* run = app.add_subcommand("run", "tracking + mapping over a dataset");
  run->add_option("data", data_dir, "dataset directory")->required();
  run->add_option("--config", config_path, "run config (key = value)");
  run->add_option("--out", out_path, "output directory")->required();
  run->add_option("--mode", mode, "dataset mode subdirectory")
      ->check(CLI::IsMember({"normal", "blur", "dark"}));
  run->add_option_function<std::uint64_t>("--seed", seed_cb, "seed override");

  // ate
  std::string est_path, gt_path, align = "se3";
  auto* ate = app.add_subcommand("ate", "absolute trajectory error");
  ate->add_option("estimate", est_path, "estimated trajectory (TUM)")
      ->required();
  ate->add_option("reference", gt_path, "reference trajectory (TUM)")
      ->required();
  ate->add_option("--align", align, "alignment: se3 | sim3");

  // depth-l1
  std::string ckpt_path;
  int n_poses = 50, n_pixels = 500, resolution = 128, samples = 2000;
  double threshold = 0.05;
  auto* depth = app.add_subcommand("depth-l1", "rendered depth error");
  depth->add_option("checkpoint", ckpt_path, "field checkpoint")->required();
  depth->add_option("data", data_dir, "dataset directory")->required();
  depth->add_option("--mode", mode, "dataset mode subdirectory")
      ->check(CLI::IsMember({"normal", "blur", "dark"}));
  depth->add_option("--poses", n_poses, "number of sampled poses");
  depth->add_option("--pixels", n_pixels, "pixels per pose");
  depth->add_option_function<std::uint64_t>("--seed", seed_cb, "sampling seed");

  // mesh
  auto* mesh = app.add_subcommand("mesh", "extract the zero isosurface");
  mesh->add_option("checkpoint", ckpt_path, "field checkpoint")->required();
  mesh->add_option("--out", out_path, "output PLY path")->required();
  mesh->add_option("--resolution", resolution, "grid cells per axis");

  // mesh-metrics
  std::string mesh_path;
  auto* mm = app.add_subcommand("mesh-metrics",
                                "accuracy / completion against the scene");
  mm->add_option("mesh", mesh_path, "mesh PLY path")->required();
  mm->add_option("data", data_dir, "dataset directory")->required();
  mm->add_option("--mode", mode, "dataset mode subdirectory")
      ->check(CLI::IsMember({"normal", "blur", "dark"}));
  mm->add_option("--samples", samples, "surface samples per metric");
  mm->add_option("--threshold", threshold, "completion-ratio threshold (m)");
  mm->add_option_function<std::uint64_t>("--seed", seed_cb, "sampling seed");

  // events
  auto* events = app.add_subcommand("events", "event stream tools");
  events->require_subcommand(1);
  auto* sim = events->add_subcommand("simulate", "simulate an event stream");
  sim->add_option("--config", config_path, "generation config")->required();
  sim->add_option("--out", out_path, "output .evs path")->required();
  sim->add_option_function<std::uint64_t>("--seed", seed_cb, "seed override");
  std::int64_t limit = -1;
  auto* dump = events->add_subcommand("dump", "dump a stream as CSV");
  dump->add_option("stream", est_path, "input .evs path")->required();
  dump->add_option("--out", out_path, "output CSV (default: stdout)");
  dump->add_option("--limit", limit, "maximum records to dump");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(config_path, out_path, seed, has_seed);
    if (run->parsed())
      return cmd_run(data_dir, mode, config_path, out_path, seed, has_seed);
    if (ate->parsed()) return cmd_ate(est_path, gt_path, align);
    if (depth->parsed())
      return cmd_depth_l1(ckpt_path, data_dir, mode, n_poses, n_pixels, seed);
    if (mesh->parsed()) return cmd_mesh(ckpt_path, out_path, resolution);
    if (mm->parsed())
      return cmd_mesh_metrics(mesh_path, data_dir, mode, samples, seed,
                              threshold);
    if (sim->parsed())
      return cmd_events_simulate(config_path, out_path, seed, has_seed);
    if (dump->parsed()) return cmd_events_dump(est_path, out_path, limit);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
