// micalib command line: calibrate a manifest, run perturbation-recovery
// evaluations, sweep MI surfaces, and generate synthetic datasets.
//
// Exit codes: 0 success, 1 usage or input error, 2 degenerate result.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "micalib/experiments.hpp"
#include "micalib/io.hpp"
#include "micalib/manifest.hpp"
#include "micalib/mi.hpp"
#include "micalib/optimizer.hpp"
#include "micalib/plots.hpp"
#include "micalib/synthetic.hpp"

namespace fs = std::filesystem;
using namespace micalib;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDegenerate = 2;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("MICALIB_OUT")) return fs::path(env);
  return fs::path(".");
}

int param_index(const std::string& name) {
  for (int k = 0; k < 6; ++k) {
    if (name == param_name(k)) return k;
  }
  throw std::invalid_argument("unknown parameter axis '" + name +
                              "' (use theta_x, theta_y, theta_z, tx, ty, tz)");
}

struct CommonOptions {
  std::string manifest_path;
  std::string mode = "d2d";
  int frames = 25;
  int bins = 64;
  double max_depth = 80.0;
  int min_matches = 100;
  int threads = 1;
  std::string out_dir = default_out_dir().string();
};

void add_common(CLI::App* cmd, CommonOptions* opts) {
  cmd->add_option("--manifest", opts->manifest_path, "Dataset manifest path")
      ->required();
  cmd->add_option("--mode", opts->mode, "Feature mode: d2d or i2i")
      ->check(CLI::IsMember({"d2d", "i2i"}));
  cmd->add_option("--frames", opts->frames, "Frames sampled from the manifest")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--bins", opts->bins, "Histogram bins per axis")
      ->check(CLI::Range(2, 4096));
  cmd->add_option("--max-depth", opts->max_depth, "Depth clip in meters");
  cmd->add_option("--min-matches", opts->min_matches,
                  "Minimum matched pairs per frame");
  cmd->add_option("--threads", opts->threads, "Worker thread cap")
      ->check(CLI::Range(1, 256));
  cmd->add_option("--out", opts->out_dir,
                  "Output directory (default: $MICALIB_OUT or .)");
}

struct LoadedDataset {
  DatasetManifest manifest;
  MIObjectiveContext ctx;
  FrameSet frames;
};

LoadedDataset load_dataset(const CommonOptions& opts) {
  LoadedDataset data;
  data.manifest = load_manifest(opts.manifest_path);
  data.frames = sample_frames(data.manifest, opts.frames);
  data.ctx.frames = &data.frames;
  data.ctx.cam = data.manifest.camera;
  data.ctx.mode = opts.mode == "i2i" ? FeatureMode::I2I : FeatureMode::D2D;
  data.ctx.binning = BinningConfig::for_mode(
      data.ctx.mode, data.manifest.image_kind, opts.bins, opts.max_depth);
  data.ctx.match.max_depth = opts.max_depth;
  data.ctx.min_matches = opts.min_matches;
  data.ctx.threads = opts.threads;
  return data;
}

void add_optimizer_flags(CLI::App* cmd, opt::OptimizerConfig* config) {
  cmd->add_option("--rho-begin", config->rho_begin,
                  "Initial trust-region radius (scaled units)");
  cmd->add_option("--rho-end", config->rho_end, "Final trust-region radius");
  cmd->add_option("--max-evals", config->max_evaluations,
                  "Objective evaluation budget")
      ->check(CLI::PositiveNumber);
}

void print_params(const char* title, const ExtrinsicParams& p) {
  std::printf("%s: theta=[%.6f %.6f %.6f] deg  t=[%.6f %.6f %.6f] m\n", title,
              p.theta_x, p.theta_y, p.theta_z, p.tx, p.ty, p.tz);
}

// ---------------------------------------------------------------- calibrate

int cmd_calibrate(const CommonOptions& common,
                  const opt::OptimizerConfig& opt_config,
                  const std::vector<double>& init_values, double perturb_deg,
                  double perturb_cm, int perturb_index, int perturb_count,
                  int dof, bool dump_histogram, bool dump_trace) {
  LoadedDataset data = load_dataset(common);

  ExtrinsicParams initial{};
  if (!init_values.empty()) {
    initial = ExtrinsicParams{init_values[0], init_values[1], init_values[2],
                              init_values[3], init_values[4], init_values[5]};
  } else if (data.manifest.ground_truth) {
    const auto mode = perturb_cm > 0.0 ? PerturbationMode::RotationTranslation
                                       : PerturbationMode::RotationOnly;
    const auto batch = generate_perturbations(
        mode, perturb_deg, perturb_cm / 100.0, perturb_count);
    if (perturb_index < 0 || perturb_index >= perturb_count) {
      std::cerr << "error: --perturb-index out of range\n";
      return kExitUsage;
    }
    initial =
        apply_perturbation(*data.manifest.ground_truth,
                           batch.deltas[static_cast<size_t>(perturb_index)]);
  } else {
    std::cerr << "error: no initial guess; pass --init or a manifest with a "
                 "gt line\n";
    return kExitUsage;
  }

  const fs::path out_dir(common.out_dir);
  fs::create_directories(out_dir);

  const opt::ParamScaling scaling;
  const Vector6 x0_full = opt::scale_params(initial, scaling);
  auto to_params = [&](const Eigen::VectorXd& x) {
    Vector6 full = x0_full;
    full.head(dof) = x;
    return opt::unscale_params(full, scaling);
  };

  std::ofstream trace_out;
  opt::TraceFn trace;
  if (dump_trace) {
    trace_out.open(out_dir / "trace.csv", std::ios::binary | std::ios::trunc);
    trace_out << "evaluation,mi";
    for (int k = 0; k < dof; ++k) trace_out << "," << param_name(k);
    trace_out << "\n";
    trace = [&](int idx, const Eigen::VectorXd& x, double value) {
      trace_out << idx << "," << fmt(value);
      const ExtrinsicParams p = to_params(x);
      const Vector6 v = p.to_vector();
      for (int k = 0; k < dof; ++k) trace_out << "," << fmt(v(k));
      trace_out << "\n";
    };
  }

  const RefineResult result = refine_extrinsics(data.ctx, initial, dof,
                                                opt_config, scaling, 30.0,
                                                trace);

  const ExtrinsicParams optimized = result.params;
  print_params("initial ", initial);
  print_params("optimized", optimized);
  std::printf("mi: %.9f nats\nevaluations: %d\n", result.mi,
              result.evaluations);

  std::ofstream res(out_dir / "calibration.txt",
                    std::ios::binary | std::ios::trunc);
  res << "mode " << common.mode << "\nframes " << common.frames << "\nmi "
      << fmt(result.mi) << "\nevaluations " << result.evaluations
      << "\nresult " << fmt(optimized.theta_x) << " " << fmt(optimized.theta_y)
      << " " << fmt(optimized.theta_z) << " " << fmt(optimized.tx) << " "
      << fmt(optimized.ty) << " " << fmt(optimized.tz) << "\n";

  if (dump_histogram) {
    FeaturePairs pairs;
    const RigidTransform t = params_to_transform(optimized);
    for (const Frame& frame : data.frames) {
      FeaturePairs fp =
          get_matches(t, data.ctx.cam, frame, data.ctx.mode, data.ctx.match);
      pairs.lidar.insert(pairs.lidar.end(), fp.lidar.begin(), fp.lidar.end());
      pairs.camera.insert(pairs.camera.end(), fp.camera.begin(),
                          fp.camera.end());
    }
    if (!pairs.lidar.empty()) {
      const auto hist = JointHistogram::build(pairs, data.ctx.binning);
      std::ofstream hout(out_dir / "histogram.csv",
                         std::ios::binary | std::ios::trunc);
      hist.write_csv(hout);
    }
  }

  if (result.mi == kDegenerateObjective) {
    std::cerr << "degenerate objective: too few projected points at every "
                 "evaluated pose\n";
    return kExitDegenerate;
  }
  return kExitOk;
}

// ----------------------------------------------------------------- evaluate

int cmd_evaluate(const CommonOptions& common,
                 const opt::OptimizerConfig& opt_config,
                 const std::vector<double>& error_deg, double error_cm,
                 int runs, int dof, const std::vector<std::string>& axes) {
  LoadedDataset data = load_dataset(common);
  if (!data.manifest.ground_truth) {
    std::cerr << "error: evaluate requires a manifest gt line\n";
    return kExitUsage;
  }
  const ExtrinsicParams gt = *data.manifest.ground_truth;

  const int axis_a = param_index(axes.at(0));
  const int axis_b = param_index(axes.at(1));

  const fs::path out_dir(common.out_dir);
  fs::create_directories(out_dir);

  BatchOptions batch_opts;
  batch_opts.dof = dof;
  batch_opts.optimizer = opt_config;
  batch_opts.threads = common.threads;

  bool any_usable = false;
  std::vector<std::pair<std::string, BatchStatistics>> stat_rows;
  for (double deg : error_deg) {
    const auto mode = dof == 6 ? PerturbationMode::RotationTranslation
                               : PerturbationMode::RotationOnly;
    const auto batch =
        generate_perturbations(mode, deg, error_cm / 100.0, runs);
    const auto records = run_batch(data.ctx, gt, batch, batch_opts);

    std::string label = fmt_short(deg) + "deg";
    if (dof == 6) label += "_" + fmt_short(error_cm) + "cm";

    plots::write_records_csv(out_dir / ("records_" + label + ".csv"), records);
    plots::write_bullseye_csv(out_dir / ("bullseye_" + label + ".csv"),
                              records, axis_a, axis_b);
    plots::write_bullseye_svg(out_dir / ("bullseye_" + label + ".svg"),
                              records, axis_a, axis_b);

    const auto stats = batch_statistics(records);
    std::printf("level %s: hit rate %.3f (%d/%d)\n", label.c_str(),
                stats.hit_rate, stats.hits, stats.total);
    stat_rows.emplace_back(label, stats);

    for (const RunRecord& rec : records) {
      if (rec.best_mi != kDegenerateObjective) any_usable = true;
    }
  }
  plots::write_statistics_csv(out_dir / "statistics.csv", stat_rows);

  if (!any_usable) {
    std::cerr << "degenerate objective: no run produced a usable MI value\n";
    return kExitDegenerate;
  }
  return kExitOk;
}

// -------------------------------------------------------------------- sweep

int cmd_sweep(const CommonOptions& common,
              const std::vector<std::string>& axes, double range, int steps) {
  LoadedDataset data = load_dataset(common);
  const int axis_a = param_index(axes.at(0));
  const int axis_b = param_index(axes.at(1));
  const ExtrinsicParams center =
      data.manifest.ground_truth.value_or(ExtrinsicParams{});

  const auto sweep =
      mi_surface_sweep(data.ctx, center, axis_a, axis_b, range, steps);

  const fs::path out_dir(common.out_dir);
  fs::create_directories(out_dir);
  plots::write_sweep_csv(out_dir / "sweep.csv", sweep);
  plots::write_sweep_svg(out_dir / "sweep.svg", sweep);

  double best = kDegenerateObjective;
  for (double v : sweep.values) best = std::max(best, v);
  std::printf("sweep written: %d x %d grid, max MI %.9f\n", steps, steps,
              best);
  return best == kDegenerateObjective ? kExitDegenerate : kExitOk;
}

// -------------------------------------------------------------------- synth

int cmd_synth(const std::string& preset, int frames, uint64_t seed,
              double step_m, double noise_depth, double noise_dropout,
              double noise_intensity, const std::string& out_dir_str) {
  synth::SyntheticScene scene = synth::make_preset(preset, seed);
  scene.noise.depth_sigma = noise_depth;
  scene.noise.dropout = noise_dropout;
  scene.noise.intensity_sigma = noise_intensity;

  const CameraModel cam = synth::preset_camera();
  const ExtrinsicParams gt = synth::preset_ground_truth();

  const fs::path out_dir(out_dir_str);
  fs::create_directories(out_dir);

  auto write_manifest = [&](const std::string& name, const char* kind,
                            const char* image_prefix) {
    std::ofstream m(out_dir / name, std::ios::binary | std::ios::trunc);
    m << "# synthetic scene preset: " << preset << ", seed " << seed << "\n";
    m << "camera pinhole " << fmt(cam.fx()) << " " << fmt(cam.fy()) << " "
      << fmt(cam.cx()) << " " << fmt(cam.cy()) << " " << cam.width() << " "
      << cam.height() << "\n";
    m << "kind " << kind << "\n";
    m << "gt " << fmt(gt.theta_x) << " " << fmt(gt.theta_y) << " "
      << fmt(gt.theta_z) << " " << fmt(gt.tx) << " " << fmt(gt.ty) << " "
      << fmt(gt.tz) << "\n";
    for (int i = 0; i < frames; ++i) {
      char cloud[32], image[32];
      std::snprintf(cloud, sizeof(cloud), "cloud_%04d.bin", i);
      std::snprintf(image, sizeof(image), "%s_%04d.dmap", image_prefix, i);
      m << "frame " << i << " " << cloud << " " << image << "\n";
    }
  };

  for (int i = 0; i < frames; ++i) {
    const Vec3 rig(i * step_m, 0.0, 0.0);
    const synth::RenderedFrame rendered = synth::render_frame(
        scene, gt, cam, seed + static_cast<uint64_t>(i), rig);
    char cloud[32], depth[32], intensity[32];
    std::snprintf(cloud, sizeof(cloud), "cloud_%04d.bin", i);
    std::snprintf(depth, sizeof(depth), "depth_%04d.dmap", i);
    std::snprintf(intensity, sizeof(intensity), "intensity_%04d.dmap", i);
    io::save_pointcloud_bin(out_dir / cloud, rendered.cloud);
    io::save_depth_map(out_dir / depth, rendered.depth);
    io::save_depth_map(out_dir / intensity, rendered.intensity);
  }
  write_manifest("manifest.txt", "metric", "depth");
  write_manifest("manifest_i2i.txt", "intensity", "intensity");

  std::printf("wrote %d frames to %s\n", frames, out_dir.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target-free camera-LiDAR extrinsic calibration via "
               "mutual information"};
  app.require_subcommand(1);

  CommonOptions cal_common, eval_common, sweep_common;
  opt::OptimizerConfig cal_opt, eval_opt;

  // calibrate
  auto* cal = app.add_subcommand("calibrate",
                                 "Optimize extrinsics on a dataset manifest");
  add_common(cal, &cal_common);
  add_optimizer_flags(cal, &cal_opt);
  std::vector<double> cal_init;
  double cal_perturb_deg = 0.0, cal_perturb_cm = 0.0;
  int cal_perturb_index = 0, cal_perturb_count = 26, cal_dof = 6;
  bool cal_hist = false, cal_trace = false;
  cal->add_option("--init", cal_init,
                  "Initial guess: tx_deg ty_deg tz_deg tx_m ty_m tz_m")
      ->expected(6);
  cal->add_option("--perturb-deg", cal_perturb_deg,
                  "Perturb manifest gt by this rotation magnitude");
  cal->add_option("--perturb-cm", cal_perturb_cm,
                  "Perturb manifest gt by this translation magnitude");
  cal->add_option("--perturb-index", cal_perturb_index,
                  "Which perturbation direction to apply");
  cal->add_option("--perturb-count", cal_perturb_count,
                  "Size of the direction lattice")
      ->check(CLI::PositiveNumber);
  cal->add_option("--dof", cal_dof, "Optimize 3 (rotation) or 6 parameters")
      ->check(CLI::IsMember({3, 6}));
  cal->add_flag("--dump-histogram", cal_hist,
                "Write the joint histogram at the optimum");
  cal->add_flag("--trace", cal_trace, "Write a per-evaluation trace CSV");

  // evaluate
  auto* ev = app.add_subcommand(
      "evaluate", "Perturbation-recovery experiment against manifest gt");
  add_common(ev, &eval_common);
  add_optimizer_flags(ev, &eval_opt);
  std::vector<double> eval_levels{1.0, 2.0, 10.0};
  double eval_cm = 0.0;
  int eval_runs = 50, eval_dof = 3;
  uint64_t eval_seed = 0;
  std::vector<std::string> eval_axes{"theta_x", "theta_y"};
  ev->add_option("--error-deg", eval_levels,
                 "Rotation error levels in degrees (comma separated)")
      ->delimiter(',');
  ev->add_option("--error-cm", eval_cm,
                 "Translation error magnitude (6-DoF mode)");
  ev->add_option("--runs", eval_runs, "Runs per error level")
      ->check(CLI::PositiveNumber);
  ev->add_option("--dof", eval_dof, "3 or 6 degrees of freedom")
      ->check(CLI::IsMember({3, 6}));
  ev->add_option("--seed", eval_seed,
                 "Reserved for interface stability; the protocol is "
                 "deterministic");
  ev->add_option("--axes", eval_axes,
                 "Bull's-eye projection axes (two parameter names)")
      ->delimiter(',')
      ->expected(2);

  // sweep
  auto* sw = app.add_subcommand("sweep", "MI surface over a parameter pair");
  add_common(sw, &sweep_common);
  std::vector<std::string> sweep_axes{"theta_x", "theta_y"};
  double sweep_range = 10.0;
  int sweep_steps = 21;
  sw->add_option("--axes", sweep_axes, "Two parameter names")
      ->delimiter(',')
      ->expected(2);
  sw->add_option("--range", sweep_range,
                 "Half-range of offsets (degrees or meters per axis)");
  sw->add_option("--steps", sweep_steps, "Grid resolution per axis");

  // synth
  auto* sy = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string synth_preset = "boxes";
  int synth_frames = 25;
  uint64_t synth_seed = 42;
  double synth_step = 1.5;
  double synth_noise_depth = 0.02, synth_noise_dropout = 0.01,
         synth_noise_intensity = 0.05;
  std::string synth_out = default_out_dir().string();
  sy->add_option("--preset", synth_preset, "Scene preset name");
  sy->add_option("--frames", synth_frames, "Number of frames")
      ->check(CLI::PositiveNumber);
  sy->add_option("--seed", synth_seed, "Scene and noise seed");
  sy->add_option("--step", synth_step, "Rig advance per frame (meters)");
  sy->add_option("--noise-depth", synth_noise_depth,
                 "LiDAR range noise sigma (meters)");
  sy->add_option("--noise-dropout", synth_noise_dropout,
                 "LiDAR return dropout probability");
  sy->add_option("--noise-intensity", synth_noise_intensity,
                 "Intensity noise sigma (both sensors)");
  sy->add_option("--out", synth_out,
                 "Output directory (default: $MICALIB_OUT or .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (cal->parsed()) {
      return cmd_calibrate(cal_common, cal_opt, cal_init, cal_perturb_deg,
                           cal_perturb_cm, cal_perturb_index,
                           cal_perturb_count, cal_dof, cal_hist, cal_trace);
    }
    if (ev->parsed()) {
      if (eval_dof == 6 && !(eval_cm > 0.0)) {
        std::cerr << "error: 6-DoF evaluation needs --error-cm > 0\n";
        return kExitUsage;
      }
      return cmd_evaluate(eval_common, eval_opt, eval_levels, eval_cm,
                          eval_runs, eval_dof, eval_axes);
    }
    if (sw->parsed()) {
      return cmd_sweep(sweep_common, sweep_axes, sweep_range, sweep_steps);
    }
    if (sy->parsed()) {
      return cmd_synth(synth_preset, synth_frames, synth_seed, synth_step,
                       synth_noise_depth, synth_noise_dropout,
                       synth_noise_intensity, synth_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
