#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "micalib/experiments.hpp"
#include "micalib/plots.hpp"
#include "micalib/synthetic.hpp"

using namespace micalib;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "micalib_experiments_test";
  fs::create_directories(dir);
  return dir;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) {
    if (c == '\n') ++n;
  }
  return n;
}

int count_occurrences(const std::string& text, const std::string& needle) {
  int n = 0;
  size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

ExtrinsicParams make_params(double a, double b, double c, double x, double y,
                            double z) {
  ExtrinsicParams p;
  p.theta_x = a;
  p.theta_y = b;
  p.theta_z = c;
  p.tx = x;
  p.ty = y;
  p.tz = z;
  return p;
}

double rotation_norm(const ExtrinsicParams& p) {
  return std::sqrt(p.theta_x * p.theta_x + p.theta_y * p.theta_y +
                   p.theta_z * p.theta_z);
}

double translation_norm(const ExtrinsicParams& p) {
  return std::sqrt(p.tx * p.tx + p.ty * p.ty + p.tz * p.tz);
}

// Small shared scene: a handful of frames keeps each optimization cheap
// while staying informative enough to recover small perturbations.
struct MiniDataset {
  FrameSet frames;
  MIObjectiveContext ctx;
  ExtrinsicParams gt;
};

const MiniDataset& mini_dataset() {
  static const MiniDataset data = [] {
    MiniDataset d;
    d.gt = synth::preset_ground_truth();
    const synth::SyntheticScene scene = synth::make_preset("boxes", 301);
    d.frames = synth::render_sequence(scene, d.gt, synth::preset_camera(),
                                      900, FeatureKind::MetricDepth, 5, 1.5);
    d.ctx.frames = &d.frames;
    d.ctx.cam = synth::preset_camera();
    d.ctx.binning =
        BinningConfig::for_mode(FeatureMode::D2D, FeatureKind::MetricDepth);
    return d;
  }();
  return data;
}

}  // namespace

TEST_CASE("perturbation deltas have the requested magnitudes") {
  const auto rot_only = generate_perturbations(PerturbationMode::RotationOnly,
                                               2.0, 0.1, 26);
  REQUIRE(rot_only.deltas.size() == 26);
  CHECK(rot_only.translation_m == 0.0);
  for (const auto& d : rot_only.deltas) {
    CHECK(rotation_norm(d) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(translation_norm(d) == 0.0);
  }

  const auto full = generate_perturbations(
      PerturbationMode::RotationTranslation, 0.5, 0.25, 50);
  REQUIRE(full.deltas.size() == 50);
  for (const auto& d : full.deltas) {
    CHECK(rotation_norm(d) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(translation_norm(d) == doctest::Approx(0.25).epsilon(1e-9));
  }
}

TEST_CASE("6-dof deltas reuse the rotation direction for translation") {
  const auto batch = generate_perturbations(
      PerturbationMode::RotationTranslation, 2.0, 0.5, 20);
  for (const auto& d : batch.deltas) {
    // Components must be proportional: rot/2 == trans/0.5 per axis.
    CHECK(d.theta_x / 2.0 == doctest::Approx(d.tx / 0.5).epsilon(1e-12));
    CHECK(d.theta_y / 2.0 == doctest::Approx(d.ty / 0.5).epsilon(1e-12));
    CHECK(d.theta_z / 2.0 == doctest::Approx(d.tz / 0.5).epsilon(1e-12));
  }
}

TEST_CASE("zero-magnitude perturbations are identity deltas") {
  const auto batch =
      generate_perturbations(PerturbationMode::RotationOnly, 0.0, 0.0, 5);
  for (const auto& d : batch.deltas) {
    CHECK(rotation_norm(d) == 0.0);
    CHECK(translation_norm(d) == 0.0);
  }
}

TEST_CASE("perturbation directions are pairwise distinct") {
  const auto batch =
      generate_perturbations(PerturbationMode::RotationOnly, 1.0, 0.0, 200);
  REQUIRE(batch.directions.size() == 200);
  double min_sep = 1e9;
  for (size_t i = 0; i < batch.directions.size(); ++i) {
    // The lattice orders points by z, so near neighbors in index are
    // near neighbors on the sphere; a window captures the closest pair.
    for (size_t j = i + 1; j < std::min(batch.directions.size(), i + 30);
         ++j) {
      min_sep =
          std::min(min_sep, (batch.directions[i] - batch.directions[j]).norm());
    }
  }
  CHECK(min_sep > 1e-6);
}

TEST_CASE("perturbation argument validation") {
  CHECK_THROWS_AS(
      generate_perturbations(PerturbationMode::RotationOnly, 1.0, 0.0, 0),
      std::invalid_argument);
  CHECK_THROWS_AS(
      generate_perturbations(PerturbationMode::RotationOnly, -1.0, 0.0, 5),
      std::invalid_argument);
  CHECK_THROWS_AS(generate_perturbations(
                      PerturbationMode::RotationTranslation, 1.0, -0.1, 5),
                  std::invalid_argument);
}

TEST_CASE("applying a perturbation adds componentwise") {
  const ExtrinsicParams gt = make_params(90, 0, 90, 0.02, -0.05, 0.10);
  const ExtrinsicParams delta = make_params(1, -2, 3, 0.01, 0.02, -0.03);
  const ExtrinsicParams init = apply_perturbation(gt, delta);
  CHECK(init.theta_x == doctest::Approx(91.0));
  CHECK(init.theta_y == doctest::Approx(-2.0));
  CHECK(init.theta_z == doctest::Approx(93.0));
  CHECK(init.tx == doctest::Approx(0.03));
  CHECK(init.ty == doctest::Approx(-0.03));
  CHECK(init.tz == doctest::Approx(0.07));

  // Adding and subtracting the same delta returns to the start.
  const ExtrinsicParams back = apply_perturbation(
      init, make_params(-delta.theta_x, -delta.theta_y, -delta.theta_z,
                        -delta.tx, -delta.ty, -delta.tz));
  CHECK((back.to_vector() - gt.to_vector()).norm() < 1e-12);
}

TEST_CASE("hit thresholds are strict") {
  CHECK(hit_decision(0.4, 0.10));
  CHECK(!hit_decision(0.6, 0.0));
  CHECK(!hit_decision(0.5, 0.0));   // exactly on the rotation threshold
  CHECK(hit_decision(0.0, 0.19));
  CHECK(!hit_decision(0.0, 0.20));  // exactly on the translation threshold
  CHECK(hit_decision(0.49, 0.19));
  CHECK(!hit_decision(0.51, 0.19));
}

TEST_CASE("the hit metric measures geodesic and euclidean residuals") {
  const ExtrinsicParams gt = make_params(90, 0, 90, 0.02, -0.05, 0.10);

  ExtrinsicParams near_rot = gt;
  near_rot.theta_x += 0.4;
  CHECK(hit_metric(near_rot, gt));

  ExtrinsicParams far_rot = gt;
  far_rot.theta_x += 0.6;
  CHECK(!hit_metric(far_rot, gt));

  ExtrinsicParams near_trans = gt;
  near_trans.tx += 0.19;
  CHECK(hit_metric(near_trans, gt));

  ExtrinsicParams far_trans = gt;
  far_trans.ty += 0.21;
  CHECK(!hit_metric(far_trans, gt));

  CHECK(hit_metric(gt, gt));
}

TEST_CASE("batch statistics match a hand-computed example") {
  const ExtrinsicParams gt = make_params(0, 0, 0, 0, 0, 0);
  std::vector<RunRecord> records(4);
  for (auto& rec : records) rec.ground_truth = gt;

  records[0].optimized = make_params(0.1, 0, 0, 0.01, 0, 0);
  records[0].hit = true;
  records[1].optimized = make_params(0.3, 0, 0, 0.03, 0, 0);
  records[1].hit = true;
  records[2].optimized = make_params(5.0, 0, 0, 1.0, 0, 0);
  records[2].hit = false;  // excluded from the residual statistics
  records[3].optimized = make_params(0.2, 0, 0, 0.02, 0, 0);
  records[3].hit = true;

  const BatchStatistics stats = batch_statistics(records);
  CHECK(stats.total == 4);
  CHECK(stats.hits == 3);
  CHECK(stats.hit_rate == doctest::Approx(0.75));
  REQUIRE(stats.mean.has_value());
  REQUIRE(stats.stddev.has_value());
  CHECK((*stats.mean)[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK((*stats.mean)[3] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK((*stats.mean)[1] == doctest::Approx(0.0));
  // Sample standard deviation of {0.1, 0.3, 0.2} is exactly 0.1.
  CHECK((*stats.stddev)[0] == doctest::Approx(0.1).epsilon(1e-9));
  CHECK((*stats.stddev)[3] == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("statistics handle empty and tiny hit sets") {
  std::vector<RunRecord> none;
  const BatchStatistics empty = batch_statistics(none);
  CHECK(empty.total == 0);
  CHECK(empty.hits == 0);
  CHECK(empty.hit_rate == 0.0);
  CHECK(!empty.mean.has_value());
  CHECK(!empty.stddev.has_value());

  std::vector<RunRecord> misses(3);
  const BatchStatistics no_hits = batch_statistics(misses);
  CHECK(no_hits.total == 3);
  CHECK(no_hits.hits == 0);
  CHECK(!no_hits.mean.has_value());

  std::vector<RunRecord> one(1);
  one[0].optimized = make_params(0.2, 0, 0, 0, 0, 0);
  one[0].hit = true;
  const BatchStatistics single = batch_statistics(one);
  CHECK(single.hits == 1);
  REQUIRE(single.mean.has_value());
  CHECK((*single.mean)[0] == doctest::Approx(0.2));
  CHECK(!single.stddev.has_value());
}

TEST_CASE("identical residuals have zero spread") {
  std::vector<RunRecord> records(3);
  for (auto& rec : records) {
    rec.optimized = make_params(0.1, -0.1, 0, 0.01, 0, 0);
    rec.hit = true;
  }
  const BatchStatistics stats = batch_statistics(records);
  REQUIRE(stats.stddev.has_value());
  // Rounding in the mean leaves residuals near 1e-17, so allow that much.
  for (int k = 0; k < 6; ++k) CHECK((*stats.stddev)[k] < 1e-15);
}

TEST_CASE("parameter names cover the six axes") {
  CHECK(std::string(param_name(0)) == "theta_x");
  CHECK(std::string(param_name(2)) == "theta_z");
  CHECK(std::string(param_name(3)) == "tx");
  CHECK(std::string(param_name(5)) == "tz");
  CHECK_THROWS_AS(param_name(6), std::invalid_argument);
  CHECK_THROWS_AS(param_name(-1), std::invalid_argument);
}

TEST_CASE("refinement rejects unsupported dof") {
  const MiniDataset& data = mini_dataset();
  opt::OptimizerConfig config;
  CHECK_THROWS_AS(refine_extrinsics(data.ctx, data.gt, 2, config, {}, 30.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(refine_extrinsics(data.ctx, data.gt, 4, config, {}, 30.0),
                  std::invalid_argument);
}

TEST_CASE("refinement never loses objective value") {
  const MiniDataset& data = mini_dataset();
  ExtrinsicParams init = data.gt;
  init.theta_y += 1.0;

  opt::OptimizerConfig config;
  config.max_evaluations = 250;
  const RefineResult res =
      refine_extrinsics(data.ctx, init, 3, config, {}, 30.0);
  CHECK(res.mi >= objective(init, data.ctx));
  CHECK(res.evaluations > 0);

  // Pinned parameters must not move in 3-DoF mode.
  CHECK(res.params.tx == init.tx);
  CHECK(res.params.ty == init.ty);
  CHECK(res.params.tz == init.tz);
}

TEST_CASE("a small recovery batch behaves consistently") {
  const MiniDataset& data = mini_dataset();
  const auto batch =
      generate_perturbations(PerturbationMode::RotationOnly, 1.0, 0.0, 4);

  BatchOptions opts;
  opts.dof = 3;
  opts.threads = 1;

  const auto records = run_batch(data.ctx, data.gt, batch, opts);
  REQUIRE(records.size() == 4);

  for (const auto& rec : records) {
    // Stored flags must agree with recomputing the metric.
    CHECK(rec.hit == hit_metric(rec.optimized, rec.ground_truth));
    // The optimizer starts at the perturbed pose, so a successful run
    // can only improve on the initial objective value.
    if (rec.hit) {
      CHECK(rec.best_mi >= objective(rec.initial, data.ctx));
    }
    CHECK(rec.evaluations > 0);
    CHECK((rec.ground_truth.to_vector() - data.gt.to_vector()).norm() == 0.0);
  }

  // Zero-magnitude perturbations start at the truth and must stay there.
  const auto zero_batch =
      generate_perturbations(PerturbationMode::RotationOnly, 0.0, 0.0, 2);
  const auto zero_records = run_batch(data.ctx, data.gt, zero_batch, opts);
  for (const auto& rec : zero_records) {
    CHECK(rec.hit);
  }
}

TEST_CASE("batch records are independent of the thread count") {
  const MiniDataset& data = mini_dataset();
  const auto batch =
      generate_perturbations(PerturbationMode::RotationOnly, 1.0, 0.0, 3);

  BatchOptions serial;
  serial.threads = 1;
  BatchOptions parallel;
  parallel.threads = 4;

  const auto a = run_batch(data.ctx, data.gt, batch, serial);
  const auto b = run_batch(data.ctx, data.gt, batch, parallel);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].hit == b[i].hit);
    CHECK(a[i].best_mi == b[i].best_mi);
    CHECK(a[i].evaluations == b[i].evaluations);
    CHECK((a[i].optimized.to_vector() - b[i].optimized.to_vector()).norm() ==
          0.0);
  }
}

TEST_CASE("run_batch validates dof") {
  const MiniDataset& data = mini_dataset();
  const auto batch =
      generate_perturbations(PerturbationMode::RotationOnly, 1.0, 0.0, 1);
  BatchOptions opts;
  opts.dof = 5;
  CHECK_THROWS_AS(run_batch(data.ctx, data.gt, batch, opts),
                  std::invalid_argument);
}

TEST_CASE("surface sweeps are centered and validated") {
  const MiniDataset& data = mini_dataset();

  const SweepResult sweep =
      mi_surface_sweep(data.ctx, data.gt, 0, 2, 2.0, 3);
  REQUIRE(sweep.offsets.size() == 3);
  REQUIRE(sweep.values.size() == 9);
  CHECK(sweep.offsets[0] == doctest::Approx(-2.0));
  CHECK(sweep.offsets[1] == doctest::Approx(0.0));
  CHECK(sweep.offsets[2] == doctest::Approx(2.0));
  // The grid center is the unshifted pose.
  CHECK(sweep.values[4] == objective(data.gt, data.ctx));

  CHECK_THROWS_AS(mi_surface_sweep(data.ctx, data.gt, 0, 2, 2.0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(mi_surface_sweep(data.ctx, data.gt, 2, 2, 2.0, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(mi_surface_sweep(data.ctx, data.gt, 0, 6, 2.0, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(mi_surface_sweep(data.ctx, data.gt, 0, 2, 0.0, 3),
                  std::invalid_argument);
}

TEST_CASE("csv reports round-trip their key fields") {
  std::vector<RunRecord> records(2);
  records[0].ground_truth = make_params(90, 0, 90, 0.02, -0.05, 0.10);
  records[0].initial = make_params(91, 1, 89, 0.02, -0.05, 0.10);
  records[0].optimized = make_params(90.001, 0.002, 89.999, 0.02, -0.05, 0.10);
  records[0].best_mi = 1.2345678901234567;
  records[0].evaluations = 123;
  records[0].hit = true;
  records[1] = records[0];
  records[1].hit = false;
  records[1].best_mi = -0.5;

  const fs::path path = scratch_dir() / "records.csv";
  plots::write_records_csv(path, records);
  const std::string text = read_text(path);
  CHECK(count_lines(text) == 3);  // header plus one row per record
  CHECK(text.find("run_index,hit,evaluations,best_mi") == 0);
  CHECK(text.find("init_theta_x") != std::string::npos);
  CHECK(text.find("gt_tz") != std::string::npos);

  // Full-precision serialization: the stored MI parses back exactly.
  std::istringstream rows(text);
  std::string line;
  std::getline(rows, line);  // header
  std::getline(rows, line);
  size_t pos = 0;
  for (int comma = 0; comma < 3; ++comma) pos = line.find(',', pos) + 1;
  const double parsed = std::strtod(line.c_str() + pos, nullptr);
  CHECK(parsed == records[0].best_mi);
}

TEST_CASE("statistics csv marks absent values with dashes") {
  std::vector<RunRecord> misses(2);
  const BatchStatistics none = batch_statistics(misses);

  std::vector<RunRecord> wins(2);
  for (auto& rec : wins) {
    rec.optimized = make_params(0.1, 0, 0, 0, 0, 0);
    rec.hit = true;
  }
  const BatchStatistics some = batch_statistics(wins);

  const fs::path path = scratch_dir() / "statistics.csv";
  plots::write_statistics_csv(path, {{"10deg", none}, {"1deg", some}});
  const std::string text = read_text(path);
  CHECK(count_lines(text) == 3);
  CHECK(text.find("label,total,hits,hit_rate") == 0);
  CHECK(text.find("10deg,2,0,0,-,-") != std::string::npos);
  CHECK(text.find("1deg,2,2,1,") != std::string::npos);
  // The all-hit row carries numbers, not dashes.
  const size_t win_row = text.find("1deg,");
  CHECK(text.find("-,", win_row) == std::string::npos);
}

TEST_CASE("sweep csv has one row per grid node") {
  const MiniDataset& data = mini_dataset();
  const SweepResult sweep =
      mi_surface_sweep(data.ctx, data.gt, 0, 1, 1.0, 3);
  const fs::path path = scratch_dir() / "sweep.csv";
  plots::write_sweep_csv(path, sweep);
  const std::string text = read_text(path);
  CHECK(count_lines(text) == 1 + 9);
  CHECK(text.find("offset_theta_x,offset_theta_y,mi") == 0);

  const fs::path svg_path = scratch_dir() / "sweep.svg";
  plots::write_sweep_svg(svg_path, sweep);
  const std::string svg = read_text(svg_path);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.rfind("</svg>") != std::string::npos);
  // Heat map: one cell per node plus the background rectangle.
  CHECK(count_occurrences(svg, "<rect") == 1 + 9);
}

TEST_CASE("bullseye outputs pair endpoints per record") {
  std::vector<RunRecord> records(3);
  for (size_t i = 0; i < records.size(); ++i) {
    records[i].ground_truth = make_params(90, 0, 90, 0.02, -0.05, 0.10);
    records[i].initial = make_params(90 + 1.0 + i, 0, 90 - 1.0, 0.02, -0.05,
                                     0.10);
    records[i].optimized = make_params(90 + 0.01 * i, 0.0, 90.0, 0.02, -0.05,
                                       0.10);
    records[i].hit = (i != 2);
  }

  const fs::path csv_path = scratch_dir() / "bullseye.csv";
  plots::write_bullseye_csv(csv_path, records, 0, 2);
  const std::string text = read_text(csv_path);
  CHECK(count_lines(text) == 1 + 2 * 3);
  CHECK(text.find("run_index,endpoint,residual_theta_x,residual_theta_z,hit") ==
        0);
  CHECK(count_occurrences(text, "initial") >= 3);
  CHECK(count_occurrences(text, "optimized") == 3);

  const fs::path svg_path = scratch_dir() / "bullseye.svg";
  plots::write_bullseye_svg(svg_path, records, 0, 2);
  const std::string svg = read_text(svg_path);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.rfind("</svg>") != std::string::npos);
  // Exactly one connecting segment per record; rings and axes are not
  // drawn as <line> elements.
  CHECK(count_occurrences(svg, "<line") == 3);
  CHECK(count_occurrences(svg, "<circle") >= 3);
}
