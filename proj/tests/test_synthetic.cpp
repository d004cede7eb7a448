#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "micalib/mi.hpp"
#include "micalib/synthetic.hpp"

using namespace micalib;

namespace {

synth::NoiseConfig no_noise() {
  synth::NoiseConfig n;
  n.depth_sigma = 0.0;
  n.dropout = 0.0;
  n.intensity_sigma = 0.0;
  n.angle_sigma_deg = 0.0;
  return n;
}

// A single wall ahead of the rig, nothing else.
synth::SyntheticScene wall_scene(double x_near) {
  synth::SyntheticScene scene;
  synth::Surface wall;
  wall.lo = Vec3(x_near, -20.0, -5.0);
  wall.hi = Vec3(x_near + 1.0, 20.0, 5.0);
  wall.albedo = 0.6;
  scene.surfaces.push_back(wall);
  scene.scan = synth::ScanPattern::uniform_rings(5, 360);
  scene.noise = no_noise();
  return scene;
}

bool images_identical(const FeatureImage& a, const FeatureImage& b) {
  if (a.width != b.width || a.height != b.height || a.values.size() != b.values.size()) {
    return false;
  }
  for (size_t i = 0; i < a.values.size(); ++i) {
    const bool nan_a = std::isnan(a.values[i]);
    const bool nan_b = std::isnan(b.values[i]);
    if (nan_a != nan_b) return false;
    if (!nan_a && a.values[i] != b.values[i]) return false;
  }
  return true;
}

bool clouds_identical(const PointCloud& a, const PointCloud& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if ((a.points[i] - b.points[i]).norm() != 0.0) return false;
  }
  if (a.intensity.has_value() != b.intensity.has_value()) return false;
  if (a.intensity) {
    for (size_t i = 0; i < a.intensity->size(); ++i) {
      if ((*a.intensity)[i] != (*b.intensity)[i]) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("a forward ray returns the wall at its exact range") {
  // One ring at zero elevation, zero noise; the ring 0 firing phase is
  // zero, so ray 0 points exactly along +x and meets the wall at 10 m.
  synth::SyntheticScene scene = wall_scene(10.0);
  scene.scan.elevation_deg = {0.0};
  scene.scan.azimuth_steps = 4;

  const auto frame = synth::render_frame(scene, synth::preset_ground_truth(),
                                         synth::preset_camera(), 1);
  REQUIRE(frame.cloud.size() == 1);
  const Vec3 p = frame.cloud.points[0];
  CHECK(p.norm() == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(p.x() == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(std::abs(p.y()) < 1e-6);
  CHECK(std::abs(p.z()) < 1e-6);
}

TEST_CASE("the central pixel stores the axial distance to the wall") {
  // Integer principal point so pixel (cx, cy) is exactly the optical
  // axis. With the standard mounting the camera looks along world +x
  // from x = -0.10, so a wall front at x = 20 sits 20.1 m away.
  const CameraModel cam = CameraModel::pinhole(120, 120, 60, 45, 120, 90);
  const synth::SyntheticScene scene = wall_scene(20.0);
  const auto frame =
      synth::render_frame(scene, synth::preset_ground_truth(), cam, 1);
  const float center = frame.depth.at(60, 45);
  REQUIRE(std::isfinite(center));
  CHECK(center == doctest::Approx(20.1).epsilon(1e-6));
}

TEST_CASE("pixels whose rays miss every surface are invalid") {
  const CameraModel cam = CameraModel::pinhole(120, 120, 60, 45, 120, 90);
  synth::SyntheticScene scene = wall_scene(20.0);
  // Shrink the wall so edge rays miss it.
  scene.surfaces[0].lo = Vec3(20.0, -2.0, -2.0);
  scene.surfaces[0].hi = Vec3(21.0, 2.0, 2.0);
  const auto frame =
      synth::render_frame(scene, synth::preset_ground_truth(), cam, 1);
  CHECK(std::isfinite(frame.depth.at(60, 45)));
  CHECK(!std::isfinite(frame.depth.at(0, 0)));
  CHECK(!std::isfinite(frame.intensity.at(0, 0)));
}

TEST_CASE("rendering is deterministic for a fixed seed") {
  const synth::SyntheticScene scene = synth::make_preset("boxes", 11);
  const auto a = synth::render_frame(scene, synth::preset_ground_truth(),
                                     synth::preset_camera(), 42);
  const auto b = synth::render_frame(scene, synth::preset_ground_truth(),
                                     synth::preset_camera(), 42);
  CHECK(clouds_identical(a.cloud, b.cloud));
  CHECK(images_identical(a.depth, b.depth));
  CHECK(images_identical(a.intensity, b.intensity));

  const auto c = synth::render_frame(scene, synth::preset_ground_truth(),
                                     synth::preset_camera(), 43);
  CHECK(!clouds_identical(a.cloud, c.cloud));
}

TEST_CASE("lidar and camera depth agree up to baseline and pixel size") {
  // Zero noise, frontal wall: a matched pair's LiDAR range and camera
  // radial depth can differ by at most the sensor baseline (0.114 m)
  // plus the depth drift across half a pixel on this wall (under 0.1 m),
  // so 0.25 m bounds the discrepancy for this scene.
  const synth::SyntheticScene scene = wall_scene(15.0);
  const ExtrinsicParams gt = synth::preset_ground_truth();
  const Frame frame = synth::render_synthetic(
      scene, gt, synth::preset_camera(), 3, FeatureKind::MetricDepth);

  const FeaturePairs pairs = get_matches(params_to_transform(gt),
                                         synth::preset_camera(), frame,
                                         FeatureMode::D2D);
  REQUIRE(pairs.size() > 100);
  double worst = 0.0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    worst = std::max(worst, std::abs(pairs.lidar[i] - pairs.camera[i]));
  }
  CHECK(worst <= 0.25);
}

TEST_CASE("the objective peaks at the true rotation on a coarse grid") {
  const synth::SyntheticScene scene = synth::make_preset("boxes", 7);
  const ExtrinsicParams gt = synth::preset_ground_truth();
  const FrameSet frames = synth::render_sequence(
      scene, gt, synth::preset_camera(), 100, FeatureKind::MetricDepth, 5,
      1.5);

  MIObjectiveContext ctx;
  ctx.frames = &frames;
  ctx.cam = synth::preset_camera();
  ctx.binning =
      BinningConfig::for_mode(FeatureMode::D2D, FeatureKind::MetricDepth);

  double best = -1e18;
  int best_node = -1;
  int node = 0;
  for (double dx : {-2.0, 0.0, 2.0}) {
    for (double dy : {-2.0, 0.0, 2.0}) {
      for (double dz : {-2.0, 0.0, 2.0}) {
        ExtrinsicParams p = gt;
        p.theta_x += dx;
        p.theta_y += dy;
        p.theta_z += dz;
        const double v = objective(p, ctx);
        if (v > best) {
          best = v;
          best_node = node;
        }
        ++node;
      }
    }
  }
  CHECK(best_node == 13);  // the all-zero offset is node 13 of 27
}

TEST_CASE("scene presets are reproducible and seed-sensitive") {
  const auto a = synth::make_preset("boxes", 5);
  const auto b = synth::make_preset("boxes", 5);
  REQUIRE(a.surfaces.size() == b.surfaces.size());
  for (size_t i = 0; i < a.surfaces.size(); ++i) {
    CHECK((a.surfaces[i].lo - b.surfaces[i].lo).norm() == 0.0);
    CHECK((a.surfaces[i].hi - b.surfaces[i].hi).norm() == 0.0);
    CHECK(a.surfaces[i].albedo == b.surfaces[i].albedo);
  }

  const auto c = synth::make_preset("boxes", 6);
  bool any_difference = false;
  for (size_t i = 0; i < a.surfaces.size(); ++i) {
    if ((a.surfaces[i].lo - c.surfaces[i].lo).norm() != 0.0) {
      any_difference = true;
    }
  }
  CHECK(any_difference);
}

TEST_CASE("an unknown preset reports the available names") {
  CHECK_THROWS_AS(synth::make_preset("warehouse", 1), std::invalid_argument);
  try {
    synth::make_preset("warehouse", 1);
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    for (const auto& name : synth::preset_names()) {
      CHECK(msg.find(name) != std::string::npos);
    }
  }
  CHECK(!synth::preset_names().empty());
}

TEST_CASE("only pinhole cameras can be rendered") {
  const CameraModel ds =
      CameraModel::double_sphere(150, 150, 320, 240, 0.5, 0.5, 640, 480);
  const synth::SyntheticScene scene = wall_scene(10.0);
  CHECK_THROWS_AS(
      synth::render_frame(scene, synth::preset_ground_truth(), ds, 1),
      std::invalid_argument);
}

TEST_CASE("a rendered sequence advances the rig and numbers its frames") {
  const synth::SyntheticScene scene = synth::make_preset("street-canyon", 3);
  const FrameSet frames = synth::render_sequence(
      scene, synth::preset_ground_truth(), synth::preset_camera(), 50,
      FeatureKind::MetricDepth, 3, 2.0);
  REQUIRE(frames.size() == 3);
  CHECK(frames[0].frame_id == "0000");
  CHECK(frames[1].frame_id == "0001");
  CHECK(frames[2].frame_id == "0002");
  CHECK(!clouds_identical(frames[0].cloud, frames[1].cloud));
  CHECK(frames[0].image.kind == FeatureKind::MetricDepth);
}

TEST_CASE("render_synthetic selects the requested image channel") {
  const synth::SyntheticScene scene = wall_scene(12.0);
  const Frame depth = synth::render_synthetic(
      scene, synth::preset_ground_truth(), synth::preset_camera(), 2,
      FeatureKind::MetricDepth);
  const Frame intensity = synth::render_synthetic(
      scene, synth::preset_ground_truth(), synth::preset_camera(), 2,
      FeatureKind::Intensity);
  CHECK(depth.image.kind == FeatureKind::MetricDepth);
  CHECK(intensity.image.kind == FeatureKind::Intensity);
  CHECK(clouds_identical(depth.cloud, intensity.cloud));
}

TEST_CASE("intensities stay in the unit interval") {
  const synth::SyntheticScene scene = synth::make_preset("boxes", 19);
  const auto frame = synth::render_frame(scene, synth::preset_ground_truth(),
                                         synth::preset_camera(), 9);
  REQUIRE(frame.cloud.intensity.has_value());
  int out_of_range = 0;
  for (double v : *frame.cloud.intensity) {
    if (v < 0.0 || v > 1.0) ++out_of_range;
  }
  for (float v : frame.intensity.values) {
    if (std::isfinite(v) && (v < 0.0f || v > 1.0f)) ++out_of_range;
  }
  CHECK(out_of_range == 0);
  CHECK(!frame.cloud.intensity->empty());
}
