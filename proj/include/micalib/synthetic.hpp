#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "micalib/camera.hpp"
#include "micalib/features.hpp"
#include "micalib/geometry.hpp"

namespace micalib::synth {

/// Axis-aligned box with a diffuse albedo in [0, 1].
struct Surface {
  Vec3 lo;
  Vec3 hi;
  double albedo = 0.5;
};

/// Spinning-scanner ray layout: a set of elevation rings swept through
/// full 360 degree azimuth. Angles follow the LiDAR frame convention
/// x forward, y left, z up.
struct ScanPattern {
  int azimuth_steps = 900;
  std::vector<double> elevation_deg;
  double max_range = 80.0;

  /// 64 rings over [-24, +2] degrees, 900 azimuth steps, 80 m range.
  static ScanPattern kitti_like();
  /// Evenly spaced rings over [-24, +2] degrees at a chosen density.
  static ScanPattern uniform_rings(int rings, int azimuth_steps);
};

struct NoiseConfig {
  double depth_sigma = 0.02;      // meters along the ray
  double dropout = 0.01;          // per-return drop probability
  double intensity_sigma = 0.05;  // additive, per return and per pixel
  double angle_sigma_deg = 0.05;  // per-ray direction jitter (encoder/beam)
};

struct SyntheticScene {
  std::vector<Surface> surfaces;
  ScanPattern scan;
  NoiseConfig noise;
};

/// Deterministic scene presets. Surface albedos come from a random
/// stream separate from the geometry, so reflectance carries no
/// information about shape.
SyntheticScene make_preset(const std::string& name, uint64_t seed);
std::vector<std::string> preset_names();

/// One frame rendered against a shared world: the LiDAR cloud (sensor
/// frame, intensity = albedo scaled by incidence plus noise) and both
/// camera images from the pose implied by the extrinsics. Depth images
/// store radial distance from the camera center; pixels whose rays miss
/// every surface are NaN. Pinhole cameras only (throws
/// std::invalid_argument otherwise). Deterministic for a given seed.
struct RenderedFrame {
  PointCloud cloud;
  FeatureImage depth;
  FeatureImage intensity;
};

RenderedFrame render_frame(const SyntheticScene& scene,
                           const ExtrinsicParams& extrinsics,
                           const CameraModel& cam, uint64_t seed,
                           const Vec3& rig_position = Vec3::Zero());

/// render_frame reduced to a single Frame carrying the image matching
/// `kind` (metric depth or intensity).
Frame render_synthetic(const SyntheticScene& scene,
                       const ExtrinsicParams& extrinsics,
                       const CameraModel& cam, uint64_t seed,
                       FeatureKind kind,
                       const Vec3& rig_position = Vec3::Zero());

/// A short drive: `frames` renders with the rig advancing step_m along
/// +x between frames, per-frame seeds derived from `seed`.
FrameSet render_sequence(const SyntheticScene& scene,
                         const ExtrinsicParams& extrinsics,
                         const CameraModel& cam, uint64_t seed,
                         FeatureKind kind, int frames, double step_m);

/// Camera and ground truth used by the presets and the synth command.
CameraModel preset_camera();
ExtrinsicParams preset_ground_truth();

}  // namespace micalib::synth
