#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "micalib/camera.hpp"
#include "micalib/geometry.hpp"

namespace micalib {

/// What a feature image's pixels measure.
enum class FeatureKind : uint8_t {
  MetricDepth = 0,    // meters
  RelativeDepth = 1,  // unitless, min-max normalized per frame before use
  Intensity = 2,      // grayscale in [0, 1]
};

/// A LiDAR scan: points in the LiDAR frame, optional per-point intensity
/// in [0, 1].
struct PointCloud {
  std::vector<Vec3> points;
  std::optional<std::vector<double>> intensity;

  size_t size() const { return points.size(); }
};

/// Dense per-pixel feature grid (depth or intensity), row-major.
/// A non-finite value marks an invalid pixel (e.g. sky in a depth map).
struct FeatureImage {
  int width = 0;
  int height = 0;
  FeatureKind kind = FeatureKind::MetricDepth;
  std::vector<float> values;  // width * height, row-major

  float at(int x, int y) const {
    return values[static_cast<size_t>(y) * width + x];
  }
  float& at(int x, int y) {
    return values[static_cast<size_t>(y) * width + x];
  }
  bool valid(int x, int y) const { return std::isfinite(at(x, y)); }

  /// Min-max rescale of the valid pixels to [0, 1]; the convention for
  /// relative-depth inputs before histogramming. A constant image maps
  /// to all zeros.
  void normalize_relative();
};

/// One time-synchronized (point cloud, feature image) pair.
struct Frame {
  PointCloud cloud;
  FeatureImage image;
  std::string frame_id;
};

using FrameSet = std::vector<Frame>;

/// Matched (LiDAR feature, camera feature) columns; equal length M <= K.
struct FeaturePairs {
  std::vector<double> lidar;
  std::vector<double> camera;

  size_t size() const { return lidar.size(); }
};

enum class FeatureMode { D2D, I2I };

struct MatchOptions {
  /// Depth features (LiDAR range and metric camera depth) are clipped to
  /// this range before binning.
  double max_depth = 80.0;
};

/// Euclidean distance of a point to the LiDAR frame origin.
inline double point_depth(const Vec3& p) { return p.norm(); }

/// Project the cloud through T and cam, pairing each accepted point's
/// LiDAR feature with the image value at the nearest pixel (round half
/// up). Points out of view, points whose rounded pixel falls off the
/// grid, and points landing on invalid pixels are dropped. Pair order
/// follows point order. Throws std::invalid_argument in I2I mode when
/// the cloud has no intensity, or if image dimensions do not match cam.
FeaturePairs get_matches(const RigidTransform& t, const CameraModel& cam,
                         const Frame& frame, FeatureMode mode,
                         const MatchOptions& opts = {});

}  // namespace micalib
