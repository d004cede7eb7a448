#include "micalib/features.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace micalib {

void FeatureImage::normalize_relative() {
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  for (float v : values) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) {
    for (float& v : values) {
      if (std::isfinite(v)) v = 0.0f;
    }
    return;
  }
  const float span = hi - lo;
  for (float& v : values) {
    if (std::isfinite(v)) v = (v - lo) / span;
  }
}

FeaturePairs get_matches(const RigidTransform& t, const CameraModel& cam,
                         const Frame& frame, FeatureMode mode,
                         const MatchOptions& opts) {
  if (frame.image.width != cam.width() || frame.image.height != cam.height()) {
    throw std::invalid_argument(
        "get_matches: feature image dimensions do not match camera model");
  }
  if (mode == FeatureMode::I2I && !frame.cloud.intensity.has_value()) {
    throw std::invalid_argument(
        "get_matches: I2I mode requires point cloud intensity");
  }

  const bool clip_camera = frame.image.kind == FeatureKind::MetricDepth;
  FeaturePairs pairs;
  pairs.lidar.reserve(frame.cloud.size());
  pairs.camera.reserve(frame.cloud.size());

  for (size_t i = 0; i < frame.cloud.points.size(); ++i) {
    const Vec3& p = frame.cloud.points[i];
    const auto px = cam.project(t.apply(p));
    if (!px) continue;

    // Nearest pixel, round half up. Rounding can push a coordinate in
    // [w-0.5, w) onto the nonexistent column w; those fall off the grid.
    const int ix = static_cast<int>(std::floor(px->u + 0.5));
    const int iy = static_cast<int>(std::floor(px->v + 0.5));
    if (ix < 0 || ix >= frame.image.width || iy < 0 ||
        iy >= frame.image.height) {
      continue;
    }
    if (!frame.image.valid(ix, iy)) continue;

    double lidar_feature;
    if (mode == FeatureMode::D2D) {
      // Range in the original LiDAR frame, not camera-frame depth.
      lidar_feature = std::min(point_depth(p), opts.max_depth);
    } else {
      lidar_feature = (*frame.cloud.intensity)[i];
    }

    double camera_feature = static_cast<double>(frame.image.at(ix, iy));
    if (clip_camera) camera_feature = std::min(camera_feature, opts.max_depth);

    pairs.lidar.push_back(lidar_feature);
    pairs.camera.push_back(camera_feature);
  }
  return pairs;
}

}  // namespace micalib
