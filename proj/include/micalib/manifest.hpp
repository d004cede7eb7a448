#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "micalib/camera.hpp"
#include "micalib/features.hpp"
#include "micalib/geometry.hpp"

namespace micalib {

/// One dataset frame reference: a point cloud file plus its paired
/// camera feature image.
struct FrameEntry {
  std::string frame_id;
  std::filesystem::path cloud_path;
  std::filesystem::path image_path;
};

/// Parsed dataset description. Line-oriented text grammar:
///
///   camera pinhole <fx> <fy> <cx> <cy> <w> <h>
///   camera double_sphere <fx> <fy> <cx> <cy> <xi> <alpha> <w> <h>
///   kind metric|relative|intensity        (optional, default metric)
///   gt <tx_deg> <ty_deg> <tz_deg> <tx_m> <ty_m> <tz_m>   (optional)
///   frame <id> <cloud_path> <image_path>
///
/// Blank lines and lines starting with '#' are ignored. Relative paths
/// resolve against the manifest's directory.
struct DatasetManifest {
  std::filesystem::path base_dir;
  CameraModel camera;
  std::optional<ExtrinsicParams> ground_truth;
  FeatureKind image_kind = FeatureKind::MetricDepth;
  std::vector<FrameEntry> entries;
};

/// Parses and validates a manifest. Throws io::FormatError (with the
/// line number) on grammar violations, a missing camera line, or any
/// referenced file that does not exist.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Uniform selection of n indices out of L: round(i*(L-1)/(n-1)) for
/// i = 0..n-1; n = 1 picks index 0. Throws std::invalid_argument when
/// n < 1 or n > L.
std::vector<int> frame_sample_indices(int total, int n);

/// Loads one frame: cloud from disk, image from disk, image dimensions
/// checked against the camera. Relative-depth images are normalized to
/// [0, 1] here so downstream binning sees the documented range.
Frame load_frame(const DatasetManifest& manifest, int index);

/// Loads the n uniformly sampled frames of the manifest, in index order.
FrameSet sample_frames(const DatasetManifest& manifest, int n);

}  // namespace micalib
