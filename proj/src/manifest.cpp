#include "micalib/manifest.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "micalib/io.hpp"

namespace micalib {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, int line,
                       const std::string& what) {
  throw io::FormatError("'" + path.string() + "' line " +
                        std::to_string(line) + ": " + what);
}

std::vector<double> parse_numbers(std::istringstream& ss, size_t count,
                                  const std::filesystem::path& path,
                                  int line, const char* what) {
  std::vector<double> out(count);
  for (size_t i = 0; i < count; ++i) {
    if (!(ss >> out[i])) {
      fail(path, line, std::string("expected ") + std::to_string(count) +
                           " numeric fields for " + what);
    }
  }
  return out;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw io::FormatError("cannot open manifest '" + path.string() + "'");
  }

  DatasetManifest manifest;
  manifest.base_dir = path.parent_path();
  bool have_camera = false;

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::istringstream ss(raw);
    std::string key;
    if (!(ss >> key) || key[0] == '#') continue;

    if (key == "camera") {
      std::string model;
      if (!(ss >> model)) fail(path, line_no, "missing camera model name");
      if (model == "pinhole") {
        const auto v = parse_numbers(ss, 6, path, line_no, "camera pinhole");
        manifest.camera = CameraModel::pinhole(
            v[0], v[1], v[2], v[3], static_cast<int>(v[4]),
            static_cast<int>(v[5]));
      } else if (model == "double_sphere") {
        const auto v =
            parse_numbers(ss, 8, path, line_no, "camera double_sphere");
        manifest.camera = CameraModel::double_sphere(
            v[0], v[1], v[2], v[3], v[4], v[5], static_cast<int>(v[6]),
            static_cast<int>(v[7]));
      } else {
        fail(path, line_no, "unknown camera model '" + model + "'");
      }
      have_camera = true;
    } else if (key == "kind") {
      std::string kind;
      if (!(ss >> kind)) fail(path, line_no, "missing kind value");
      if (kind == "metric") {
        manifest.image_kind = FeatureKind::MetricDepth;
      } else if (kind == "relative") {
        manifest.image_kind = FeatureKind::RelativeDepth;
      } else if (kind == "intensity") {
        manifest.image_kind = FeatureKind::Intensity;
      } else {
        fail(path, line_no, "unknown kind '" + kind + "'");
      }
    } else if (key == "gt") {
      const auto v = parse_numbers(ss, 6, path, line_no, "gt");
      manifest.ground_truth =
          ExtrinsicParams{v[0], v[1], v[2], v[3], v[4], v[5]};
    } else if (key == "frame") {
      FrameEntry entry;
      std::string cloud, image;
      if (!(ss >> entry.frame_id >> cloud >> image)) {
        fail(path, line_no, "frame needs <id> <cloud_path> <image_path>");
      }
      entry.cloud_path = manifest.base_dir / cloud;
      entry.image_path = manifest.base_dir / image;
      if (!std::filesystem::exists(entry.cloud_path)) {
        fail(path, line_no,
             "cloud file does not exist: " + entry.cloud_path.string());
      }
      if (!std::filesystem::exists(entry.image_path)) {
        fail(path, line_no,
             "image file does not exist: " + entry.image_path.string());
      }
      manifest.entries.push_back(std::move(entry));
    } else {
      fail(path, line_no, "unknown directive '" + key + "'");
    }
  }

  if (!have_camera) {
    throw io::FormatError("'" + path.string() + "': no camera line");
  }
  return manifest;
}

std::vector<int> frame_sample_indices(int total, int n) {
  if (n < 1) throw std::invalid_argument("frame sample count must be >= 1");
  if (n > total) {
    throw std::invalid_argument("requested " + std::to_string(n) +
                                " frames but only " + std::to_string(total) +
                                " available");
  }
  std::vector<int> indices;
  indices.reserve(n);
  if (n == 1) {
    indices.push_back(0);
    return indices;
  }
  for (int i = 0; i < n; ++i) {
    const double pos =
        static_cast<double>(i) * (total - 1) / static_cast<double>(n - 1);
    indices.push_back(static_cast<int>(std::lround(pos)));
  }
  return indices;
}

Frame load_frame(const DatasetManifest& manifest, int index) {
  const FrameEntry& entry = manifest.entries.at(static_cast<size_t>(index));
  Frame frame;
  frame.frame_id = entry.frame_id;
  frame.cloud = io::load_pointcloud_bin(entry.cloud_path);
  frame.image = io::load_depth_map(entry.image_path);
  if (frame.image.width != manifest.camera.width() ||
      frame.image.height != manifest.camera.height()) {
    throw io::FormatError(
        "'" + entry.image_path.string() + "': image is " +
        std::to_string(frame.image.width) + "x" +
        std::to_string(frame.image.height) + " but the camera expects " +
        std::to_string(manifest.camera.width()) + "x" +
        std::to_string(manifest.camera.height()));
  }
  if (frame.image.kind == FeatureKind::RelativeDepth) {
    frame.image.normalize_relative();
  }
  return frame;
}

FrameSet sample_frames(const DatasetManifest& manifest, int n) {
  const auto indices =
      frame_sample_indices(static_cast<int>(manifest.entries.size()), n);
  FrameSet frames;
  frames.reserve(indices.size());
  for (int idx : indices) frames.push_back(load_frame(manifest, idx));
  return frames;
}

}  // namespace micalib
