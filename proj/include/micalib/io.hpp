#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>

#include "micalib/features.hpp"

namespace micalib::io {

/// Malformed file contents (bad magic, truncation, impossible sizes).
/// Messages name the offending file and byte offset or field.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a KITTI-style Velodyne scan: consecutive little-endian float32
/// quadruples (x, y, z, intensity). Intensities are clamped to [0, 1].
/// Records containing non-finite values are skipped; the skip count is
/// written to *skipped when provided. Throws FormatError when the file
/// is missing or its length is not a multiple of 16 bytes.
PointCloud load_pointcloud_bin(const std::filesystem::path& path,
                               std::size_t* skipped = nullptr);

/// Inverse of load_pointcloud_bin. A cloud without intensities is
/// written with intensity 0 so the file stays loadable.
void save_pointcloud_bin(const std::filesystem::path& path,
                         const PointCloud& cloud);

/// Reads a DMAP feature image: magic "DMAP", u32 LE width, u32 LE
/// height, u8 kind (0 metric depth, 1 relative depth, 2 intensity),
/// then width*height float32 LE values in row-major order. NaN marks an
/// invalid pixel. Throws FormatError on bad magic, unknown kind, or a
/// payload that does not match the header dimensions.
FeatureImage load_depth_map(const std::filesystem::path& path);

/// Inverse of load_depth_map; the write-read cycle is bit-identical.
void save_depth_map(const std::filesystem::path& path,
                    const FeatureImage& image);

}  // namespace micalib::io
