#include "micalib/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace micalib::io {

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open '" + path.string() + "' for reading");
  }
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<unsigned char> buf(static_cast<size_t>(size));
  if (size > 0 &&
      !in.read(reinterpret_cast<char*>(buf.data()), size)) {
    throw FormatError("short read on '" + path.string() + "'");
  }
  return buf;
}

// Explicit little-endian decode keeps the formats byte-exact regardless
// of host conventions.
float read_f32le(const unsigned char* p) {
  uint32_t bits = static_cast<uint32_t>(p[0]) |
                  static_cast<uint32_t>(p[1]) << 8 |
                  static_cast<uint32_t>(p[2]) << 16 |
                  static_cast<uint32_t>(p[3]) << 24;
  return std::bit_cast<float>(bits);
}

uint32_t read_u32le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

void append_f32le(std::vector<unsigned char>& out, float v) {
  const uint32_t bits = std::bit_cast<uint32_t>(v);
  out.push_back(static_cast<unsigned char>(bits & 0xff));
  out.push_back(static_cast<unsigned char>(bits >> 8 & 0xff));
  out.push_back(static_cast<unsigned char>(bits >> 16 & 0xff));
  out.push_back(static_cast<unsigned char>(bits >> 24 & 0xff));
}

void append_u32le(std::vector<unsigned char>& out, uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8 & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 16 & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 24 & 0xff));
}

void write_all(const std::filesystem::path& path,
               const std::vector<unsigned char>& buf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError("cannot open '" + path.string() + "' for writing");
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) {
    throw FormatError("short write on '" + path.string() + "'");
  }
}

}  // namespace

PointCloud load_pointcloud_bin(const std::filesystem::path& path,
                               std::size_t* skipped) {
  const auto buf = read_all(path);
  if (buf.size() % 16 != 0) {
    throw FormatError("'" + path.string() + "': size " +
                      std::to_string(buf.size()) +
                      " bytes is not a multiple of 16 (truncated record at "
                      "offset " +
                      std::to_string(buf.size() - buf.size() % 16) + ")");
  }

  PointCloud cloud;
  const size_t count = buf.size() / 16;
  cloud.points.reserve(count);
  std::vector<double> intensity;
  intensity.reserve(count);
  size_t skip_count = 0;

  for (size_t i = 0; i < count; ++i) {
    const unsigned char* rec = buf.data() + 16 * i;
    const float x = read_f32le(rec);
    const float y = read_f32le(rec + 4);
    const float z = read_f32le(rec + 8);
    const float r = read_f32le(rec + 12);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) ||
        !std::isfinite(r)) {
      ++skip_count;
      continue;
    }
    cloud.points.emplace_back(x, y, z);
    intensity.push_back(std::clamp(static_cast<double>(r), 0.0, 1.0));
  }
  cloud.intensity = std::move(intensity);
  if (skipped) *skipped = skip_count;
  return cloud;
}

void save_pointcloud_bin(const std::filesystem::path& path,
                         const PointCloud& cloud) {
  std::vector<unsigned char> buf;
  buf.reserve(cloud.points.size() * 16);
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    append_f32le(buf, static_cast<float>(p.x()));
    append_f32le(buf, static_cast<float>(p.y()));
    append_f32le(buf, static_cast<float>(p.z()));
    const double r = cloud.intensity ? (*cloud.intensity)[i] : 0.0;
    append_f32le(buf, static_cast<float>(r));
  }
  write_all(path, buf);
}

FeatureImage load_depth_map(const std::filesystem::path& path) {
  const auto buf = read_all(path);
  constexpr size_t kHeader = 4 + 4 + 4 + 1;
  if (buf.size() < kHeader || std::memcmp(buf.data(), "DMAP", 4) != 0) {
    throw FormatError("'" + path.string() +
                      "': missing DMAP magic at offset 0");
  }
  const uint32_t width = read_u32le(buf.data() + 4);
  const uint32_t height = read_u32le(buf.data() + 8);
  const uint8_t kind = buf[12];
  if (kind > 2) {
    throw FormatError("'" + path.string() + "': unknown kind byte " +
                      std::to_string(kind) + " at offset 12");
  }
  const size_t expected = kHeader + 4ull * width * height;
  if (buf.size() != expected) {
    throw FormatError("'" + path.string() + "': payload is " +
                      std::to_string(buf.size() - kHeader) +
                      " bytes but " + std::to_string(width) + "x" +
                      std::to_string(height) + " needs " +
                      std::to_string(expected - kHeader));
  }

  FeatureImage img;
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.kind = static_cast<FeatureKind>(kind);
  img.values.resize(static_cast<size_t>(width) * height);
  for (size_t i = 0; i < img.values.size(); ++i) {
    img.values[i] = read_f32le(buf.data() + kHeader + 4 * i);
  }
  return img;
}

void save_depth_map(const std::filesystem::path& path,
                    const FeatureImage& image) {
  std::vector<unsigned char> buf;
  buf.reserve(13 + 4 * image.values.size());
  buf.insert(buf.end(), {'D', 'M', 'A', 'P'});
  append_u32le(buf, static_cast<uint32_t>(image.width));
  append_u32le(buf, static_cast<uint32_t>(image.height));
  buf.push_back(static_cast<unsigned char>(image.kind));
  for (float v : image.values) append_f32le(buf, v);
  write_all(path, buf);
}

}  // namespace micalib::io
