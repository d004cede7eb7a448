#include "micalib/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>

#include "detail/rng.hpp"

namespace micalib::synth {

namespace {

struct RayHit {
  double t = 0.0;
  Vec3 normal = Vec3::Zero();
  double albedo = 0.0;
};

// Sun direction for camera-image shading, pointing from the scene
// toward the light: behind and above the rig, slightly to the left.
const Vec3 kSunDir = Vec3(-0.45, 0.25, 0.86).normalized();

// Nearest entry intersection of a ray with the scene boxes (slab test).
// Rays starting inside a box do not hit it; sensors sit in free space.
std::optional<RayHit> cast_ray(const std::vector<Surface>& surfaces,
                               const Vec3& origin, const Vec3& dir,
                               double max_range) {
  std::optional<RayHit> best;
  for (const Surface& s : surfaces) {
    double t_enter = -std::numeric_limits<double>::infinity();
    double t_exit = std::numeric_limits<double>::infinity();
    int enter_axis = -1;
    bool miss = false;
    for (int a = 0; a < 3 && !miss; ++a) {
      if (std::abs(dir(a)) < 1e-300) {
        if (origin(a) < s.lo(a) || origin(a) > s.hi(a)) miss = true;
        continue;
      }
      double t0 = (s.lo(a) - origin(a)) / dir(a);
      double t1 = (s.hi(a) - origin(a)) / dir(a);
      if (t0 > t1) std::swap(t0, t1);
      if (t0 > t_enter) {
        t_enter = t0;
        enter_axis = a;
      }
      t_exit = std::min(t_exit, t1);
    }
    if (miss || t_enter > t_exit || enter_axis < 0) continue;
    if (t_enter <= 1e-9 || t_enter > max_range) continue;
    if (!best || t_enter < best->t) {
      RayHit hit;
      hit.t = t_enter;
      hit.normal = Vec3::Zero();
      hit.normal(enter_axis) = dir(enter_axis) > 0.0 ? -1.0 : 1.0;
      hit.albedo = s.albedo;
      best = hit;
    }
  }
  return best;
}

}  // namespace

ScanPattern ScanPattern::kitti_like() { return uniform_rings(64, 900); }

ScanPattern ScanPattern::uniform_rings(int rings, int azimuth_steps) {
  ScanPattern p;
  p.azimuth_steps = azimuth_steps;
  p.elevation_deg.reserve(rings);
  for (int i = 0; i < rings; ++i) {
    const double frac = rings > 1 ? static_cast<double>(i) / (rings - 1) : 0.5;
    p.elevation_deg.push_back(-24.0 + frac * 26.0);
  }
  return p;
}

RenderedFrame render_frame(const SyntheticScene& scene,
                           const ExtrinsicParams& extrinsics,
                           const CameraModel& cam, uint64_t seed,
                           const Vec3& rig_position) {
  if (cam.kind() != CameraModel::Kind::Pinhole) {
    throw std::invalid_argument(
        "render_frame: only pinhole cameras are supported");
  }

  RenderedFrame out;
  const NoiseConfig& noise = scene.noise;

  // --- LiDAR sweep. The sensor frame shares the world orientation, so
  // the cloud is the hit set expressed relative to the rig position.
  detail::Rng lidar_rng(seed);
  std::vector<double> intensities;
  for (size_t ring = 0; ring < scene.scan.elevation_deg.size(); ++ring) {
    const double elev = deg2rad(scene.scan.elevation_deg[ring]);
    // Stagger the firing phase per ring (golden-ratio fraction of one
    // azimuth step, as spinning scanners do). Without it the cloud is a
    // perfect angular lattice and a yaw of one azimuth step maps the
    // projected pattern onto itself, rippling the MI surface.
    const double phase_turns = 0.6180339887498949 * static_cast<double>(ring);
    const double phase = phase_turns - std::floor(phase_turns);
    for (int a = 0; a < scene.scan.azimuth_steps; ++a) {
      double az = 2.0 * kPi * (a + phase) / scene.scan.azimuth_steps;
      double el = elev;
      if (noise.angle_sigma_deg > 0.0) {
        // Encoder and beam-pointing jitter. The measured point lies on
        // the true surface along the jittered direction, so this
        // dithers the sampling lattice without biasing the geometry.
        az += deg2rad(noise.angle_sigma_deg) * lidar_rng.gaussian();
        el += deg2rad(noise.angle_sigma_deg) * lidar_rng.gaussian();
      }
      const double ce_j = std::cos(el);
      const double se_j = std::sin(el);
      const Vec3 dir(ce_j * std::cos(az), ce_j * std::sin(az), se_j);
      const auto hit =
          cast_ray(scene.surfaces, rig_position, dir, scene.scan.max_range);
      if (!hit) continue;
      if (noise.dropout > 0.0 && lidar_rng.uniform() < noise.dropout) {
        continue;
      }
      double range = hit->t;
      if (noise.depth_sigma > 0.0) {
        range += noise.depth_sigma * lidar_rng.gaussian();
      }
      // Lambertian-style return strength: albedo scaled by incidence.
      double value = hit->albedo * std::abs(dir.dot(hit->normal));
      if (noise.intensity_sigma > 0.0) {
        value += noise.intensity_sigma * lidar_rng.gaussian();
      }
      out.cloud.points.push_back(dir * range);
      intensities.push_back(std::clamp(value, 0.0, 1.0));
    }
  }
  out.cloud.intensity = std::move(intensities);

  // --- Camera images. Extrinsics map LiDAR to camera coordinates, so
  // the camera center in the world is rig_position - R^T t and a pixel
  // ray direction d_cam becomes R^T d_cam.
  const RigidTransform t_cl = params_to_transform(extrinsics);
  const Mat3 r_lc = t_cl.rotation.transpose();
  const Vec3 cam_origin = rig_position - r_lc * t_cl.translation;

  const int w = cam.width();
  const int h = cam.height();
  out.depth.width = out.intensity.width = w;
  out.depth.height = out.intensity.height = h;
  out.depth.kind = FeatureKind::MetricDepth;
  out.intensity.kind = FeatureKind::Intensity;
  const float invalid = std::numeric_limits<float>::quiet_NaN();
  out.depth.values.assign(static_cast<size_t>(w) * h, invalid);
  out.intensity.values.assign(static_cast<size_t>(w) * h, invalid);

  detail::Rng cam_rng(seed ^ 0x517cc1b727220a95ULL);
  for (int iy = 0; iy < h; ++iy) {
    for (int ix = 0; ix < w; ++ix) {
      const Vec3 d_cam((ix - cam.cx()) / cam.fx(), (iy - cam.cy()) / cam.fy(),
                       1.0);
      const Vec3 dir = (r_lc * d_cam).normalized();
      const auto hit =
          cast_ray(scene.surfaces, cam_origin, dir, scene.scan.max_range);
      if (!hit) continue;
      const size_t idx = static_cast<size_t>(iy) * w + ix;
      out.depth.values[idx] = static_cast<float>(hit->t);
      // The camera measures illumination, not beam reflectance: a fixed
      // sun shades each face through its normal, while the LiDAR return
      // above depends on beam incidence. The two intensity channels
      // then share only the albedo factor, as they do on real rigs.
      const double lit = 0.25 + 0.75 * std::max(0.0, hit->normal.dot(kSunDir));
      double value = hit->albedo * lit;
      if (noise.intensity_sigma > 0.0) {
        value += noise.intensity_sigma * cam_rng.gaussian();
      }
      out.intensity.values[idx] =
          static_cast<float>(std::clamp(value, 0.0, 1.0));
    }
  }
  return out;
}

Frame render_synthetic(const SyntheticScene& scene,
                       const ExtrinsicParams& extrinsics,
                       const CameraModel& cam, uint64_t seed,
                       FeatureKind kind, const Vec3& rig_position) {
  RenderedFrame rendered =
      render_frame(scene, extrinsics, cam, seed, rig_position);
  Frame frame;
  frame.cloud = std::move(rendered.cloud);
  frame.image = kind == FeatureKind::Intensity ? std::move(rendered.intensity)
                                               : std::move(rendered.depth);
  return frame;
}

FrameSet render_sequence(const SyntheticScene& scene,
                         const ExtrinsicParams& extrinsics,
                         const CameraModel& cam, uint64_t seed,
                         FeatureKind kind, int frames, double step_m) {
  FrameSet out;
  out.reserve(static_cast<size_t>(frames));
  for (int i = 0; i < frames; ++i) {
    const Vec3 rig(i * step_m, 0.0, 0.0);
    Frame frame = render_synthetic(scene, extrinsics, cam,
                                   seed + static_cast<uint64_t>(i), kind, rig);
    char id[16];
    std::snprintf(id, sizeof(id), "%04d", i);
    frame.frame_id = id;
    out.push_back(std::move(frame));
  }
  return out;
}

SyntheticScene make_preset(const std::string& name, uint64_t seed) {
  // Geometry and albedo use separate streams: reflectance must carry no
  // information about shape, otherwise intensity features would encode
  // depth indirectly.
  detail::Rng geom(seed);
  detail::Rng shade(seed ^ 0xa3c59ac2f0136b21ULL);
  auto albedo = [&shade]() { return shade.uniform(0.05, 0.95); };

  SyntheticScene scene;
  scene.scan = ScanPattern::uniform_rings(40, 480);

  if (name == "boxes") {
    // Open ground with scattered crates and a far wall.
    scene.surfaces.push_back(
        {Vec3(-5.0, -25.0, -2.2), Vec3(70.0, 25.0, -2.0), albedo()});
    scene.surfaces.push_back(
        {Vec3(48.0, -20.0, -2.0), Vec3(49.0, 20.0, 8.0), albedo()});
    for (int i = 0; i < 10; ++i) {
      const double cx = geom.uniform(6.0, 44.0);
      const double cy = geom.uniform(-14.0, 14.0);
      const double hx = geom.uniform(0.6, 3.0);
      const double hy = geom.uniform(0.6, 3.0);
      const double height = geom.uniform(1.0, 6.0);
      scene.surfaces.push_back({Vec3(cx - hx, cy - hy, -2.0),
                                Vec3(cx + hx, cy + hy, -2.0 + height),
                                albedo()});
    }
    return scene;
  }

  if (name == "street-canyon") {
    // Two building walls flanking a road, an end wall, street clutter.
    scene.surfaces.push_back(
        {Vec3(-5.0, -25.0, -2.2), Vec3(70.0, 25.0, -2.0), albedo()});
    scene.surfaces.push_back(
        {Vec3(2.0, 7.0, -2.0), Vec3(60.0, 7.4, 6.0), albedo()});
    scene.surfaces.push_back(
        {Vec3(2.0, -7.4, -2.0), Vec3(60.0, -7.0, 6.0), albedo()});
    scene.surfaces.push_back(
        {Vec3(58.0, -7.0, -2.0), Vec3(59.0, 7.0, 6.0), albedo()});
    for (int i = 0; i < 8; ++i) {
      const double cx = geom.uniform(5.0, 50.0);
      const double side = geom.uniform() < 0.5 ? -1.0 : 1.0;
      const double cy = side * geom.uniform(4.2, 6.2);
      const double hx = geom.uniform(0.4, 1.2);
      const double hy = geom.uniform(0.4, 1.2);
      const double height = geom.uniform(0.8, 3.0);
      scene.surfaces.push_back({Vec3(cx - hx, cy - hy, -2.0),
                                Vec3(cx + hx, cy + hy, -2.0 + height),
                                albedo()});
    }
    return scene;
  }

  std::string known;
  for (const auto& p : preset_names()) {
    if (!known.empty()) known += ", ";
    known += p;
  }
  throw std::invalid_argument("unknown scene preset '" + name +
                              "' (available: " + known + ")");
}

std::vector<std::string> preset_names() { return {"boxes", "street-canyon"}; }

CameraModel preset_camera() {
  return CameraModel::pinhole(180.0, 180.0, 119.5, 89.5, 240, 180);
}

ExtrinsicParams preset_ground_truth() {
  // LiDAR x forward / y left / z up versus camera x right / y down /
  // z forward, plus a small mounting offset.
  return ExtrinsicParams{90.0, 0.0, 90.0, 0.02, -0.05, 0.10};
}

}  // namespace micalib::synth
