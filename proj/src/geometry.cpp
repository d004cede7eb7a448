#include "micalib/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace micalib {

Vector6 ExtrinsicParams::to_vector() const {
  Vector6 v;
  v << theta_x, theta_y, theta_z, tx, ty, tz;
  return v;
}

ExtrinsicParams ExtrinsicParams::from_vector(const Vector6& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Mat3 rot_x(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

Mat3 rot_y(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return r;
}

Mat3 rot_z(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return r;
}

RigidTransform params_to_transform(const ExtrinsicParams& params) {
  RigidTransform t;
  t.rotation = rot_x(deg2rad(params.theta_x)) * rot_y(deg2rad(params.theta_y)) *
               rot_z(deg2rad(params.theta_z));
  t.translation = Vec3(params.tx, params.ty, params.tz);
  return t;
}

Vec3 transform_point(const RigidTransform& t, const Vec3& p) {
  return t.apply(p);
}

double rotation_error_angle_deg(const Mat3& r_a, const Mat3& r_b) {
  const double trace = (r_a.transpose() * r_b).trace();
  const double c = std::clamp((trace - 1.0) / 2.0, -1.0, 1.0);
  return rad2deg(std::acos(c));
}

std::vector<Vec3> fibonacci_sphere(int n) {
  if (n < 1) {
    throw std::invalid_argument("fibonacci_sphere: n must be >= 1");
  }
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> points;
  points.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    points.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return points;
}

}  // namespace micalib
