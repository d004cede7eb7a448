#pragma once

#include <Eigen/Core>
#include <vector>

namespace micalib {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vector6 = Eigen::Matrix<double, 6, 1>;

constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double deg) { return deg * (kPi / 180.0); }
constexpr double rad2deg(double rad) { return rad * (180.0 / kPi); }

/// Extrinsic parameter vector: Euler angles in degrees, translation in meters.
/// Angles are stored unwrapped; interpretation is modulo 360.
struct ExtrinsicParams {
  double theta_x = 0.0;  // deg
  double theta_y = 0.0;  // deg
  double theta_z = 0.0;  // deg
  double tx = 0.0;       // m
  double ty = 0.0;       // m
  double tz = 0.0;       // m

  Vector6 to_vector() const;
  static ExtrinsicParams from_vector(const Vector6& v);
};

/// Rigid SE(3) transform. rotation is orthonormal with det = +1.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  static RigidTransform identity() { return {}; }
};

// Right-handed canonical rotations, angle in radians.
Mat3 rot_x(double rad);
Mat3 rot_y(double rad);
Mat3 rot_z(double rad);

/// Build the LiDAR-to-camera transform from the parameter vector.
/// R = Rx(theta_x) * Ry(theta_y) * Rz(theta_z), angles taken in degrees.
RigidTransform params_to_transform(const ExtrinsicParams& params);

Vec3 transform_point(const RigidTransform& t, const Vec3& p);

/// Geodesic angle between two rotations in degrees, clamped to [0, 180].
double rotation_error_angle_deg(const Mat3& r_a, const Mat3& r_b);

/// n near-uniform unit vectors from the offset-free Fibonacci lattice
/// (z_i = 1 - (2i+1)/n, azimuth stepped by the golden angle).
/// Throws std::invalid_argument for n < 1.
std::vector<Vec3> fibonacci_sphere(int n);

}  // namespace micalib
