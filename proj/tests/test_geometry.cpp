#include <doctest.h>

#include <Eigen/LU>

#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "micalib/geometry.hpp"

using namespace micalib;

namespace {

ExtrinsicParams random_params(std::mt19937& rng) {
  std::uniform_real_distribution<double> angle(-180.0, 180.0);
  std::uniform_real_distribution<double> trans(-2.0, 2.0);
  ExtrinsicParams p;
  p.theta_x = angle(rng);
  p.theta_y = angle(rng);
  p.theta_z = angle(rng);
  p.tx = trans(rng);
  p.ty = trans(rng);
  p.tz = trans(rng);
  return p;
}

}  // namespace

TEST_CASE("canonical rotations act on basis vectors as right-handed turns") {
  const Mat3 rx = rot_x(deg2rad(90.0));
  CHECK((rx * Vec3(0, 1, 0) - Vec3(0, 0, 1)).norm() == doctest::Approx(0.0));
  CHECK((rx * Vec3(0, 0, 1) - Vec3(0, -1, 0)).norm() == doctest::Approx(0.0));

  const Mat3 ry = rot_y(deg2rad(90.0));
  CHECK((ry * Vec3(0, 0, 1) - Vec3(1, 0, 0)).norm() == doctest::Approx(0.0));

  const Mat3 rz = rot_z(deg2rad(90.0));
  CHECK((rz * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm() == doctest::Approx(0.0));
}

TEST_CASE("params_to_transform identity case") {
  const RigidTransform t = params_to_transform(ExtrinsicParams{});
  CHECK((t.rotation - Mat3::Identity()).norm() == 0.0);
  CHECK(t.translation.norm() == 0.0);
}

TEST_CASE("params_to_transform rotates (0,1,0) to (0,0,1) for 90 deg about x") {
  ExtrinsicParams p;
  p.theta_x = 90.0;
  const RigidTransform t = params_to_transform(p);
  CHECK((t.apply(Vec3(0, 1, 0)) - Vec3(0, 0, 1)).norm() < 1e-12);
}

TEST_CASE("params_to_transform composes Rx then Ry in that order") {
  ExtrinsicParams p;
  p.theta_x = 90.0;
  p.theta_y = 90.0;
  const RigidTransform t = params_to_transform(p);
  const Mat3 expected = rot_x(deg2rad(90.0)) * rot_y(deg2rad(90.0));
  CHECK((t.rotation - expected).norm() < 1e-15);

  // Composing them in the opposite order gives a different matrix, so
  // the check above pins the order rather than passing by accident.
  const Mat3 swapped = rot_y(deg2rad(90.0)) * rot_x(deg2rad(90.0));
  CHECK((t.rotation - swapped).norm() > 0.5);
}

TEST_CASE("params_to_transform matches explicitly multiplied canonical factors") {
  std::mt19937 rng(7);
  for (int i = 0; i < 100; ++i) {
    const ExtrinsicParams p = random_params(rng);
    const RigidTransform t = params_to_transform(p);
    const Mat3 expected = rot_x(deg2rad(p.theta_x)) *
                          rot_y(deg2rad(p.theta_y)) *
                          rot_z(deg2rad(p.theta_z));
    CHECK((t.rotation - expected).norm() < 1e-12);
    CHECK((t.translation - Vec3(p.tx, p.ty, p.tz)).norm() == 0.0);
  }
}

TEST_CASE("rotations from random params are orthonormal with det +1") {
  std::mt19937 rng(11);
  for (int i = 0; i < 10000; ++i) {
    const Mat3 r = params_to_transform(random_params(rng)).rotation;
    CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-9);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("pure translation keeps the rotation exactly identity") {
  ExtrinsicParams p;
  p.tx = 1.0;
  p.ty = -2.0;
  p.tz = 0.25;
  const RigidTransform t = params_to_transform(p);
  CHECK((t.rotation - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("transform_point applies R p + t") {
  CHECK((transform_point(RigidTransform::identity(), Vec3(1, 2, 3)) -
         Vec3(1, 2, 3))
            .norm() == 0.0);

  RigidTransform shift;
  shift.translation = Vec3(0, 0, 5);
  CHECK((transform_point(shift, Vec3(1, 1, 1)) - Vec3(1, 1, 6)).norm() == 0.0);
}

TEST_CASE("inverse transform round-trips random points") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> coord(-10.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const RigidTransform t = params_to_transform(random_params(rng));
    const RigidTransform inv = t.inverse();
    const Vec3 p(coord(rng), coord(rng), coord(rng));
    CHECK((transform_point(inv, transform_point(t, p)) - p).norm() < 1e-9);
  }
}

TEST_CASE("rotation error is zero for equal rotations") {
  const Mat3 r = params_to_transform({10, 20, 30, 0, 0, 0}).rotation;
  CHECK(rotation_error_angle_deg(r, r) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("rotation error recovers a known axis angle") {
  const Mat3 r_a = params_to_transform({35, -10, 70, 0, 0, 0}).rotation;
  const Mat3 r_b = r_a * rot_x(deg2rad(10.0));
  CHECK(rotation_error_angle_deg(r_a, r_b) ==
        doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("rotation error is symmetric in its arguments") {
  std::mt19937 rng(31);
  for (int i = 0; i < 50; ++i) {
    const Mat3 r_a = params_to_transform(random_params(rng)).rotation;
    const Mat3 r_b = params_to_transform(random_params(rng)).rotation;
    const double ab = rotation_error_angle_deg(r_a, r_b);
    const double ba = rotation_error_angle_deg(r_b, r_a);
    CHECK(std::abs(ab - ba) < 1e-9);
  }
}

TEST_CASE("rotation error stays clamped at the 180 degree antipode") {
  const Mat3 r = rot_x(kPi);
  const double err = rotation_error_angle_deg(Mat3::Identity(), r);
  CHECK(err == doctest::Approx(180.0).epsilon(1e-9));
  CHECK(std::isfinite(err));
}

TEST_CASE("fibonacci_sphere rejects n below one") {
  CHECK_THROWS_AS(fibonacci_sphere(0), std::invalid_argument);
  CHECK_THROWS_AS(fibonacci_sphere(-5), std::invalid_argument);
}

TEST_CASE("fibonacci_sphere yields unit vectors matching the lattice formula") {
  const auto pts = fibonacci_sphere(200);
  REQUIRE(pts.size() == 200);

  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < 200; ++i) {
    CHECK(std::abs(pts[i].norm() - 1.0) < 1e-12);
    const double z = 1.0 - (2.0 * i + 1.0) / 200.0;
    CHECK(pts[i].z() == doctest::Approx(z).epsilon(1e-12));
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double az = golden_angle * i;
    CHECK(pts[i].x() == doctest::Approx(r * std::cos(az)).epsilon(1e-9));
    CHECK(pts[i].y() == doctest::Approx(r * std::sin(az)).epsilon(1e-9));
  }
}

TEST_CASE("fibonacci_sphere n=1 gives a single unit vector") {
  const auto pts = fibonacci_sphere(1);
  REQUIRE(pts.size() == 1);
  CHECK(std::abs(pts[0].norm() - 1.0) < 1e-12);
}

TEST_CASE("fibonacci_sphere points average out near the origin") {
  const auto pts = fibonacci_sphere(200);
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : pts) mean += p;
  mean /= 200.0;
  CHECK(mean.cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("fibonacci_sphere has no duplicate directions") {
  const auto pts = fibonacci_sphere(1000);
  double min_sep = 4.0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    // The lattice orders points by z, so nearest candidates are close in
    // index; a 25-wide window bounds the check at n=1000.
    for (size_t j = i + 1; j < std::min(pts.size(), i + 25); ++j) {
      min_sep = std::min(min_sep, (pts[i] - pts[j]).norm());
    }
  }
  CHECK(min_sep > 1e-6);
}

TEST_CASE("extrinsic params round-trip through the vector form") {
  std::mt19937 rng(43);
  for (int i = 0; i < 20; ++i) {
    const ExtrinsicParams p = random_params(rng);
    const ExtrinsicParams q = ExtrinsicParams::from_vector(p.to_vector());
    CHECK(q.theta_x == p.theta_x);
    CHECK(q.theta_y == p.theta_y);
    CHECK(q.theta_z == p.theta_z);
    CHECK(q.tx == p.tx);
    CHECK(q.ty == p.ty);
    CHECK(q.tz == p.tz);
  }
}
