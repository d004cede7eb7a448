#pragma once

#include <optional>

#include "micalib/geometry.hpp"

namespace micalib {

/// Continuous pixel coordinates. Integer values are pixel centers;
/// rounding to a grid cell happens at sampling time, not here.
struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

/// Pinhole or double-sphere projection model.
///
/// project() returns nullopt for points outside the field of view
/// (behind the camera, failing the double-sphere validity condition, or
/// landing outside [0,width) x [0,height)). That is a normal outcome.
class CameraModel {
 public:
  enum class Kind { Pinhole, DoubleSphere };

  /// A default-constructed model is an empty placeholder (0x0 image)
  /// that projects nothing; build real models through the factories.
  CameraModel() = default;

  static CameraModel pinhole(double fx, double fy, double cx, double cy,
                             int width, int height);
  static CameraModel double_sphere(double fx, double fy, double cx, double cy,
                                   double xi, double alpha, int width,
                                   int height);

  std::optional<PixelCoord> project(const Vec3& p_cam) const;

  Kind kind() const { return kind_; }
  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  double xi() const { return xi_; }
  double alpha() const { return alpha_; }
  int width() const { return width_; }
  int height() const { return height_; }

 private:
  Kind kind_ = Kind::Pinhole;
  double fx_ = 0, fy_ = 0, cx_ = 0, cy_ = 0;
  double xi_ = 0, alpha_ = 0;
  int width_ = 0, height_ = 0;
};

}  // namespace micalib
