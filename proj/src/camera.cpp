#include "micalib/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace micalib {

namespace {
constexpr double kNearEps = 1e-6;

void check_common(double fx, double fy, int width, int height) {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw std::invalid_argument("CameraModel: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("CameraModel: image dimensions must be positive");
  }
}
}  // namespace

CameraModel CameraModel::pinhole(double fx, double fy, double cx, double cy,
                                 int width, int height) {
  check_common(fx, fy, width, height);
  CameraModel cam;
  cam.kind_ = Kind::Pinhole;
  cam.fx_ = fx;
  cam.fy_ = fy;
  cam.cx_ = cx;
  cam.cy_ = cy;
  cam.width_ = width;
  cam.height_ = height;
  return cam;
}

CameraModel CameraModel::double_sphere(double fx, double fy, double cx,
                                       double cy, double xi, double alpha,
                                       int width, int height) {
  check_common(fx, fy, width, height);
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("CameraModel: alpha must be in [0, 1]");
  }
  CameraModel cam;
  cam.kind_ = Kind::DoubleSphere;
  cam.fx_ = fx;
  cam.fy_ = fy;
  cam.cx_ = cx;
  cam.cy_ = cy;
  cam.xi_ = xi;
  cam.alpha_ = alpha;
  cam.width_ = width;
  cam.height_ = height;
  return cam;
}

std::optional<PixelCoord> CameraModel::project(const Vec3& p) const {
  double u, v;
  if (kind_ == Kind::Pinhole) {
    if (p.z() <= kNearEps) {
      return std::nullopt;
    }
    u = fx_ * p.x() / p.z() + cx_;
    v = fy_ * p.y() / p.z() + cy_;
  } else {
    const double r2 = p.x() * p.x() + p.y() * p.y();
    const double d1 = std::sqrt(r2 + p.z() * p.z());

    // Validity region: z > -w2 * d1, with w2 derived from xi and alpha.
    const double w1 = alpha_ <= 0.5 ? alpha_ / (1.0 - alpha_)
                                    : (1.0 - alpha_) / alpha_;
    const double w2 =
        (w1 + xi_) / std::sqrt(2.0 * w1 * xi_ + xi_ * xi_ + 1.0);
    if (p.z() <= -w2 * d1) {
      return std::nullopt;
    }

    const double k = xi_ * d1 + p.z();
    const double d2 = std::sqrt(r2 + k * k);
    const double denom = alpha_ * d2 + (1.0 - alpha_) * k;
    if (denom <= kNearEps) {
      return std::nullopt;
    }
    u = fx_ * p.x() / denom + cx_;
    v = fy_ * p.y() / denom + cy_;
  }

  if (u < 0.0 || u >= static_cast<double>(width_) || v < 0.0 ||
      v >= static_cast<double>(height_)) {
    return std::nullopt;
  }
  return PixelCoord{u, v};
}

}  // namespace micalib
