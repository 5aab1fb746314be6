#pragma once
//! \file
//! Coordinate systems used by the positioning pipeline.
//!
//! PCS  pixel coordinates (u, v), origin at the top-left pixel.
//! ICS  image-plane coordinates (x, y) in cm, origin at the principal point.
//! CCS  camera frame in m, z along the optical axis.
//! WCS  world frame in m, z up, ceiling luminaires face -z.
//! ACS  canonical frame of a viewing cone (see conic.hpp).
//!
//! Intrinsics are in cm and 3D points in m. The two never mix directly:
//! projection divides x by z (dimensionless) and back-projection only uses
//! the direction of (x, y, f), so no unit conversion constant is required.

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "vpa/error.hpp"

namespace vpa {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct CameraIntrinsics {
  double focal_cm = 0.4;
  double dx_cm = 1.25e-3;
  double dy_cm = 1.25e-3;
  double u0 = 320.0;
  double v0 = 240.0;
  int width = 640;
  int height = 480;

  /// Simulation camera: 640x480 sensor, 1.25e-3 cm pixels, f = 0.4 cm (~90 deg HFOV).
  static CameraIntrinsics table_iii() { return {}; }

  void validate() const {
    if (!(focal_cm > 0.0) || !(dx_cm > 0.0) || !(dy_cm > 0.0))
      throw Error(ErrorCode::InvalidArgument, "intrinsics: f, dx, dy must be positive");
    if (!(u0 > 0.0 && u0 < width) || !(v0 > 0.0 && v0 < height))
      throw Error(ErrorCode::InvalidArgument, "intrinsics: principal point outside the image");
  }
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

struct ImagePoint {
  double x = 0.0;
  double y = 0.0;
};

struct CameraFrame {};
struct WorldFrame {};
struct AcsFrame {};

/// A 3D point tagged with the frame it is expressed in.
template <typename Frame>
struct Point3 {
  Vec3 xyz = Vec3::Zero();

  Point3() = default;
  explicit Point3(const Vec3& v) : xyz(v) {}
  Point3(double x, double y, double z) : xyz(x, y, z) {}

  [[nodiscard]] double x() const { return xyz.x(); }
  [[nodiscard]] double y() const { return xyz.y(); }
  [[nodiscard]] double z() const { return xyz.z(); }
};

using CameraPoint = Point3<CameraFrame>;
using WorldPoint = Point3<WorldFrame>;
using AcsPoint = Point3<AcsFrame>;

/// Proper rotation matrix. Construction checks orthonormality and det = +1.
class Rotation {
 public:
  static constexpr double kTolerance = 1e-10;

  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return {}; }

  static Rotation from_matrix(const Mat3& m, double tol = kTolerance) {
    if ((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() > tol ||
        std::abs(m.determinant() - 1.0) > tol) {
      throw Error(ErrorCode::InvalidArgument, "matrix is not a proper rotation");
    }
    Rotation r;
    r.m_ = m;
    return r;
  }

  [[nodiscard]] const Mat3& matrix() const { return m_; }
  [[nodiscard]] Rotation inverse() const {
    Rotation r;
    r.m_ = m_.transpose();
    return r;
  }
  [[nodiscard]] Vec3 operator*(const Vec3& v) const { return m_ * v; }
  [[nodiscard]] Rotation operator*(const Rotation& o) const {
    Rotation r;
    r.m_ = m_ * o.m_;
    return r;
  }

 private:
  Mat3 m_;
};

/// Camera-to-world transform: P_w = rotation * P_c + translation.
struct Pose {
  Rotation rotation;
  WorldPoint translation;
};

/// Roll phi about x, pitch theta about y, yaw psi about z (radians).
struct EulerAngles {
  double phi = 0.0;
  double theta = 0.0;
  double psi = 0.0;
};

/// Unit quaternion, canonical hemisphere (w >= 0).
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  [[nodiscard]] Eigen::Vector4d coeffs() const { return {w, x, y, z}; }
};

inline ImagePoint pixel_to_image(const PixelPoint& p, const CameraIntrinsics& k) {
  return {k.dx_cm * (p.u - k.u0), k.dy_cm * (p.v - k.v0)};
}

inline PixelPoint image_to_pixel(const ImagePoint& q, const CameraIntrinsics& k) {
  return {q.x / k.dx_cm + k.u0, q.y / k.dy_cm + k.v0};
}

inline ImagePoint project_to_image(const CameraPoint& p, const CameraIntrinsics& k) {
  if (!(p.z() > 0.0)) throw Error(ErrorCode::NotInFrontOfCamera, "point has z <= 0");
  return {k.focal_cm * p.x() / p.z(), k.focal_cm * p.y() / p.z()};
}

inline PixelPoint project_to_pixel(const CameraPoint& p, const CameraIntrinsics& k) {
  return image_to_pixel(project_to_image(p, k), k);
}

/// Point of the image plane as a CCS vector (x, y, f); in cm, only its direction is used.
inline Vec3 image_plane_ray(const ImagePoint& q, const CameraIntrinsics& k) {
  return {q.x, q.y, k.focal_cm};
}

inline CameraPoint backproject_with_depth(const ImagePoint& q, double depth,
                                          const CameraIntrinsics& k) {
  if (!(depth > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "depth must be positive");
  return {depth * q.x / k.focal_cm, depth * q.y / k.focal_cm, depth};
}

inline WorldPoint camera_to_world(const CameraPoint& p, const Pose& pose) {
  return WorldPoint(pose.rotation * p.xyz + pose.translation.xyz);
}

inline CameraPoint world_to_camera(const WorldPoint& p, const Pose& pose) {
  return CameraPoint(pose.rotation.matrix().transpose() * (p.xyz - pose.translation.xyz));
}

inline Mat3 rotation_x(double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

inline Mat3 rotation_y(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

inline Mat3 rotation_z(double psi) {
  const double c = std::cos(psi), s = std::sin(psi);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

/// R = R_Z(psi) R_Y(theta) R_X(phi).
///
/// With this order the ceiling normal seen from the camera,
/// R^T (0,0,-1) = (sin th, -cos th sin phi, -cos th cos phi), depends on
/// (phi, theta) only, which is what lets the solvers recover tilt before yaw.
inline Rotation euler_to_rotation(const EulerAngles& e) {
  return Rotation::from_matrix(rotation_z(e.psi) * rotation_y(e.theta) * rotation_x(e.phi), 1e-9);
}

inline EulerAngles rotation_to_euler(const Rotation& r) {
  const Mat3& m = r.matrix();
  const double sin_theta = std::clamp(-m(2, 0), -1.0, 1.0);
  const double cos_theta = std::hypot(m(2, 1), m(2, 2));
  if (cos_theta < 1e-8) throw Error(ErrorCode::GimbalLock, "|cos(theta)| < 1e-8");
  EulerAngles e;
  e.theta = std::asin(sin_theta);
  e.phi = std::atan2(m(2, 1), m(2, 2));
  e.psi = std::atan2(m(1, 0), m(0, 0));
  return e;
}

/// Flip to w >= 0; when w ~ 0 the first nonzero component is made positive.
inline Quaternion canonicalize(Quaternion q) {
  Eigen::Vector4d c = q.coeffs();
  c.normalize();
  constexpr double kZero = 1e-12;
  for (int i = 0; i < 4; ++i) {
    if (std::abs(c[i]) > kZero) {
      if (c[i] < 0.0) c = -c;
      break;
    }
  }
  return {c[0], c[1], c[2], c[3]};
}

inline Quaternion rotation_to_quaternion(const Rotation& r) {
  const Eigen::Quaterniond q(r.matrix());
  return canonicalize({q.w(), q.x(), q.y(), q.z()});
}

inline Rotation quaternion_to_rotation(const Quaternion& q) {
  const Eigen::Quaterniond e(q.w, q.x, q.y, q.z);
  return Rotation::from_matrix(e.normalized().toRotationMatrix(), 1e-9);
}

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace vpa
