#pragma once
// Forward-projection oracle shared by the unit tests. It builds observations
// straight from the pinhole model without going through the simulator.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "vpa/conic.hpp"
#include "vpa/frames.hpp"
#include "vpa/solver.hpp"

namespace vpa::testing {

/// Points of the rim circle of `lum` between fractions [from, from + span) of
/// a full turn, projected through `pose`.
inline std::vector<PixelPoint> rim_pixels(const LuminaireInfo& lum, const Pose& pose, const CameraIntrinsics& k,
                                          double from = 0.0, double span = 1.0, int n = 360) {
  std::vector<PixelPoint> out;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * (from + span * i / n);
    const Vec3 w = lum.center.xyz + lum.radius * Vec3(std::cos(a), std::sin(a), 0.0);
    out.push_back(project_to_pixel(world_to_camera(WorldPoint(w), pose), k));
  }
  return out;
}

inline Observation exact_observation(const LuminaireInfo& lum, const Pose& pose, const CameraIntrinsics& k,
                                     bool complete, double from = 0.0, double span = 1.0) {
  const auto px = rim_pixels(lum, pose, k, from, complete ? 1.0 : span);
  std::vector<ImagePoint> pts;
  double length = 0.0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    pts.push_back(pixel_to_image(px[i], k));
    if (i > 0) length += std::hypot(px[i].u - px[i - 1].u, px[i].v - px[i - 1].v);
  }
  Observation o;
  o.luminaire_id = lum.id;
  o.ellipse = fit_ellipse(pts);
  o.complete = complete;
  o.contour_length_px = length;
  if (complete) {
    o.center_proj = project_to_pixel(world_to_camera(lum.center, pose), k);
    o.mark_proj = project_to_pixel(world_to_camera(lum.mark, pose), k);
  }
  return o;
}

/// True when every rim point of `lum` projects inside the image.
inline bool fully_visible(const LuminaireInfo& lum, const Pose& pose, const CameraIntrinsics& k) {
  for (int i = 0; i < 72; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 72;
    const CameraPoint c = world_to_camera(WorldPoint(lum.center.xyz + lum.radius * Vec3(std::cos(a), std::sin(a), 0.0)), pose);
    if (!(c.z() > 0.05)) return false;
    const PixelPoint p = project_to_pixel(c, k);
    if (p.u < 0.0 || p.u > k.width || p.v < 0.0 || p.v > k.height) return false;
  }
  return true;
}

/// Random pose below two luminaires that keeps both fully in view.
inline Pose random_pose_seeing(const LuminaireInfo& a, const LuminaireInfo& b, const CameraIntrinsics& k,
                               std::mt19937_64& rng, double max_tilt = 0.6) {
  std::uniform_real_distribution<double> tilt(-max_tilt, max_tilt);
  std::uniform_real_distribution<double> yaw(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> off(-1.5, 1.5);
  std::uniform_real_distribution<double> height(0.5, 2.0);
  const Vec3 mid = 0.5 * (a.center.xyz + b.center.xyz);
  for (;;) {
    const Pose p{euler_to_rotation({tilt(rng), tilt(rng), yaw(rng)}),
                 WorldPoint(mid.x() + off(rng), mid.y() + off(rng), height(rng))};
    if (fully_visible(a, p, k) && fully_visible(b, p, k)) return p;
  }
}

}  // namespace vpa::testing
