#pragma once
//! \file
//! Synthetic scenes and captures: random user poses under a visibility
//! constraint, projected luminaire contours with pixel noise, angular arc
//! truncation and multi-image averaging.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vpa/conic.hpp"
#include "vpa/error.hpp"
#include "vpa/frames.hpp"
#include "vpa/solver.hpp"

namespace vpa::sim {

struct Room {
  double length = 8.0;  // x, m
  double width = 6.0;   // y, m
  double height = 3.0;  // z, m
};

struct Scene {
  Room room;
  std::vector<LuminaireInfo> luminaires;

  [[nodiscard]] LuminaireMap map() const {
    LuminaireMap m;
    for (const auto& l : luminaires) m.emplace(l.id, l);
    return m;
  }

  void validate() const {
    if (!(room.length > 0.0 && room.width > 0.0 && room.height > 0.0))
      throw Error(ErrorCode::ConfigInvalid, "room dimensions must be positive");
    LuminaireMap seen;
    for (const auto& l : luminaires) {
      if (!(l.radius > 0.0)) throw Error(ErrorCode::ConfigInvalid, "luminaire radius must be positive");
      const Vec3& c = l.center.xyz;
      if (c.x() < 0.0 || c.x() > room.length || c.y() < 0.0 || c.y() > room.width ||
          c.z() <= 0.0 || c.z() > room.height + 1e-9)
        throw Error(ErrorCode::ConfigInvalid, "luminaire " + std::to_string(l.id) + " outside the room");
      if (!seen.emplace(l.id, l).second)
        throw Error(ErrorCode::ConfigInvalid, "duplicate luminaire id " + std::to_string(l.id));
    }
  }

  /// Same layout with every radius replaced.
  [[nodiscard]] Scene with_radius(double radius) const {
    Scene s = *this;
    for (auto& l : s.luminaires) l = LuminaireInfo::make(l.id, l.center, radius);
    return s;
  }
};

/// 8 x 6 x 3 m room, four ceiling luminaires.
inline Scene table_iii_scene(double radius = 0.15) {
  Scene s;
  s.luminaires = {LuminaireInfo::make(1, {2.0, 2.0, 3.0}, radius),
                  LuminaireInfo::make(2, {6.0, 2.0, 3.0}, radius),
                  LuminaireInfo::make(3, {2.0, 4.0, 3.0}, radius),
                  LuminaireInfo::make(4, {6.0, 4.0, 3.0}, radius)};
  return s;
}

struct NoiseModel {
  double sigma = 2.0;  // px
  std::uint64_t seed = 0;
};

enum class ArcMode { Complete, Semicircle, SuperiorArc, ImageBounds };

constexpr std::string_view to_string(ArcMode m) {
  switch (m) {
    case ArcMode::Complete: return "complete";
    case ArcMode::Semicircle: return "semicircle";
    case ArcMode::SuperiorArc: return "superior_arc";
    case ArcMode::ImageBounds: return "image_bounds";
  }
  return "?";
}

struct CaptureConfig {
  int contour_samples = 360;
  int images_per_location = 20;
  ArcMode arc_mode = ArcMode::Complete;
  double arc_fraction = 0.6;  // superior arc span

  void validate() const {
    if (contour_samples < 8) throw Error(ErrorCode::ConfigInvalid, "contour_samples must be >= 8");
    if (images_per_location < 1) throw Error(ErrorCode::ConfigInvalid, "images_per_location must be >= 1");
    if (!(arc_fraction > 0.0 && arc_fraction <= 1.0))
      throw Error(ErrorCode::ConfigInvalid, "arc_fraction must be in (0, 1]");
  }
};

struct GroundTruth {
  Pose pose;
};

/// Independent, schedule-free stream for one Monte Carlo sample.
inline std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x5eedu};
  return std::mt19937_64(seq);
}

inline WorldPoint contour_point(const LuminaireInfo& lum, int index, int samples) {
  const double a = 2.0 * std::numbers::pi * index / samples;
  return WorldPoint(lum.center.xyz + lum.radius * Vec3(std::cos(a), std::sin(a), 0.0));
}

inline bool inside_image(const PixelPoint& p, const CameraIntrinsics& k) {
  return p.u >= 0.0 && p.u <= k.width && p.v >= 0.0 && p.v <= k.height;
}

/// Fraction of contour samples in front of the camera and inside the image.
inline double visible_fraction(const LuminaireInfo& lum, const Pose& pose, const CameraIntrinsics& k,
                               int samples) {
  int visible = 0;
  for (int i = 0; i < samples; ++i) {
    const CameraPoint pc = world_to_camera(contour_point(lum, i, samples), pose);
    if (pc.z() > 0.0 && inside_image(project_to_pixel(pc, k), k)) ++visible;
  }
  return static_cast<double>(visible) / samples;
}

struct VisibilityConstraint {
  int min_luminaires = 2;
  double min_fraction = 0.5;  // of the contour, per luminaire
  int contour_samples = 360;
  double max_tilt_rad = std::numbers::pi / 4.0;
  double min_height = 0.5;
  double max_height = 2.0;
  int max_attempts = 100000;
};

/// Rejection-samples a uniform position and uniform Euler angles until
/// enough luminaires are visible.
inline GroundTruth sample_pose(const Scene& scene, const CameraIntrinsics& k, std::mt19937_64& rng,
                               const VisibilityConstraint& c = {}) {
  std::uniform_real_distribution<double> ux(0.0, scene.room.length);
  std::uniform_real_distribution<double> uy(0.0, scene.room.width);
  std::uniform_real_distribution<double> uz(c.min_height, c.max_height);
  std::uniform_real_distribution<double> tilt(-c.max_tilt_rad, c.max_tilt_rad);
  std::uniform_real_distribution<double> yaw(-std::numbers::pi, std::numbers::pi);
  for (int attempt = 0; attempt < c.max_attempts; ++attempt) {
    const Vec3 t(ux(rng), uy(rng), uz(rng));
    EulerAngles e;
    e.phi = tilt(rng);
    e.theta = tilt(rng);
    e.psi = yaw(rng);
    const Pose pose{euler_to_rotation(e), WorldPoint(t)};
    int visible = 0;
    for (const auto& lum : scene.luminaires) {
      if (visible_fraction(lum, pose, k, c.contour_samples) >= c.min_fraction - 1e-12) ++visible;
      if (visible >= c.min_luminaires) return {pose};
    }
  }
  throw Error(ErrorCode::SamplingExhausted, "no pose satisfied the visibility constraint");
}

/// One simulated image of one luminaire.
struct RawCapture {
  int luminaire_id = 0;
  int contour_samples = 0;
  ArcMode mode = ArcMode::Complete;
  std::vector<int> indices;          // retained contour sample indices, in arc order
  std::vector<PixelPoint> contour;   // noisy pixels, parallel to indices
  std::vector<bool> in_image;        // clean-point visibility, parallel to indices
  std::optional<PixelPoint> center;  // G'
  std::optional<PixelPoint> mark;    // M'
};

/// Projects the rim, the centre and the mark, adding N(0, sigma^2) to every
/// pixel coordinate. Samples behind the camera are dropped. The number of
/// random draws does not depend on the pose or on sigma.
inline RawCapture project_luminaire(const LuminaireInfo& lum, const GroundTruth& truth,
                                    const CameraIntrinsics& k, double sigma, const CaptureConfig& cap,
                                    std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  RawCapture out;
  out.luminaire_id = lum.id;
  out.contour_samples = cap.contour_samples;
  bool any_inside = false;
  for (int i = 0; i < cap.contour_samples; ++i) {
    const double nu = sigma * unit(rng);
    const double nv = sigma * unit(rng);
    const CameraPoint pc = world_to_camera(contour_point(lum, i, cap.contour_samples), truth.pose);
    if (!(pc.z() > 0.0)) continue;
    const PixelPoint clean = project_to_pixel(pc, k);
    const bool inside = inside_image(clean, k);
    any_inside = any_inside || inside;
    out.indices.push_back(i);
    out.contour.push_back({clean.u + nu, clean.v + nv});
    out.in_image.push_back(inside);
  }
  auto noisy_point = [&](const WorldPoint& w) -> std::optional<PixelPoint> {
    const double nu = sigma * unit(rng);
    const double nv = sigma * unit(rng);
    const CameraPoint pc = world_to_camera(w, truth.pose);
    if (!(pc.z() > 0.0)) return std::nullopt;
    const PixelPoint clean = project_to_pixel(pc, k);
    return PixelPoint{clean.u + nu, clean.v + nv};
  };
  out.center = noisy_point(lum.center);
  out.mark = noisy_point(lum.mark);
  if (!any_inside) throw Error(ErrorCode::NotVisible, "luminaire " + std::to_string(lum.id) + " not in image");
  return out;
}

/// Contiguous span of contour indices [start, start + count) modulo samples.
struct ArcWindow {
  int start = 0;
  int count = 0;
};

/// Draws the retained span for a mode. Always consumes one draw.
inline ArcWindow draw_arc_window(ArcMode mode, int samples, double arc_fraction, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> start(0, samples - 1);
  const int s = start(rng);
  switch (mode) {
    case ArcMode::Semicircle: return {s, samples / 2};
    case ArcMode::SuperiorArc:
      return {s, std::clamp(static_cast<int>(std::lround(arc_fraction * samples)), 1, samples)};
    case ArcMode::Complete:
    case ArcMode::ImageBounds: return {0, samples};
  }
  return {0, samples};
}

/// Applies a truncation to one capture.
///
/// Angular modes keep the window and drop G'/M'. ImageBounds keeps the
/// samples whose clean projection lies in the image; G'/M' survive only if
/// nothing was cut, in which case the capture stays complete.
inline RawCapture truncate_arc(const RawCapture& in, ArcMode mode, const ArcWindow& window) {
  RawCapture out = in;
  out.mode = mode;
  if (mode == ArcMode::Complete) return out;

  out.indices.clear();
  out.contour.clear();
  out.in_image.clear();
  auto keep = [&](std::size_t j) {
    out.indices.push_back(in.indices[j]);
    out.contour.push_back(in.contour[j]);
    out.in_image.push_back(in.in_image[j]);
  };

  if (mode == ArcMode::ImageBounds) {
    for (std::size_t j = 0; j < in.indices.size(); ++j)
      if (in.in_image[j]) keep(j);
    // Start the retained list right after its largest cyclic gap so it reads in arc order.
    if (!out.indices.empty()) {
      std::size_t start = 0;
      int widest = 0;
      for (std::size_t j = 0; j < out.indices.size(); ++j) {
        const int prev = out.indices[(j + out.indices.size() - 1) % out.indices.size()];
        const int gap = (out.indices[j] - prev + in.contour_samples) % in.contour_samples;
        if (gap > widest) {
          widest = gap;
          start = j;
        }
      }
      const auto shift = static_cast<std::ptrdiff_t>(start);
      std::rotate(out.indices.begin(), out.indices.begin() + shift, out.indices.end());
      std::rotate(out.contour.begin(), out.contour.begin() + shift, out.contour.end());
      std::vector<bool> flags(out.in_image.begin(), out.in_image.end());
      std::rotate(flags.begin(), flags.begin() + shift, flags.end());
      out.in_image = flags;
    }
    const bool uncut = static_cast<int>(out.indices.size()) == in.contour_samples;
    if (uncut) {
      out.mode = ArcMode::Complete;
    } else {
      out.center.reset();
      out.mark.reset();
    }
  } else {
    std::vector<int> slot(static_cast<std::size_t>(in.contour_samples), -1);
    for (std::size_t j = 0; j < in.indices.size(); ++j) slot[static_cast<std::size_t>(in.indices[j])] = static_cast<int>(j);
    for (int i = 0; i < window.count; ++i) {
      const int idx = (window.start + i) % in.contour_samples;
      const int j = slot[static_cast<std::size_t>(idx)];
      if (j >= 0 && in.in_image[static_cast<std::size_t>(j)]) keep(static_cast<std::size_t>(j));
    }
    out.center.reset();
    out.mark.reset();
  }
  if (out.indices.size() < 5) throw Error(ErrorCode::ArcTooShort, "fewer than 5 contour points survive");
  return out;
}

/// Draws a window for `mode` and truncates.
inline RawCapture truncate_arc(const RawCapture& in, ArcMode mode, double arc_fraction, std::mt19937_64& rng) {
  return truncate_arc(in, mode, draw_arc_window(mode, in.contour_samples, arc_fraction, rng));
}

/// Averaged captures of one luminaire at one location.
struct AveragedCapture {
  Observation observation;
  int contour_samples = 0;
  std::vector<int> indices;
  std::vector<PixelPoint> contour;
};

/// Averages corresponding pixels over the images of one location, fits the
/// ellipse and packages the observation.
inline AveragedCapture average_observations(std::span<const RawCapture> captures, const CameraIntrinsics& k) {
  if (captures.empty()) throw Error(ErrorCode::MismatchedCaptures, "no captures");
  const RawCapture& ref = captures.front();
  for (const auto& c : captures) {
    if (c.luminaire_id != ref.luminaire_id || c.mode != ref.mode || c.indices != ref.indices ||
        c.contour_samples != ref.contour_samples || c.center.has_value() != ref.center.has_value() ||
        c.mark.has_value() != ref.mark.has_value())
      throw Error(ErrorCode::MismatchedCaptures, "captures differ in sampling or truncation");
  }
  const double n = static_cast<double>(captures.size());
  AveragedCapture out;
  out.contour_samples = ref.contour_samples;
  out.indices = ref.indices;
  out.contour.assign(ref.contour.size(), PixelPoint{});
  for (const auto& c : captures) {
    for (std::size_t j = 0; j < c.contour.size(); ++j) {
      out.contour[j].u += c.contour[j].u / n;
      out.contour[j].v += c.contour[j].v / n;
    }
  }
  auto average_opt = [&](auto member) -> std::optional<PixelPoint> {
    if (!(ref.*member)) return std::nullopt;
    PixelPoint p;
    for (const auto& c : captures) {
      p.u += (c.*member)->u / n;
      p.v += (c.*member)->v / n;
    }
    return p;
  };

  Observation& obs = out.observation;
  obs.luminaire_id = ref.luminaire_id;
  obs.center_proj = average_opt(&RawCapture::center);
  obs.mark_proj = average_opt(&RawCapture::mark);
  obs.complete = ref.mode == ArcMode::Complete && obs.center_proj && obs.mark_proj;

  std::vector<ImagePoint> image_pts;
  image_pts.reserve(out.contour.size());
  for (const auto& p : out.contour) image_pts.push_back(pixel_to_image(p, k));
  obs.ellipse = fit_ellipse(image_pts);

  // Polyline length over neighbouring contour samples only (cyclically).
  double length = 0.0;
  const std::size_t m = out.contour.size();
  for (std::size_t j = 0; j < m && m > 2; ++j) {
    const std::size_t nxt = (j + 1) % m;
    if ((out.indices[j] + 1) % out.contour_samples != out.indices[nxt]) continue;
    length += std::hypot(out.contour[nxt].u - out.contour[j].u, out.contour[nxt].v - out.contour[j].v);
  }
  obs.contour_length_px = length;
  return out;
}

}  // namespace vpa::sim
