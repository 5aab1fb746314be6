#pragma once
//! \file
//! Pose solvers built on the cone geometry of conic.hpp.
//!
//! Both solvers recover tilt (phi, theta) from the luminaire normal seen in
//! the camera, yaw psi from one known world direction, and the translation by
//! averaging two point correspondences:
//!  - solve_vpca  uses a complete capture whose centre and mark projections
//!                are known; the second luminaire only disambiguates the normal.
//!  - solve_oavpa uses two arcs and approximates each centre projection by
//!                the centre of the fitted ellipse.
//!  - solve_vpa   dispatches between them.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vpa/conic.hpp"
#include "vpa/error.hpp"
#include "vpa/frames.hpp"

namespace vpa {

/// Ceiling luminaire. The mark sits on the rim in the +y (world) direction.
struct LuminaireInfo {
  int id = 0;
  WorldPoint center;
  WorldPoint mark;
  double radius = 0.15;  // m

  static LuminaireInfo make(int id, const WorldPoint& center, double radius) {
    if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "luminaire radius must be positive");
    return {id, center, WorldPoint(center.xyz + Vec3(0.0, radius, 0.0)), radius};
  }

  [[nodiscard]] static Vec3 normal_world() { return {0.0, 0.0, -1.0}; }
};

using LuminaireMap = std::map<int, LuminaireInfo>;

/// What the image pipeline reports for one luminaire.
struct Observation {
  int luminaire_id = 0;
  EllipseCoeffs ellipse;
  bool complete = false;
  std::optional<PixelPoint> center_proj;  // G'
  std::optional<PixelPoint> mark_proj;    // M'
  double contour_length_px = 0.0;         // used to rank observations
};

enum class Algorithm { VPCA, OAVPA, PNP };

constexpr std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::VPCA: return "VPCA";
    case Algorithm::OAVPA: return "OAVPA";
    case Algorithm::PNP: return "PNP";
  }
  return "?";
}

struct ChosenSlope {
  int luminaire_id = 0;
  double k = 0.0;
};

struct PoseDiagnostics {
  std::vector<ChosenSlope> chosen_k;
  double disambiguation_gap = 0.0;
  double psi_residual = 0.0;
  double reprojection_rms_px = 0.0;  // PnP only
  int iterations = 0;                // PnP only
};

struct PoseEstimate {
  Pose pose;
  Algorithm algorithm = Algorithm::VPCA;
  PoseDiagnostics diagnostics;
};

// ---------------------------------------------------------------------------
// Building blocks

struct Disambiguation {
  CandidateNormal chosen_a;
  CandidateNormal chosen_b;
  int index_a = 0;
  int index_b = 0;
  double gap = 0.0;  // second-best distance minus best
};

/// Picks the pair of candidates (one per luminaire) with the closest normals.
inline Disambiguation disambiguate_normal(const std::array<CandidateNormal, 2>& cands_a,
                                          const std::array<CandidateNormal, 2>& cands_b) {
  struct Pair {
    int i, j;
    double dist;
  };
  std::array<Pair, 4> pairs{};
  int n = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      pairs[n++] = {i, j, (cands_a[i].normal_ccs - cands_b[j].normal_ccs).norm()};
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& l, const Pair& r) { return l.dist < r.dist; });

  constexpr double kTie = 1e-6;
  const Pair& best = pairs[0];
  const Pair& second = pairs[1];
  const double gap = second.dist - best.dist;
  if (gap < kTie) {
    const bool same_a =
        (cands_a[best.i].normal_ccs - cands_a[second.i].normal_ccs).norm() < kTie;
    const bool same_b =
        (cands_b[best.j].normal_ccs - cands_b[second.j].normal_ccs).norm() < kTie;
    if (!same_a || !same_b) {
      throw Error(ErrorCode::AmbiguousDisambiguation, "two candidate pairs are equally close");
    }
  }
  return {cands_a[best.i], cands_b[best.j], best.i, best.j, gap};
}

struct TiltAngles {
  double phi = 0.0;
  double theta = 0.0;
};

/// Roll and pitch from the luminaire normal in CCS:
/// n = (sin th, -cos th sin phi, -cos th cos phi).
inline TiltAngles euler_from_normal(const Vec3& n_c) {
  const Vec3 n = n_c.normalized();
  if (std::abs(n.x()) >= 1.0 - 1e-9) throw Error(ErrorCode::GimbalLock, "normal along x^c");
  return {std::atan2(-n.y(), -n.z()), std::asin(n.x())};
}

struct PsiSolution {
  double psi = 0.0;
  double residual = 0.0;  // |R(phi,theta,psi)^T g - h|
};

/// Yaw from a world direction g and its camera-frame image h, given tilt.
///
/// h = R_X^T R_Y^T R_Z^T g is linear in (cos psi, sin psi); solved in the
/// least-squares sense, normalised, then atan2.
inline PsiSolution psi_from_direction(const Vec3& g, const Vec3& h, double phi, double theta) {
  if (std::abs(std::cos(theta)) <= 1e-8) throw Error(ErrorCode::GimbalLock, "|cos(theta)| <= 1e-8");
  const double horiz2 = g.x() * g.x() + g.y() * g.y();
  if (horiz2 < 1e-18) {
    throw Error(ErrorCode::DegenerateDirection, "direction is parallel to the world z axis");
  }
  const Mat3 w = rotation_x(phi).transpose() * rotation_y(theta).transpose();
  const Vec3 col_cos = w * Vec3(g.x(), g.y(), 0.0);
  const Vec3 col_sin = w * Vec3(g.y(), -g.x(), 0.0);
  const Vec3 rhs = h - w * Vec3(0.0, 0.0, g.z());
  // The two columns are orthogonal with equal norm, so the normal equations are diagonal.
  const double c = col_cos.dot(rhs) / horiz2;
  const double s = col_sin.dot(rhs) / horiz2;
  if (std::hypot(c, s) < 1e-12) {
    throw Error(ErrorCode::DegenerateDirection, "yaw is unobservable from this direction");
  }
  PsiSolution out;
  out.psi = std::atan2(s, c);
  const Mat3 r = rotation_z(out.psi) * rotation_y(theta) * rotation_x(phi);
  out.residual = (r.transpose() * g - h).norm();
  return out;
}

/// Yaw from the centre-to-mark direction, which is +y in the world.
inline PsiSolution psi_vpca(const Vec3& s_c, double phi, double theta) {
  PsiSolution sol = psi_from_direction(Vec3::UnitY(), s_c.normalized(), phi, theta);
  if (sol.residual > 1e-3) {
    throw Error(ErrorCode::InconsistentInput, "centre-mark direction inconsistent with the tilt");
  }
  return sol;
}

/// Yaw from the direction between two luminaire centres.
inline PsiSolution psi_oavpa(const Vec3& g_w, const Vec3& h_c, double phi, double theta) {
  return psi_from_direction(g_w.normalized(), h_c.normalized(), phi, theta);
}

/// Mean of the two single-correspondence translations P_w - R P_c.
inline WorldPoint translation_two_points(const WorldPoint& pw1, const CameraPoint& pc1,
                                         const WorldPoint& pw2, const CameraPoint& pc2,
                                         const Rotation& r) {
  return WorldPoint(0.5 * ((pw1.xyz - r * pc1.xyz) + (pw2.xyz - r * pc2.xyz)));
}

// ---------------------------------------------------------------------------
// Solvers

namespace detail {

inline const LuminaireInfo& lookup(const LuminaireMap& lums, int id) {
  const auto it = lums.find(id);
  if (it == lums.end()) throw Error(ErrorCode::UnknownLuminaire, "luminaire " + std::to_string(id));
  return it->second;
}

struct Normals {
  ConeDecomposition cone_a;
  ConeDecomposition cone_b;
  Disambiguation pick;
};

inline Normals resolve_normals(const Observation& a, const Observation& b, const CameraIntrinsics& k) {
  Normals n;
  n.cone_a = decompose_cone(cone_from_ellipse(a.ellipse, k.focal_cm));
  n.cone_b = decompose_cone(cone_from_ellipse(b.ellipse, k.focal_cm));
  n.pick = disambiguate_normal(candidate_normals(n.cone_a), candidate_normals(n.cone_b));
  return n;
}

}  // namespace detail

/// Complete capture (centre and mark projections known) plus any second capture.
inline PoseEstimate solve_vpca(const Observation& complete, const Observation& other,
                               const LuminaireMap& lums, const CameraIntrinsics& k) {
  if (!complete.complete || !complete.center_proj || !complete.mark_proj) {
    throw Error(ErrorCode::PreconditionViolated, "V-PCA needs a complete capture with G' and M'");
  }
  if (complete.luminaire_id == other.luminaire_id) {
    throw Error(ErrorCode::PreconditionViolated, "V-PCA needs two distinct luminaires");
  }
  const LuminaireInfo& lum = detail::lookup(lums, complete.luminaire_id);
  detail::lookup(lums, other.luminaire_id);

  const detail::Normals normals = detail::resolve_normals(complete, other, k);
  const PlaneAcs plane = luminaire_plane(normals.cone_a, normals.pick.chosen_a.k, lum.radius);
  const CameraPoint g_c = backproject_to_plane(*complete.center_proj, plane, normals.cone_a, k);
  const CameraPoint m_c = backproject_to_plane(*complete.mark_proj, plane, normals.cone_a, k);

  const TiltAngles tilt = euler_from_normal(normals.pick.chosen_a.normal_ccs);
  const PsiSolution yaw = psi_vpca((m_c.xyz - g_c.xyz).normalized(), tilt.phi, tilt.theta);
  const Rotation r = euler_to_rotation({tilt.phi, tilt.theta, yaw.psi});

  PoseEstimate est;
  est.pose = {r, translation_two_points(lum.center, g_c, lum.mark, m_c, r)};
  est.algorithm = Algorithm::VPCA;
  est.diagnostics.chosen_k = {{complete.luminaire_id, normals.pick.chosen_a.k},
                              {other.luminaire_id, normals.pick.chosen_b.k}};
  est.diagnostics.disambiguation_gap = normals.pick.gap;
  est.diagnostics.psi_residual = yaw.residual;
  return est;
}

/// Two arcs; each centre projection is approximated by its ellipse centre.
inline PoseEstimate solve_oavpa(const Observation& obs_e, const Observation& obs_f,
                                const LuminaireMap& lums, const CameraIntrinsics& k) {
  if (obs_e.luminaire_id == obs_f.luminaire_id) {
    throw Error(ErrorCode::UnknownLuminaire, "OA-V-PA needs two distinct luminaires");
  }
  const LuminaireInfo& lum_e = detail::lookup(lums, obs_e.luminaire_id);
  const LuminaireInfo& lum_f = detail::lookup(lums, obs_f.luminaire_id);

  const detail::Normals normals = detail::resolve_normals(obs_e, obs_f, k);
  const PlaneAcs plane_e = luminaire_plane(normals.cone_a, normals.pick.chosen_a.k, lum_e.radius);
  const PlaneAcs plane_f = luminaire_plane(normals.cone_b, normals.pick.chosen_b.k, lum_f.radius);
  const CameraPoint ge_c =
      backproject_to_plane(ellipse_center(obs_e.ellipse), plane_e, normals.cone_a, k);
  const CameraPoint gf_c =
      backproject_to_plane(ellipse_center(obs_f.ellipse), plane_f, normals.cone_b, k);

  const TiltAngles tilt = euler_from_normal(normals.pick.chosen_a.normal_ccs);
  const Vec3 g_w = lum_f.center.xyz - lum_e.center.xyz;
  const Vec3 h_c = gf_c.xyz - ge_c.xyz;
  if (g_w.norm() < 1e-12 || h_c.norm() < 1e-12) {
    throw Error(ErrorCode::DegenerateDirection, "luminaire centres coincide");
  }
  const PsiSolution yaw = psi_oavpa(g_w, h_c, tilt.phi, tilt.theta);
  const Rotation r = euler_to_rotation({tilt.phi, tilt.theta, yaw.psi});

  PoseEstimate est;
  est.pose = {r, translation_two_points(lum_e.center, ge_c, lum_f.center, gf_c, r)};
  est.algorithm = Algorithm::OAVPA;
  est.diagnostics.chosen_k = {{obs_e.luminaire_id, normals.pick.chosen_a.k},
                              {obs_f.luminaire_id, normals.pick.chosen_b.k}};
  est.diagnostics.disambiguation_gap = normals.pick.gap;
  est.diagnostics.psi_residual = yaw.residual;
  return est;
}

/// Indices of the two observations solve_vpa would use, first one leading.
struct DispatchChoice {
  std::size_t lead = 0;
  std::size_t partner = 0;
  Algorithm algorithm = Algorithm::VPCA;
};

/// Longest contour first, ties by luminaire id.
inline bool longer_contour(const Observation& l, const Observation& r) {
  if (l.contour_length_px != r.contour_length_px) return l.contour_length_px > r.contour_length_px;
  return l.luminaire_id < r.luminaire_id;
}

/// Complete captures lead V-PCA with the longest other contour as partner;
/// otherwise the two longest arcs go to OA-V-PA.
inline DispatchChoice choose_dispatch(std::span<const Observation> obs) {
  if (obs.size() < 2) throw Error(ErrorCode::TooFewLuminaires, "need at least two observations");
  std::vector<std::size_t> order(obs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return longer_contour(obs[l], obs[r]); });

  for (const std::size_t i : order) {
    const Observation& o = obs[i];
    if (o.complete && o.center_proj && o.mark_proj) {
      for (const std::size_t j : order) {
        if (j != i && obs[j].luminaire_id != o.luminaire_id) return {i, j, Algorithm::VPCA};
      }
    }
  }
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      if (obs[order[a]].luminaire_id != obs[order[b]].luminaire_id) {
        return {order[a], order[b], Algorithm::OAVPA};
      }
    }
  }
  throw Error(ErrorCode::TooFewLuminaires, "need two distinct luminaires");
}

inline PoseEstimate solve_vpa(std::span<const Observation> obs, const LuminaireMap& lums,
                              const CameraIntrinsics& k) {
  const DispatchChoice choice = choose_dispatch(obs);
  if (choice.algorithm == Algorithm::VPCA) return solve_vpca(obs[choice.lead], obs[choice.partner], lums, k);
  return solve_oavpa(obs[choice.lead], obs[choice.partner], lums, k);
}

// ---------------------------------------------------------------------------
// PnP baseline

struct Correspondence {
  WorldPoint world;
  PixelPoint pixel;
};

struct PnpOptions {
  int max_iterations = 100;
  double step_tolerance = 1e-10;
  double jacobian_step = 1e-6;
  double max_rms_px = 25.0;  // NonConvergence above this
};

/// Upright camera under the horizontal centroid of the points, 2 m below them.
inline Pose default_pnp_init(std::span<const Correspondence> corr, double yaw = 0.0) {
  Vec3 centroid = Vec3::Zero();
  for (const auto& c : corr) centroid += c.world.xyz;
  centroid /= static_cast<double>(std::max<std::size_t>(corr.size(), 1));
  return {euler_to_rotation({0.0, 0.0, yaw}), WorldPoint(centroid.x(), centroid.y(), centroid.z() - 2.0)};
}

namespace detail {

using PnpParams = Eigen::Matrix<double, 6, 1>;

inline Pose pose_from_params(const PnpParams& p) {
  return {euler_to_rotation({p[0], p[1], p[2]}), WorldPoint(p[3], p[4], p[5])};
}

inline Eigen::VectorXd reprojection_residual(const PnpParams& p, std::span<const Correspondence> corr,
                                             const CameraIntrinsics& k) {
  const Mat3 r = rotation_z(p[2]) * rotation_y(p[1]) * rotation_x(p[0]);
  const Vec3 t(p[3], p[4], p[5]);
  Eigen::VectorXd res(2 * static_cast<Eigen::Index>(corr.size()));
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const Vec3 pc = r.transpose() * (corr[i].world.xyz - t);
    const double u = k.focal_cm * pc.x() / (pc.z() * k.dx_cm) + k.u0;
    const double v = k.focal_cm * pc.y() / (pc.z() * k.dy_cm) + k.v0;
    res[2 * static_cast<Eigen::Index>(i)] = u - corr[i].pixel.u;
    res[2 * static_cast<Eigen::Index>(i) + 1] = v - corr[i].pixel.v;
  }
  return res;
}

}  // namespace detail

/// Gauss-Newton on the summed squared pixel reprojection error over
/// (phi, theta, psi, t) with a central-difference Jacobian. Steps that
/// increase the cost are halved.
inline PoseEstimate pnp_baseline(std::span<const Correspondence> corr, const CameraIntrinsics& k,
                                 const Pose& init, const PnpOptions& opt = {}) {
  if (corr.size() < 4) throw Error(ErrorCode::PreconditionViolated, "PnP needs >= 4 correspondences");
  {
    // Reject world points that are all collinear.
    const Vec3 p0 = corr[0].world.xyz;
    double best = 0.0;
    Vec3 dir = Vec3::Zero();
    for (const auto& c : corr) {
      if ((c.world.xyz - p0).norm() > best) {
        best = (c.world.xyz - p0).norm();
        dir = (c.world.xyz - p0).normalized();
      }
    }
    double off = 0.0;
    for (const auto& c : corr) off = std::max(off, (c.world.xyz - p0).cross(dir).norm());
    if (best < 1e-9 || off < 1e-9) throw Error(ErrorCode::PreconditionViolated, "world points are collinear");
  }

  const EulerAngles e0 = rotation_to_euler(init.rotation);
  detail::PnpParams p;
  p << e0.phi, e0.theta, e0.psi, init.translation.x(), init.translation.y(), init.translation.z();

  auto cost_of = [&](const detail::PnpParams& q) {
    return detail::reprojection_residual(q, corr, k).squaredNorm();
  };
  double cost = cost_of(p);
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Eigen::VectorXd r = detail::reprojection_residual(p, corr, k);
    Eigen::MatrixXd jac(r.size(), 6);
    for (int j = 0; j < 6; ++j) {
      detail::PnpParams hi = p, lo = p;
      hi[j] += opt.jacobian_step;
      lo[j] -= opt.jacobian_step;
      jac.col(j) = (detail::reprojection_residual(hi, corr, k) - detail::reprojection_residual(lo, corr, k)) /
                   (2.0 * opt.jacobian_step);
    }
    const detail::PnpParams step = (jac.transpose() * jac).ldlt().solve(-jac.transpose() * r);
    if (!step.allFinite()) break;
    double scale = 1.0;
    detail::PnpParams next = p + step;
    double next_cost = cost_of(next);
    while (!(next_cost <= cost) && scale > 1e-6) {
      scale *= 0.5;
      next = p + scale * step;
      next_cost = cost_of(next);
    }
    if (!(next_cost <= cost)) break;
    p = next;
    cost = next_cost;
    if ((scale * step).norm() < opt.step_tolerance) {
      ++it;
      break;
    }
  }

  const double rms = std::sqrt(cost / static_cast<double>(2 * corr.size()));
  const Pose pose = detail::pose_from_params(p);
  bool in_front = true;
  for (const auto& c : corr) in_front = in_front && world_to_camera(c.world, pose).z() > 0.0;
  if (!std::isfinite(rms) || rms > opt.max_rms_px || !in_front) {
    throw Error(ErrorCode::NonConvergence, "reprojection RMS " + std::to_string(rms) + " px");
  }

  PoseEstimate est;
  est.pose = pose;
  est.algorithm = Algorithm::PNP;
  est.diagnostics.reprojection_rms_px = rms;
  est.diagnostics.iterations = it;
  return est;
}

/// Closed-form pose from a plane-to-image homography. Empty unless the world
/// points are coplanar.
inline std::optional<Pose> planar_pnp_init(std::span<const Correspondence> corr, const CameraIntrinsics& k) {
  if (corr.size() < 4) return std::nullopt;
  Vec3 c = Vec3::Zero();
  for (const auto& x : corr) c += x.world.xyz;
  c /= static_cast<double>(corr.size());
  Eigen::MatrixXd centered(static_cast<Eigen::Index>(corr.size()), 3);
  for (std::size_t i = 0; i < corr.size(); ++i) centered.row(static_cast<Eigen::Index>(i)) = (corr[i].world.xyz - c).transpose();
  const Eigen::JacobiSVD<Eigen::MatrixXd> plane(centered, Eigen::ComputeThinV);
  const Eigen::Vector3d sv = plane.singularValues();
  if (!(sv[1] > 1e-9) || sv[2] > 1e-9 * sv[0]) return std::nullopt;
  Mat3 basis = plane.matrixV();
  if (basis.determinant() < 0.0) basis.col(2) = -basis.col(2);

  Eigen::MatrixXd a(2 * static_cast<Eigen::Index>(corr.size()), 9);
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const Vec3 local = basis.transpose() * (corr[i].world.xyz - c);
    const double x = local.x(), y = local.y();
    const double u = (corr[i].pixel.u - k.u0) * k.dx_cm / k.focal_cm;
    const double v = (corr[i].pixel.v - k.v0) * k.dy_cm / k.focal_cm;
    const auto r = 2 * static_cast<Eigen::Index>(i);
    a.row(r) << x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u;
    a.row(r + 1) << 0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, -v;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hm;
  hm << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
  double scale = 2.0 / (hm.col(0).norm() + hm.col(1).norm());
  if (hm(2, 2) * scale < 0.0) scale = -scale;
  hm *= scale;

  Mat3 m;
  m << hm.col(0), hm.col(1), hm.col(0).cross(hm.col(1));
  const Eigen::JacobiSVD<Mat3> ortho(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 rc = ortho.matrixU() * ortho.matrixV().transpose();  // R^T * basis
  if (rc.determinant() < 0.0) return std::nullopt;
  const Mat3 r = basis * rc.transpose();
  if (!r.allFinite()) return std::nullopt;
  return Pose{Rotation::from_matrix(r, 1e-9), WorldPoint(c - r * hm.col(2))};
}

/// pnp_baseline from the planar closed form (when it applies) and from the
/// default upright initialisation at four yaw seeds, keeping the lowest
/// reprojection error.
inline PoseEstimate pnp_multistart(std::span<const Correspondence> corr, const CameraIntrinsics& k,
                                   const PnpOptions& opt = {}) {
  std::optional<PoseEstimate> best;
  std::optional<Error> last_error;
  std::vector<Pose> seeds;
  if (auto planar = planar_pnp_init(corr, k)) seeds.push_back(*planar);
  for (const double yaw : {0.0, 0.5 * std::numbers::pi, std::numbers::pi, -0.5 * std::numbers::pi})
    seeds.push_back(default_pnp_init(corr, yaw));
  for (const Pose& seed : seeds) {
    try {
      PoseEstimate est = pnp_baseline(corr, k, seed, opt);
      if (!best || est.diagnostics.reprojection_rms_px < best->diagnostics.reprojection_rms_px) {
        best = std::move(est);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::PreconditionViolated) throw;
      last_error = e;
    }
  }
  if (!best) throw *last_error;
  return *best;
}

}  // namespace vpa
