#pragma once
//! \file
//! Image ellipse of a circular luminaire and the viewing cone it spans.
//!
//! The image contour A x^2 + B xy + C y^2 + D x + E y + 1 = 0 (ICS, cm) is
//! lifted to the cone v^T Q v = 0 through the camera centre. Diagonalising Q
//! gives the auxiliary frame (ACS) in which the cone reads
//! l1 x^2 + l2 y^2 + l3 z^2 = 0 with l3 < 0 < l2 <= l1; there the two
//! circular sections are the planes z = +-k x + b.

#include <array>
#include <cmath>
#include <span>

#include <Eigen/Dense>

#include "vpa/error.hpp"
#include "vpa/frames.hpp"

namespace vpa {

/// General conic with the constant term normalised to 1.
struct EllipseCoeffs {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double e = 0.0;

  [[nodiscard]] double discriminant() const { return b * b - 4.0 * a * c; }
  [[nodiscard]] double evaluate(const ImagePoint& p) const {
    return a * p.x * p.x + b * p.x * p.y + c * p.y * p.y + d * p.x + e * p.y + 1.0;
  }
};

/// Coefficients of a general conic (a, b, c, d, e, f); normalises to f = 1.
inline EllipseCoeffs normalize_conic(const Eigen::Matrix<double, 6, 1>& g) {
  const double scale = g.head<5>().cwiseAbs().maxCoeff();
  if (!(std::abs(g[5]) > 1e-14 * scale)) {
    throw Error(ErrorCode::DegenerateConic, "conic passes through the image origin");
  }
  const auto n = g / g[5];
  return {n[0], n[1], n[2], n[3], n[4]};
}

inline void check_ellipse(const EllipseCoeffs& e) {
  const double scale = std::max({std::abs(e.a), std::abs(e.b), std::abs(e.c)});
  if (!std::isfinite(e.a) || !std::isfinite(e.b) || !std::isfinite(e.c) || !std::isfinite(e.d) ||
      !std::isfinite(e.e) || !(e.discriminant() < -1e-12 * scale * scale)) {
    throw Error(ErrorCode::DegenerateConic, "fitted conic is not an ellipse");
  }
}

/// Algebraic least-squares ellipse fit.
///
/// The points are centred on their mean and scaled to unit RMS radius, the
/// five coefficients are solved with the constant fixed to 1 in that frame,
/// then mapped back and renormalised so the constant is 1 in the ICS.
inline EllipseCoeffs fit_ellipse(std::span<const ImagePoint> points) {
  if (points.size() < 5) throw Error(ErrorCode::TooFewPoints, "need at least 5 points");

  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double spread = 0.0;
  for (const auto& p : points) spread += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
  const double s = std::sqrt(spread / (2.0 * static_cast<double>(points.size())));
  if (!(s > 0.0)) throw Error(ErrorCode::DegenerateConic, "all points coincide");

  Eigen::MatrixXd design(points.size(), 5);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = (points[i].x - mx) / s;
    const double y = (points[i].y - my) / s;
    design.row(static_cast<Eigen::Index>(i)) << x * x, x * y, y * y, x, y;
  }
  const Eigen::VectorXd rhs = -Eigen::VectorXd::Ones(static_cast<Eigen::Index>(points.size()));
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 5) throw Error(ErrorCode::DegenerateConic, "rank-deficient point set");
  const Eigen::Matrix<double, 5, 1> t = qr.solve(rhs);

  // Undo x~ = (x - mx)/s, y~ = (y - my)/s, multiplied through by s^2.
  const double A = t[0], B = t[1], C = t[2], D = t[3], E = t[4];
  Eigen::Matrix<double, 6, 1> g;
  g << A, B, C, -2.0 * A * mx - B * my + D * s, -2.0 * C * my - B * mx + E * s,
      A * mx * mx + B * mx * my + C * my * my - D * s * mx - E * s * my + s * s;
  const EllipseCoeffs out = normalize_conic(g);
  check_ellipse(out);
  return out;
}

inline ImagePoint ellipse_center(const EllipseCoeffs& e) {
  const double den = 4.0 * e.a * e.c - e.b * e.b;
  const double scale = std::max({std::abs(e.a), std::abs(e.b), std::abs(e.c)});
  if (!(std::abs(den) > 1e-12 * scale * scale)) {
    throw Error(ErrorCode::DegenerateConic, "4ac - b^2 is zero");
  }
  return {(e.b * e.e - 2.0 * e.c * e.d) / den, (e.b * e.d - 2.0 * e.a * e.e) / den};
}

/// Cone through the camera centre and the image ellipse embedded at z = f.
///
/// Sign-normalised to have exactly one negative eigenvalue (det Q < 0).
inline Mat3 cone_from_ellipse(const EllipseCoeffs& e, double focal_cm) {
  const double f = focal_cm;
  Mat3 q;
  q << e.a * f * f, e.b * f * f / 2.0, e.d * f / 2.0,  //
      e.b * f * f / 2.0, e.c * f * f, e.e * f / 2.0,    //
      e.d * f / 2.0, e.e * f / 2.0, 1.0;
  if (q.determinant() > 0.0) q = -q;
  return q;
}

struct ConeDecomposition {
  Mat3 q = Mat3::Identity();
  Vec3 lambdas = Vec3::Zero();  // l1 >= l2 > 0 > l3
  Rotation r_a_c;               // ACS -> CCS, columns are eigenvectors

  [[nodiscard]] AcsPoint to_acs(const Vec3& ccs) const {
    return AcsPoint(r_a_c.matrix().transpose() * ccs);
  }
  [[nodiscard]] CameraPoint to_ccs(const AcsPoint& acs) const {
    return CameraPoint(r_a_c * acs.xyz);
  }
};

/// Eigen-decomposition of a cone matrix, canonicalised.
///
/// The negative eigenpair goes to the third column with its eigenvector
/// pointing into the scene (+z in CCS). The remaining two are ordered
/// l1 >= l2; the second column's largest component is made positive and the
/// first column completes a right-handed frame.
inline ConeDecomposition decompose_cone(const Mat3& q) {
  const Mat3 sym = 0.5 * (q + q.transpose());
  const Eigen::SelfAdjointEigenSolver<Mat3> es(sym);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NotACone, "eigen solver failed");
  const Vec3 ev = es.eigenvalues();  // ascending
  const Mat3 vec = es.eigenvectors();

  const double scale = ev.cwiseAbs().sum();
  if (!(scale > 0.0) || ev.cwiseAbs().minCoeff() < 1e-10 * scale) {
    throw Error(ErrorCode::NotACone, "zero eigenvalue");
  }
  int neg_count = 0;
  for (int i = 0; i < 3; ++i) neg_count += ev[i] < 0.0 ? 1 : 0;

  Vec3 lambdas;
  Mat3 cols;
  if (neg_count == 1) {
    lambdas << ev[2], ev[1], ev[0];
    cols << vec.col(2), vec.col(1), vec.col(0);
  } else if (neg_count == 2) {
    // (-,-,+): flip the overall sign of the quadric.
    lambdas << -ev[0], -ev[1], -ev[2];
    cols << vec.col(0), vec.col(1), vec.col(2);
  } else {
    throw Error(ErrorCode::NotACone, "eigenvalue signature is not (+,+,-)");
  }

  if (cols(2, 2) < 0.0) cols.col(2) = -cols.col(2);
  Eigen::Index imax = 0;
  cols.col(1).cwiseAbs().maxCoeff(&imax);
  if (cols(imax, 1) < 0.0) cols.col(1) = -cols.col(1);
  cols.col(0) = cols.col(1).cross(cols.col(2));

  ConeDecomposition out;
  out.q = neg_count == 1 ? sym : Mat3(-sym);
  out.lambdas = lambdas;
  out.r_a_c = Rotation::from_matrix(cols, 1e-9);
  return out;
}

struct CandidateNormal {
  double k = 0.0;                   // slope of z^a = k x^a + b
  Vec3 normal_ccs = Vec3::UnitZ();  // unit, z^c <= 0
};

/// Slope magnitude sqrt((l1 - l2)/(l2 - l3)) of the circular sections.
inline double section_slope(const ConeDecomposition& d) {
  const double l1 = d.lambdas[0], l2 = d.lambdas[1], l3 = d.lambdas[2];
  return std::sqrt(std::max(0.0, (l1 - l2) / (l2 - l3)));
}

inline CandidateNormal candidate_for_slope(const ConeDecomposition& d, double k) {
  Vec3 n = d.r_a_c * (Vec3(k, 0.0, -1.0) / std::sqrt(k * k + 1.0));
  if (n.z() > 0.0) n = -n;
  return {k, n};
}

/// The two circle orientations compatible with the cone (+k and -k).
inline std::array<CandidateNormal, 2> candidate_normals(const ConeDecomposition& d) {
  const double k = section_slope(d);
  return {candidate_for_slope(d, k), candidate_for_slope(d, -k)};
}

/// Luminaire plane z^a = k x^a + b_led in the ACS.
struct PlaneAcs {
  double k = 0.0;
  double b_led = 0.0;  // m
};

/// Scale the probe section z = k x + probe_b so its diameter in the x^a z^a
/// plane equals 2 * radius. The section meets the generators
/// z = +-sqrt(-l1/l3) x at the endpoints of that diameter.
inline PlaneAcs luminaire_plane(const ConeDecomposition& d, double k, double radius,
                                double probe_b = 1.0) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
  if (!(probe_b > 0.0)) throw Error(ErrorCode::InvalidArgument, "probe intercept must be positive");
  const double m = std::sqrt(-d.lambdas[0] / d.lambdas[2]);
  const double tol = 1e-12 * std::max(1.0, m);
  if (std::abs(m - k) < tol || std::abs(m + k) < tol) {
    throw Error(ErrorCode::ParallelLine, "plane is parallel to a cone generator");
  }
  const Vec3 l1(probe_b / (m - k), 0.0, m * probe_b / (m - k));
  const Vec3 l2(-probe_b / (m + k), 0.0, m * probe_b / (m + k));
  const double chord = (l1 - l2).norm();
  return {k, 2.0 * radius * probe_b / chord};
}

/// Intersect the viewing ray of an image point with the luminaire plane.
inline CameraPoint backproject_to_plane(const ImagePoint& q, const PlaneAcs& plane,
                                        const ConeDecomposition& d, const CameraIntrinsics& k) {
  const Vec3 ray_a = d.r_a_c.matrix().transpose() * image_plane_ray(q, k);
  const double den = ray_a.z() - plane.k * ray_a.x();
  if (std::abs(den) < 1e-14 * ray_a.norm()) {
    throw Error(ErrorCode::LineParallelToPlane, "viewing ray is parallel to the plane");
  }
  const double t = plane.b_led / den;
  const CameraPoint p = d.to_ccs(AcsPoint(t * ray_a));
  if (!(t > 0.0) || !(p.z() > 0.0)) {
    throw Error(ErrorCode::BehindCamera, "plane intersection is behind the camera");
  }
  return p;
}

inline CameraPoint backproject_to_plane(const PixelPoint& q, const PlaneAcs& plane,
                                        const ConeDecomposition& d, const CameraIntrinsics& k) {
  return backproject_to_plane(pixel_to_image(q, k), plane, d, k);
}

}  // namespace vpa
