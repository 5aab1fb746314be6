#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"
#include "vpa/conic.hpp"

using namespace vpa;

namespace {

constexpr double kPi = std::numbers::pi;

/// (x - 1)^2 + (y - 2)^2 = 0.25, scaled so the constant is 1.
EllipseCoeffs circle_1_2() {
  const double s = 1.0 / 4.75;
  return {s, 0.0, s, -2.0 * s, -4.0 * s};
}

std::vector<ImagePoint> circle_points(double from, double span, int n) {
  std::vector<ImagePoint> out;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * (from + span * i / n);
    out.push_back({1.0 + 0.5 * std::cos(a), 2.0 + 0.5 * std::sin(a)});
  }
  return out;
}

void expect_coeffs_near(const EllipseCoeffs& a, const EllipseCoeffs& b, double tol) {
  EXPECT_NEAR(a.a, b.a, tol);
  EXPECT_NEAR(a.b, b.b, tol);
  EXPECT_NEAR(a.c, b.c, tol);
  EXPECT_NEAR(a.d, b.d, tol);
  EXPECT_NEAR(a.e, b.e, tol);
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

/// Circle of radius r centred at c (camera frame) with unit normal n.
std::vector<ImagePoint> projected_circle(const Vec3& c, const Vec3& n, double r, const CameraIntrinsics& k) {
  const Vec3 u = n.unitOrthogonal();
  const Vec3 v = n.cross(u);
  std::vector<ImagePoint> out;
  for (int i = 0; i < 90; ++i) {
    const double a = 2.0 * kPi * i / 90;
    out.push_back(project_to_image(CameraPoint(c + r * (std::cos(a) * u + std::sin(a) * v)), k));
  }
  return out;
}

}  // namespace

TEST(FitEllipse, RecoversKnownCircle) {
  const auto pts = circle_points(0.0, 1.0, 40);
  expect_coeffs_near(fit_ellipse(pts), circle_1_2(), 1e-12);
}

TEST(FitEllipse, ArcGivesSameConic) {
  const auto full = fit_ellipse(circle_points(0.0, 1.0, 360));
  const auto half = fit_ellipse(circle_points(0.3, 0.5, 180));
  expect_coeffs_near(half, full, 1e-9);
}

TEST(FitEllipse, PointsSatisfyFittedConic) {
  // Rotated ellipse, semi-axes 0.03 and 0.02 cm, centred at (0.05, -0.04).
  std::vector<ImagePoint> pts;
  for (int i = 0; i < 50; ++i) {
    const double a = 2.0 * kPi * i / 50;
    const double x = 0.03 * std::cos(a), y = 0.02 * std::sin(a);
    pts.push_back({0.05 + x * std::cos(0.4) - y * std::sin(0.4), -0.04 + x * std::sin(0.4) + y * std::cos(0.4)});
  }
  const auto e = fit_ellipse(pts);
  EXPECT_LT(e.discriminant(), 0.0);
  for (const auto& p : pts) EXPECT_NEAR(e.evaluate(p), 0.0, 1e-9);
  const ImagePoint c = ellipse_center(e);
  EXPECT_NEAR(c.x, 0.05, 1e-12);
  EXPECT_NEAR(c.y, -0.04, 1e-12);
}

TEST(FitEllipse, Errors) {
  const auto four = circle_points(0.0, 1.0, 4);
  EXPECT_EQ(code_of([&] { fit_ellipse(four); }), ErrorCode::TooFewPoints);

  std::vector<ImagePoint> line;
  for (int i = 0; i < 10; ++i) line.push_back({0.1 * i, 0.2 * i + 1.0});
  EXPECT_EQ(code_of([&] { fit_ellipse(line); }), ErrorCode::DegenerateConic);

  // x y = 1 is a hyperbola.
  std::vector<ImagePoint> hyp;
  for (int i = 1; i <= 10; ++i) hyp.push_back({0.3 * i, 1.0 / (0.3 * i)});
  for (int i = 1; i <= 10; ++i) hyp.push_back({-0.3 * i, -1.0 / (0.3 * i)});
  EXPECT_EQ(code_of([&] { fit_ellipse(hyp); }), ErrorCode::DegenerateConic);
}

TEST(EllipseCenter, KnownCircle) {
  const ImagePoint c = ellipse_center(circle_1_2());
  EXPECT_NEAR(c.x, 1.0, 1e-12);
  EXPECT_NEAR(c.y, 2.0, 1e-12);
}

TEST(Cone, LiftedEllipsePointsLieOnCone) {
  const double f = 0.4;
  const EllipseCoeffs e = circle_1_2();
  const Mat3 q = cone_from_ellipse(e, f);
  EXPECT_LT(q.determinant(), 0.0);
  for (const auto& p : circle_points(0.0, 1.0, 12)) {
    const Vec3 v(p.x, p.y, f);
    EXPECT_NEAR(v.dot(q * v), 0.0, 1e-12);
    EXPECT_NEAR((3.0 * v).dot(q * (3.0 * v)), 0.0, 1e-11);
  }
}

TEST(Cone, DecompositionIsCanonical) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> a(-0.6, 0.6);
  const CameraIntrinsics k;
  for (int i = 0; i < 200; ++i) {
    const Vec3 n = Vec3(a(rng), a(rng), -1.0).normalized();
    const Vec3 c(a(rng), a(rng), 1.0 + 2.0 * std::abs(a(rng)));
    const auto d = decompose_cone(cone_from_ellipse(fit_ellipse(projected_circle(c, n, 0.15, k)), k.focal_cm));
    const Vec3& l = d.lambdas;
    EXPECT_GE(l[0], l[1]);
    EXPECT_GT(l[1], 0.0);
    EXPECT_LT(l[2], 0.0);
    const Mat3& r = d.r_a_c.matrix();
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    EXPECT_GT(r(2, 2), 0.0);
    const Mat3 rebuilt = r * l.asDiagonal() * r.transpose();
    EXPECT_LT((rebuilt - d.q).cwiseAbs().maxCoeff(), 1e-10 * l.cwiseAbs().maxCoeff());
  }
}

TEST(Cone, RejectsDegenerateMatrices) {
  EXPECT_EQ(code_of([] { decompose_cone(Mat3::Identity()); }), ErrorCode::NotACone);
  Mat3 singular = Mat3::Zero();
  singular(0, 0) = 1.0;
  singular(2, 2) = -1.0;
  EXPECT_EQ(code_of([&] { decompose_cone(singular); }), ErrorCode::NotACone);
}

TEST(Cone, HeadOnCircleHasZeroSlope) {
  const CameraIntrinsics k;
  const auto pts = projected_circle({0.0, 0.0, 2.0}, {0.0, 0.0, -1.0}, 0.15, k);
  const auto d = decompose_cone(cone_from_ellipse(fit_ellipse(pts), k.focal_cm));
  EXPECT_NEAR(section_slope(d), 0.0, 1e-6);
  for (const auto& c : candidate_normals(d)) EXPECT_LT((c.normal_ccs - Vec3(0.0, 0.0, -1.0)).norm(), 1e-6);
}

TEST(CandidateNormals, ContainTrueNormalProperty) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> a(-0.7, 0.7);
  const CameraIntrinsics k;
  for (int i = 0; i < 500; ++i) {
    const Vec3 n = Vec3(a(rng), a(rng), -1.0).normalized();
    const Vec3 c(a(rng), a(rng), 1.0 + 3.0 * std::abs(a(rng)));
    const auto d = decompose_cone(cone_from_ellipse(fit_ellipse(projected_circle(c, n, 0.15, k)), k.focal_cm));
    const auto cands = candidate_normals(d);
    const double best = std::min((cands[0].normal_ccs - n).norm(), (cands[1].normal_ccs - n).norm());
    EXPECT_LT(best, 1e-6);
    for (const auto& cand : cands) {
      EXPECT_NEAR(cand.normal_ccs.norm(), 1.0, 1e-12);
      EXPECT_LE(cand.normal_ccs.z(), 0.0);
    }
  }
}

TEST(LuminairePlane, BackprojectedCentreMatchesTruth) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> a(-0.6, 0.6);
  const CameraIntrinsics k;
  for (int i = 0; i < 200; ++i) {
    const Vec3 n = Vec3(a(rng), a(rng), -1.0).normalized();
    const Vec3 c(a(rng), a(rng), 1.5 + 2.0 * std::abs(a(rng)));
    const auto d = decompose_cone(cone_from_ellipse(fit_ellipse(projected_circle(c, n, 0.15, k)), k.focal_cm));
    const auto cands = candidate_normals(d);
    const auto& right = (cands[0].normal_ccs - n).norm() < (cands[1].normal_ccs - n).norm() ? cands[0] : cands[1];
    const PlaneAcs plane = luminaire_plane(d, right.k, 0.15);
    const CameraPoint g = backproject_to_plane(project_to_image(CameraPoint(c), k), plane, d, k);
    EXPECT_LT((g.xyz - c).norm(), 1e-8);
    // Plane distance from the camera centre equals |n . c|.
    EXPECT_NEAR(plane.b_led / std::sqrt(1.0 + right.k * right.k), std::abs(n.dot(c)), 1e-8);
  }
}

TEST(LuminairePlane, ProbeInterceptInvariance) {
  const CameraIntrinsics k;
  const auto d = decompose_cone(cone_from_ellipse(
      fit_ellipse(projected_circle({0.3, -0.2, 2.0}, Vec3(0.2, -0.3, -1.0).normalized(), 0.15, k)), k.focal_cm));
  for (const auto& c : candidate_normals(d)) {
    const double ref = luminaire_plane(d, c.k, 0.15, 1.0).b_led;
    for (const double probe : {1e-3, 0.37, 5.0, 1e3}) {
      EXPECT_NEAR(luminaire_plane(d, c.k, 0.15, probe).b_led, ref, 1e-10);
    }
  }
}

TEST(LuminairePlane, ParallelToGeneratorThrows) {
  ConeDecomposition d;
  d.lambdas = Vec3(4.0, 1.0, -1.0);  // generators z = +-2 x
  EXPECT_EQ(code_of([&] { luminaire_plane(d, 2.0, 0.15); }), ErrorCode::ParallelLine);
  EXPECT_EQ(code_of([&] { luminaire_plane(d, 0.0, -1.0); }), ErrorCode::InvalidArgument);
}

TEST(Backproject, Errors) {
  const CameraIntrinsics k;
  ConeDecomposition d;
  // Ray (f, 0, f) runs inside z = x.
  EXPECT_EQ(code_of([&] { backproject_to_plane(ImagePoint{k.focal_cm, 0.0}, PlaneAcs{1.0, 1.0}, d, k); }),
            ErrorCode::LineParallelToPlane);
  EXPECT_EQ(code_of([&] { backproject_to_plane(ImagePoint{0.0, 0.0}, PlaneAcs{0.0, -1.0}, d, k); }),
            ErrorCode::BehindCamera);
  const CameraPoint p = backproject_to_plane(PixelPoint{320.0, 240.0}, PlaneAcs{0.0, 2.0}, d, k);
  EXPECT_LT((p.xyz - Vec3(0.0, 0.0, 2.0)).norm(), 1e-12);
}
