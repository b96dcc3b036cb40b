#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "arapdepth/error.hpp"
#include "arapdepth/geometry.hpp"

using namespace arapdepth;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kDomain;
}

UnitRay ray(double x, double y, double z) { return UnitRay::from_direction({x, y, z}); }

}  // namespace

TEST(BackprojectRay, IdentityPrincipalRay) {
  const UnitRay e = backproject_ray(CameraIntrinsics::identity(), Pixel(0, 0));
  EXPECT_NEAR((e.direction() - Eigen::Vector3d(0, 0, 1)).norm(), 0.0, 1e-15);
}

TEST(BackprojectRay, ScaledFocal) {
  CameraIntrinsics K{2.0, 2.0, 0.0, 0.0, 0.0};
  const UnitRay e = backproject_ray(K, Pixel(2, 2));
  const Eigen::Vector3d expect = Eigen::Vector3d(1, 1, 1) / std::sqrt(3.0);
  EXPECT_NEAR((e.direction() - expect).norm(), 0.0, 1e-15);
}

TEST(BackprojectRay, IdentityOffAxis) {
  const UnitRay e = backproject_ray(CameraIntrinsics::identity(), Pixel(3, 4));
  const Eigen::Vector3d expect = Eigen::Vector3d(3, 4, 1) / std::sqrt(26.0);
  EXPECT_NEAR((e.direction() - expect).norm(), 0.0, 1e-15);
}

TEST(BackprojectRay, RejectsBadCalibration) {
  CameraIntrinsics K{0.0, 1.0, 0.0, 0.0, 0.0};
  EXPECT_EQ(code_of([&] { backproject_ray(K, Pixel(0, 0)); }), ErrorCode::kConfiguration);
  K = {1.0, NAN, 0.0, 0.0, 0.0};
  EXPECT_EQ(code_of([&] { backproject_ray(K, Pixel(0, 0)); }), ErrorCode::kConfiguration);
}

TEST(PointFromDepth, Examples) {
  EXPECT_EQ(point_from_depth(1.0, ray(0, 0, 1)), Point3(0, 0, 1));
  EXPECT_EQ(point_from_depth(2.5, ray(0, 0, 1)), Point3(0, 0, 2.5));
  EXPECT_NEAR((point_from_depth(2.0, ray(0.6, 0, 0.8)) - Point3(1.2, 0, 1.6)).norm(), 0.0, 1e-15);
}

TEST(PointFromDepth, NonPositiveDepthIsDomainError) {
  EXPECT_EQ(code_of([] { point_from_depth(0.0, ray(0, 0, 1)); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { point_from_depth(-1.0, ray(0, 0, 1)); }), ErrorCode::kDomain);
}

TEST(UnitRayTest, RejectsBackwardAndZero) {
  EXPECT_EQ(code_of([] { ray(0, 0, 0); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { ray(0, 0, -1); }), ErrorCode::kDomain);
  EXPECT_NEAR(ray(3, 4, 12).direction().norm(), 1.0, 1e-15);
}

TEST(PlaneNormal, FrontoParallel) {
  const Eigen::Vector3d n = plane_normal({0, 0, 2}, {1, 0, 2}, {0, 1, 2});
  EXPECT_NEAR((n - Eigen::Vector3d(0, 0, 1)).norm(), 0.0, 1e-15);
}

TEST(PlaneNormal, CollinearIsDegenerate) {
  EXPECT_EQ(code_of([] { plane_normal({0, 0, 1}, {0, 0, 1 + 1e-15}, {0, 0, 1}); }),
            ErrorCode::kDegenerateTriple);
  EXPECT_EQ(code_of([] { plane_normal({0, 0, 1}, {1, 1, 2}, {2, 2, 3}); }),
            ErrorCode::kDegenerateTriple);
}

TEST(PlaneNormal, ObliqueTripleOrthogonalAndSignFixed) {
  const Point3 xa(1, 0, 1), x1(0, 1, 1), x2(0, 0, 2);
  const Eigen::Vector3d n = plane_normal(xa, x1, x2);
  EXPECT_NEAR(n.norm(), 1.0, 1e-12);
  EXPECT_LT(std::abs(n.dot(xa - x1)), 1e-10);
  EXPECT_LT(std::abs(n.dot(xa - x2)), 1e-10);
  EXPECT_GT(n.dot(xa), 0.0);
  // Operand order must not flip the orientation.
  EXPECT_NEAR((plane_normal(xa, x2, x1) - n).norm(), 0.0, 1e-15);
}

TEST(PlaneDepth, Examples) {
  EXPECT_DOUBLE_EQ(plane_depth({0, 0, 1}, {0, 0, 2}), 2.0);
  EXPECT_DOUBLE_EQ(plane_depth({0, 0, 1}, {5, 7, 2}), 2.0);
  EXPECT_NEAR(plane_depth(Eigen::Vector3d(1, 1, 1) / std::sqrt(3.0), {1, 1, 1}), std::sqrt(3.0), 1e-15);
}

TEST(RayPlaneDepth, Examples) {
  const PlaneParams plane{{0, 0, 1}, 2.0};
  EXPECT_DOUBLE_EQ(ray_plane_depth(plane, ray(0, 0, 1)), 2.0);
  EXPECT_NEAR(ray_plane_depth(plane, ray(1, 0, 1)), 2.0 * std::sqrt(2.0), 1e-14);
}

TEST(RayPlaneDepth, GrazingAndBehind) {
  const PlaneParams plane{{0, 0, 1}, 2.0};
  // A forward ray cannot be exactly parallel to z = 2; take one within tolerance.
  EXPECT_EQ(code_of([&] { ray_plane_depth(plane, ray(1, 0, 1e-9)); }), ErrorCode::kGrazingRay);
  const PlaneParams behind{Eigen::Vector3d(0, 0, -1), 2.0};
  EXPECT_EQ(code_of([&] { ray_plane_depth(behind, ray(0, 0, 1)); }), ErrorCode::kBehindCamera);
}

TEST(DepthConversion, Examples) {
  EXPECT_DOUBLE_EQ(range_to_zdepth(2.0, ray(0, 0, 1)), 2.0);
  EXPECT_NEAR(zdepth_to_range(1.0, ray(0.6, 0, 0.8)), 1.25, 1e-15);
  EXPECT_EQ(code_of([] { range_to_zdepth(0.0, ray(0, 0, 1)); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { zdepth_to_range(-2.0, ray(0, 0, 1)); }), ErrorCode::kDomain);
}

class GeometryProperties : public ::testing::TestWithParam<int> {};

TEST_P(GeometryProperties, RandomTriplesAndRays) {
  std::mt19937_64 rng(1000 + GetParam());
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const CameraIntrinsics K{500.0 + 100 * u(rng), 480.0 + 100 * u(rng), 320 + 10 * u(rng),
                           240 + 10 * u(rng), 0.5 * u(rng)};
  for (int trial = 0; trial < 200; ++trial) {
    const Point3 xa(u(rng), u(rng), 5 + u(rng));
    const Point3 x1 = xa + Point3(u(rng), u(rng), u(rng));
    const Point3 x2 = xa + Point3(u(rng), u(rng), u(rng));
    const PlaneParams plane = plane_from_points(xa, x1, x2);
    EXPECT_NEAR(plane.normal.norm(), 1.0, 1e-12);
    EXPECT_LT(std::abs(plane.normal.dot(xa - x1)), 1e-10);
    EXPECT_LT(std::abs(plane.normal.dot(xa - x2)), 1e-10);
    for (const Point3& x : {xa, x1, x2}) EXPECT_NEAR(plane.normal.dot(x) - plane.plane_depth, 0.0, 1e-9);

    const Point3 target = xa + 0.3 * (x1 - xa) + 0.3 * (x2 - xa);
    const UnitRay e = UnitRay::from_direction(target);
    if (std::abs(plane.normal.dot(e.direction())) > 1e-3) {
      const double lambda = ray_plane_depth(plane, e);
      EXPECT_NEAR(lambda, target.norm(), 1e-9 * target.norm());
      EXPECT_NEAR(plane.normal.dot(point_from_depth(lambda, e)) - plane.plane_depth, 0.0, 1e-9);
    }

    const double d = 0.1 + 20 * (u(rng) + 1);
    const UnitRay back = backproject_ray(K, project(K, point_from_depth(d, e)));
    EXPECT_NEAR((back.direction() - e.direction()).norm(), 0.0, 1e-10);

    const double z = range_to_zdepth(d, e);
    EXPECT_NEAR(zdepth_to_range(z, e), d, 1e-12 * d);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, GeometryProperties, ::testing::Range(0, 5));
