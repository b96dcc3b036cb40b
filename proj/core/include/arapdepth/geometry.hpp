#pragma once

#include <Eigen/Core>

namespace arapdepth {

using Point3 = Eigen::Vector3d;
using Pixel = Eigen::Vector2d;

/// Pinhole calibration. Maps camera coordinates to pixels via
///   K = [fx skew cx; 0 fy cy; 0 0 1].
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;

  static CameraIntrinsics identity() { return {}; }

  Eigen::Matrix3d matrix() const;

  /// Throws kConfiguration unless fx > 0, fy > 0 and all entries are finite.
  void validate() const;

  bool operator==(const CameraIntrinsics&) const = default;
};

/// A unit-length viewing direction with positive z (in front of the camera).
class UnitRay {
 public:
  /// Normalizes `direction`. Throws kDomain for zero, non-finite or
  /// backward-facing (z <= 0) input.
  static UnitRay from_direction(const Eigen::Vector3d& direction);

  const Eigen::Vector3d& direction() const { return direction_; }
  double dot(const UnitRay& other) const { return direction_.dot(other.direction_); }

 private:
  explicit UnitRay(const Eigen::Vector3d& d) : direction_(d) {}
  Eigen::Vector3d direction_;
};

/// Plane n^T x = plane_depth with unit normal n; plane_depth > 0 when the
/// plane lies in front of the camera.
struct PlaneParams {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double plane_depth = 1.0;
};

inline constexpr double kCollinearityTolerance = 1e-8;
inline constexpr double kGrazingTolerance = 1e-6;

/// Unit ray through `pixel`: K^-1 (u, v, 1)^T normalized.
UnitRay backproject_ray(const CameraIntrinsics& K, const Pixel& pixel);

/// Pixel onto which a camera-frame point projects. Requires point.z() > 0.
Pixel project(const CameraIntrinsics& K, const Point3& point);

/// depth * ray. `depth` is range along the ray and must be positive.
Point3 point_from_depth(double depth, const UnitRay& ray);

/// Unit normal of the plane through three points, oriented so that
/// normal . x_a > 0. Throws kDegenerateTriple when
/// |cross| <= 1e-8 * |x_a - x_1| * |x_a - x_2|.
Eigen::Vector3d plane_normal(const Point3& x_a, const Point3& x_1, const Point3& x_2);

/// normal . x_a
double plane_depth(const Eigen::Vector3d& normal, const Point3& x_a);

/// Plane through three points (normal via plane_normal, depth through x_a).
PlaneParams plane_from_points(const Point3& x_a, const Point3& x_1, const Point3& x_2);

/// Range along `ray` at which it meets `plane`. Throws kGrazingRay when
/// |n . e| <= 1e-6 and kBehindCamera when the intersection is not in front.
double ray_plane_depth(const PlaneParams& plane, const UnitRay& ray);

/// Range <-> z-depth along a ray.
double range_to_zdepth(double range, const UnitRay& ray);
double zdepth_to_range(double z, const UnitRay& ray);

}  // namespace arapdepth
