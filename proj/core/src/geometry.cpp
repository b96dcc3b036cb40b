#include "arapdepth/geometry.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "arapdepth/error.hpp"

namespace arapdepth {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDomain: return "domain error";
    case ErrorCode::kConfiguration: return "configuration error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kIo: return "I/O error";
    case ErrorCode::kDegenerateTriple: return "degenerate triple";
    case ErrorCode::kGrazingRay: return "grazing ray";
    case ErrorCode::kBehindCamera: return "behind camera";
    case ErrorCode::kDegenerateSuperpixel: return "degenerate superpixel";
    case ErrorCode::kNumericalFailure: return "numerical failure";
    case ErrorCode::kUnusablePrior: return "unusable prior";
    case ErrorCode::kEmptyEvaluation: return "empty evaluation";
  }
  return "error";
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d K;
  K << fx, skew, cx,
       0.0, fy, cy,
       0.0, 0.0, 1.0;
  return K;
}

void CameraIntrinsics::validate() const {
  const bool finite = std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) &&
                      std::isfinite(cy) && std::isfinite(skew);
  if (!finite || !(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kConfiguration,
                "camera intrinsics are not invertible (need finite values, fx > 0, fy > 0)");
  }
}

UnitRay UnitRay::from_direction(const Eigen::Vector3d& direction) {
  const double norm = direction.norm();
  if (!std::isfinite(norm) || norm == 0.0) {
    throw Error(ErrorCode::kDomain, "ray direction must be finite and non-zero");
  }
  if (!(direction.z() > 0.0)) {
    throw Error(ErrorCode::kDomain, "ray direction must point in front of the camera");
  }
  return UnitRay(direction / norm);
}

UnitRay backproject_ray(const CameraIntrinsics& K, const Pixel& pixel) {
  K.validate();
  if (!pixel.allFinite()) {
    throw Error(ErrorCode::kDomain, "pixel coordinates must be finite");
  }
  const double y = (pixel.y() - K.cy) / K.fy;
  const double x = (pixel.x() - K.cx - K.skew * y) / K.fx;
  return UnitRay::from_direction(Eigen::Vector3d(x, y, 1.0));
}

Pixel project(const CameraIntrinsics& K, const Point3& point) {
  if (!(point.z() > 0.0)) {
    throw Error(ErrorCode::kBehindCamera, "cannot project a point with z <= 0");
  }
  const double x = point.x() / point.z();
  const double y = point.y() / point.z();
  return {K.fx * x + K.skew * y + K.cx, K.fy * y + K.cy};
}

Point3 point_from_depth(double depth, const UnitRay& ray) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw Error(ErrorCode::kDomain, "depth must be positive and finite");
  }
  return depth * ray.direction();
}

Eigen::Vector3d plane_normal(const Point3& x_a, const Point3& x_1, const Point3& x_2) {
  const Eigen::Vector3d a = x_a - x_1;
  const Eigen::Vector3d b = x_a - x_2;
  Eigen::Vector3d n = a.cross(b);
  const double norm = n.norm();
  const double scale = a.norm() * b.norm();
  if (!(norm > kCollinearityTolerance * scale) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kDegenerateTriple, "plane points are collinear");
  }
  n /= norm;
  if (n.dot(x_a) < 0.0) n = -n;
  return n;
}

double plane_depth(const Eigen::Vector3d& normal, const Point3& x_a) {
  return normal.dot(x_a);
}

PlaneParams plane_from_points(const Point3& x_a, const Point3& x_1, const Point3& x_2) {
  PlaneParams plane;
  plane.normal = plane_normal(x_a, x_1, x_2);
  plane.plane_depth = plane_depth(plane.normal, x_a);
  return plane;
}

double ray_plane_depth(const PlaneParams& plane, const UnitRay& ray) {
  const double cosine = plane.normal.dot(ray.direction());
  if (!(std::abs(cosine) > kGrazingTolerance)) {
    throw Error(ErrorCode::kGrazingRay, "ray is parallel to the plane");
  }
  const double lambda = plane.plane_depth / cosine;
  if (!(lambda > 0.0)) {
    throw Error(ErrorCode::kBehindCamera, "ray meets the plane behind the camera");
  }
  return lambda;
}

double range_to_zdepth(double range, const UnitRay& ray) {
  if (!(range > 0.0)) throw Error(ErrorCode::kDomain, "range must be positive");
  return range * ray.direction().z();
}

double zdepth_to_range(double z, const UnitRay& ray) {
  if (!(z > 0.0)) throw Error(ErrorCode::kDomain, "z-depth must be positive");
  return z / ray.direction().z();
}

}  // namespace arapdepth
