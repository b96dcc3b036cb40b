#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "arapdepth/geometry.hpp"
#include "arapdepth/sequence.hpp"

namespace arapdepth {

/// One deforming object: a (resolution x resolution) grid of control
/// vertices around `center`, triangulated into planar facets. Interior
/// vertices get a random relief along z.
struct SyntheticObject {
  Eigen::Vector3d center{0.0, 0.0, 7.0};
  double half_size = 1.2;
  int resolution = 3;
  double relief = 0.4;
  double deformation_amplitude = 0.0;  // scene units
  double deformation_frequency = 0.6;  // radians per frame
};

/// Parameters of a generated sequence: a textured background plane plus
/// objects, all carried by a common rigid motion about `pivot`, with the
/// objects' vertices additionally displaced by independent sinusoids.
struct SceneSpec {
  int width = 160;
  int height = 120;
  int frames = 2;
  double focal = 160.0;
  Eigen::Vector3d background_normal{0.05, -0.1, 1.0};
  double background_depth = 10.0;
  double texture_contrast = 0.08;
  std::vector<SyntheticObject> objects;
  Eigen::Vector3d rotation_per_frame{0.0, 0.01, 0.004};     // axis-angle, radians
  Eigen::Vector3d translation_per_frame{0.05, 0.02, -0.1};  // scene units
  Eigen::Vector3d pivot{0.0, 0.0, 9.0};

  /// The two-object layout used by the experiments: left and right objects
  /// in front of the background, deforming with `amplitude`.
  static SceneSpec two_object(double amplitude);

  void validate() const;
};

/// key=value text; keys cover the SceneSpec scalars plus
/// object<i>_{x,y,z,half_size,resolution,relief,amplitude,frequency}.
SceneSpec parse_scene_spec(std::istream& in);
SceneSpec read_scene_spec(const std::string& path);

/// Where a camera ray first meets the scene in a given frame.
struct SurfaceHit {
  int surface = -1;  // -1 background, otherwise object index
  int facet = -1;
  Eigen::Vector3d coords = Eigen::Vector3d::Zero();  // barycentric, or (s, t, 0) on the background
  double range = 0.0;
};

class SyntheticScene {
 public:
  SyntheticScene(SceneSpec spec, std::uint64_t seed);

  const SceneSpec& spec() const { return spec_; }
  const CameraIntrinsics& intrinsics() const { return sequence_.intrinsics; }
  /// Rendered images, ground-truth range depth and exact forward flow.
  const FrameSequence& sequence() const { return sequence_; }
  /// Largest |pixel + flow - projection| found while generating the flow.
  double max_flow_residual() const { return max_flow_residual_; }

  std::optional<SurfaceHit> raycast(int frame, const UnitRay& ray) const;
  /// 3D position in frame `at_frame` of the surface point hit by `ray` in `frame`.
  std::optional<Point3> track_point(int frame, const UnitRay& ray, int at_frame) const;
  Point3 surface_position(const SurfaceHit& hit, int frame) const;

 private:
  struct Facet {
    std::array<int, 3> v{};
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
  };
  struct ObjectState {
    std::vector<Facet> facets;
    std::vector<std::vector<Eigen::Vector3d>> vertices;  // [frame][vertex]
  };

  void build_objects(std::uint64_t seed);
  void render();
  Eigen::Matrix3d rotation(int frame) const;
  Point3 rigid(int frame, const Point3& p) const;
  Eigen::Vector3d shade(const SurfaceHit& hit) const;

  SceneSpec spec_;
  std::vector<ObjectState> objects_;
  Eigen::Vector3d background_origin_;
  Eigen::Vector3d background_s_;
  Eigen::Vector3d background_t_;
  Eigen::Vector3d background_color_;
  FrameSequence sequence_;
  double max_flow_residual_ = 0.0;
};

}  // namespace arapdepth
