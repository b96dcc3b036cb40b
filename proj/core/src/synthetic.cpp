#include "arapdepth/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Geometry>

#include "arapdepth/error.hpp"

namespace arapdepth {

namespace {

constexpr double kMinObjectDepth = 0.1;

double parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ParseError("invalid value for " + key + ": '" + text + "'");
  }
  if (used != text.size()) throw ParseError("invalid value for " + key + ": '" + text + "'");
  return v;
}

int parse_count(const std::string& key, const std::string& text) {
  const double v = parse_number(key, text);
  if (v != std::floor(v) || std::abs(v) > 1e6) throw ParseError(key + " must be an integer");
  return static_cast<int>(v);
}

bool set_vector(Eigen::Vector3d& v, const std::string& key, const std::string& prefix,
                const std::string& value) {
  for (int k = 0; k < 3; ++k) {
    if (key == prefix + "_" + "xyz"[k]) {
      v[k] = parse_number(key, value);
      return true;
    }
  }
  return false;
}

// Moller-Trumbore; returns (range, u, v) when the ray hits the triangle.
std::optional<Eigen::Vector3d> intersect_triangle(const Eigen::Vector3d& dir, const Point3& a,
                                                  const Point3& b, const Point3& c) {
  const Eigen::Vector3d e1 = b - a;
  const Eigen::Vector3d e2 = c - a;
  const Eigen::Vector3d p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Eigen::Vector3d s = -a;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Eigen::Vector3d q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (!(t > 0.0)) return std::nullopt;
  return Eigen::Vector3d(t, u, v);
}

}  // namespace

SceneSpec SceneSpec::two_object(double amplitude) {
  SceneSpec spec;
  SyntheticObject left;
  left.center = {-1.7, 0.1, 7.0};
  left.half_size = 1.0;
  left.deformation_amplitude = amplitude;
  SyntheticObject right;
  right.center = {1.6, -0.2, 6.5};
  right.half_size = 1.0;
  right.deformation_amplitude = amplitude;
  right.deformation_frequency = 0.45;
  spec.objects = {left, right};
  return spec;
}

void SceneSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfiguration, msg); };
  if (width < 4 || height < 4) fail("scene image must be at least 4x4");
  if (frames < 1) fail("scene needs at least one frame");
  if (!(focal > 0.0)) fail("focal length must be positive");
  if (!(background_normal.norm() > 0.0) || !background_normal.allFinite()) {
    fail("background normal must be non-zero");
  }
  if (!(background_depth > 0.0)) fail("background must lie in front of the camera");
  if (!(texture_contrast >= 0.0 && texture_contrast <= 0.5)) {
    fail("texture_contrast must lie in [0, 0.5]");
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const SyntheticObject& o = objects[i];
    const std::string name = "object" + std::to_string(i);
    if (o.resolution < 2) fail(name + " resolution must be at least 2");
    if (!(o.half_size > 0.0)) fail(name + " half_size must be positive");
    if (!(o.relief >= 0.0) || !(o.deformation_amplitude >= 0.0)) {
      fail(name + " relief and amplitude must be non-negative");
    }
    const double nearest = o.center.z() - o.relief - 2.0 * o.deformation_amplitude;
    if (!(nearest > kMinObjectDepth)) fail(name + " is behind the camera");
  }
}

SceneSpec parse_scene_spec(std::istream& in) {
  SceneSpec spec;
  std::string line;
  long long offset = 0;
  while (std::getline(in, line)) {
    const long long line_start = offset;
    offset += static_cast<long long>(line.size()) + 1;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_start);
    auto trim = [](std::string s) {
      const auto first = s.find_first_not_of(" \t\r");
      if (first == std::string::npos) return std::string();
      return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "width") {
        spec.width = parse_count(key, value);
      } else if (key == "height") {
        spec.height = parse_count(key, value);
      } else if (key == "frames") {
        spec.frames = parse_count(key, value);
      } else if (key == "focal") {
        spec.focal = parse_number(key, value);
      } else if (key == "background_depth") {
        spec.background_depth = parse_number(key, value);
      } else if (key == "texture_contrast") {
        spec.texture_contrast = parse_number(key, value);
      } else if (set_vector(spec.background_normal, key, "background_normal", value) ||
                 set_vector(spec.rotation_per_frame, key, "rotation", value) ||
                 set_vector(spec.translation_per_frame, key, "translation", value) ||
                 set_vector(spec.pivot, key, "pivot", value)) {
      } else if (key.rfind("object", 0) == 0) {
        const auto us = key.find('_');
        if (us == std::string::npos) throw ParseError("unknown scene key '" + key + "'");
        const int index = parse_count(key, key.substr(6, us - 6));
        if (index < 0 || index > 64) throw ParseError("object index out of range in '" + key + "'");
        if (static_cast<int>(spec.objects.size()) <= index) spec.objects.resize(index + 1);
        SyntheticObject& o = spec.objects[index];
        const std::string field = key.substr(us + 1);
        if (field == "x" || field == "y" || field == "z") {
          o.center[field[0] - 'x'] = parse_number(key, value);
        } else if (field == "half_size") {
          o.half_size = parse_number(key, value);
        } else if (field == "resolution") {
          o.resolution = parse_count(key, value);
        } else if (field == "relief") {
          o.relief = parse_number(key, value);
        } else if (field == "amplitude") {
          o.deformation_amplitude = parse_number(key, value);
        } else if (field == "frequency") {
          o.deformation_frequency = parse_number(key, value);
        } else {
          throw ParseError("unknown scene key '" + key + "'");
        }
      } else {
        throw ParseError("unknown scene key '" + key + "'");
      }
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_start);
    }
  }
  return spec;
}

SceneSpec read_scene_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open scene spec " + path);
  return parse_scene_spec(in);
}

SyntheticScene::SyntheticScene(SceneSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  const double cx = (spec_.width - 1) / 2.0;
  const double cy = (spec_.height - 1) / 2.0;
  sequence_.intrinsics = CameraIntrinsics{spec_.focal, spec_.focal, cx, cy, 0.0};

  const Eigen::Vector3d n = spec_.background_normal.normalized();
  background_origin_ = Eigen::Vector3d(0.0, 0.0, spec_.background_depth);
  background_s_ = Eigen::Vector3d::UnitX() - n * n.x();
  background_s_.normalize();
  background_t_ = n.cross(background_s_);
  build_objects(seed);
  render();
}

Eigen::Matrix3d SyntheticScene::rotation(int frame) const {
  const Eigen::Vector3d w = spec_.rotation_per_frame * static_cast<double>(frame);
  const double angle = w.norm();
  if (angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

Point3 SyntheticScene::rigid(int frame, const Point3& p) const {
  return spec_.pivot + rotation(frame) * (p - spec_.pivot) +
         spec_.translation_per_frame * static_cast<double>(frame);
}

void SyntheticScene::build_objects(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> hue(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  background_color_ = Eigen::Vector3d(0.55, 0.5, 0.45);

  for (const SyntheticObject& o : spec_.objects) {
    ObjectState state;
    const int r = o.resolution;
    std::vector<Eigen::Vector3d> base;
    std::vector<Eigen::Vector3d> phases;
    for (int j = 0; j < r; ++j) {
      for (int i = 0; i < r; ++i) {
        const bool interior = i > 0 && j > 0 && i < r - 1 && j < r - 1;
        const double dz = interior ? o.relief * unit(rng) : 0.0;
        base.push_back(o.center + Eigen::Vector3d(o.half_size * (2.0 * i / (r - 1) - 1.0),
                                                  o.half_size * (2.0 * j / (r - 1) - 1.0), dz));
        phases.emplace_back(phase(rng), phase(rng), phase(rng));
      }
    }
    for (int j = 0; j + 1 < r; ++j) {
      for (int i = 0; i + 1 < r; ++i) {
        const int v00 = j * r + i;
        const int v10 = v00 + 1;
        const int v01 = v00 + r;
        const int v11 = v01 + 1;
        for (const std::array<int, 3>& tri : {std::array<int, 3>{v00, v10, v11},
                                               std::array<int, 3>{v00, v11, v01}}) {
          // Well-separated flat colours so facet edges are visible to the segmenter.
          const double h = hue(rng);
          Eigen::Vector3d color;
          for (int c = 0; c < 3; ++c) {
            color[c] = 0.5 + 0.4 * std::cos(2.0 * M_PI * (h + c / 3.0));
          }
          state.facets.push_back({tri, color});
        }
      }
    }
    state.vertices.resize(spec_.frames);
    for (int f = 0; f < spec_.frames; ++f) {
      for (std::size_t v = 0; v < base.size(); ++v) {
        Eigen::Vector3d offset;
        for (int c = 0; c < 3; ++c) {
          offset[c] = o.deformation_amplitude *
                      (std::sin(o.deformation_frequency * f + phases[v][c]) - std::sin(phases[v][c]));
        }
        const Point3 p = rigid(f, base[v] + offset);
        if (!(p.z() > kMinObjectDepth)) {
          throw Error(ErrorCode::kConfiguration,
                      "object vertex behind the camera in frame " + std::to_string(f));
        }
        state.vertices[f].push_back(p);
      }
    }
    objects_.push_back(std::move(state));
  }
}

std::optional<SurfaceHit> SyntheticScene::raycast(int frame, const UnitRay& ray) const {
  const Eigen::Vector3d& dir = ray.direction();
  std::optional<SurfaceHit> best;
  const Eigen::Matrix3d R = rotation(frame);
  const Eigen::Vector3d n = R * spec_.background_normal.normalized();
  const Point3 origin = rigid(frame, background_origin_);
  const double cosine = n.dot(dir);
  if (std::abs(cosine) > 1e-12) {
    const double range = n.dot(origin) / cosine;
    if (range > 0.0) {
      const Point3 x = range * dir - origin;
      best = SurfaceHit{-1, -1, Eigen::Vector3d(x.dot(R * background_s_), x.dot(R * background_t_), 0.0),
                        range};
    }
  }
  for (std::size_t o = 0; o < objects_.size(); ++o) {
    const auto& verts = objects_[o].vertices[frame];
    for (std::size_t f = 0; f < objects_[o].facets.size(); ++f) {
      const auto& v = objects_[o].facets[f].v;
      const auto hit = intersect_triangle(dir, verts[v[0]], verts[v[1]], verts[v[2]]);
      if (!hit || (best && (*hit)[0] >= best->range)) continue;
      const double u = (*hit)[1];
      const double w = (*hit)[2];
      best = SurfaceHit{static_cast<int>(o), static_cast<int>(f), Eigen::Vector3d(1.0 - u - w, u, w),
                        (*hit)[0]};
    }
  }
  return best;
}

Point3 SyntheticScene::surface_position(const SurfaceHit& hit, int frame) const {
  if (hit.surface < 0) {
    const Eigen::Matrix3d R = rotation(frame);
    return rigid(frame, background_origin_) + hit.coords.x() * (R * background_s_) +
           hit.coords.y() * (R * background_t_);
  }
  const auto& obj = objects_[hit.surface];
  const auto& v = obj.facets[hit.facet].v;
  const auto& verts = obj.vertices[frame];
  return hit.coords[0] * verts[v[0]] + hit.coords[1] * verts[v[1]] + hit.coords[2] * verts[v[2]];
}

std::optional<Point3> SyntheticScene::track_point(int frame, const UnitRay& ray,
                                                  int at_frame) const {
  const auto hit = raycast(frame, ray);
  if (!hit) return std::nullopt;
  return surface_position(*hit, at_frame);
}

Eigen::Vector3d SyntheticScene::shade(const SurfaceHit& hit) const {
  if (hit.surface >= 0) return objects_[hit.surface].facets[hit.facet].color;
  const double s = hit.coords.x();
  const double t = hit.coords.y();
  const double pattern = std::sin(4.0 * s) * std::sin(3.0 * t) + 0.5 * std::sin(9.0 * s + 5.0 * t);
  return (background_color_ + Eigen::Vector3d::Constant(spec_.texture_contrast * pattern / 1.5))
      .cwiseMax(0.0)
      .cwiseMin(1.0);
}

void SyntheticScene::render() {
  const CameraIntrinsics& K = sequence_.intrinsics;
  const int W = spec_.width;
  const int H = spec_.height;
  std::vector<std::vector<std::optional<SurfaceHit>>> hits(spec_.frames);
  for (int f = 0; f < spec_.frames; ++f) {
    Image img(W, H, 3);
    DepthMap depth(W, H);
    hits[f].resize(static_cast<std::size_t>(W) * H);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const UnitRay ray = backproject_ray(K, Pixel(x, y));
        const auto hit = raycast(f, ray);
        hits[f][depth.index(x, y)] = hit;
        if (!hit) continue;
        depth.set(x, y, hit->range);
        const Eigen::Vector3d c = shade(*hit);
        for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[k];
        const Pixel back = project(K, surface_position(*hit, f));
        max_flow_residual_ = std::max(max_flow_residual_, (back - Pixel(x, y)).norm());
      }
    }
    sequence_.images.push_back(std::move(img));
    sequence_.depths.push_back(std::move(depth));
  }
  for (int f = 0; f + 1 < spec_.frames; ++f) {
    FlowField flow(W, H);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const auto& hit = hits[f][flow.index(x, y)];
        const Point3 p = hit ? surface_position(*hit, f + 1) : Point3::Zero();
        if (!hit || !(p.z() > 0.0)) {
          flow.set(x, y, 0.0, 0.0);
          flow.valid[flow.index(x, y)] = 0;
          continue;
        }
        const Pixel q = project(K, p);
        flow.set(x, y, q.x() - x, q.y() - y);
        const Pixel landed(x + flow.u[flow.index(x, y)], y + flow.v[flow.index(x, y)]);
        max_flow_residual_ = std::max(max_flow_residual_, (landed - project(K, p)).norm());
      }
    }
    sequence_.flows.push_back(std::move(flow));
  }
}

}  // namespace arapdepth
