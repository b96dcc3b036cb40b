#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace arapdepth {

/// Color image with interleaved channels; values normalized to [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  const double* pixel(std::size_t index) const { return data.data() + index * channels; }

  /// Euclidean distance between the colors of two pixels (linear indices).
  double color_distance(std::size_t a, std::size_t b) const;

  /// Throws kDomain on empty size, bad channel count, or values outside [0, 1].
  void validate() const;
};

/// Per-pixel depth with validity mask. Inside the library, depth is range
/// along the unit viewing ray; z-depth appears only at file boundaries.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w), height(h),
        values(static_cast<std::size_t>(w) * h, 0.0),
        valid(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }
  double at(int x, int y) const { return values[index(x, y)]; }

  void set(int x, int y, double depth) {
    values[index(x, y)] = depth;
    valid[index(x, y)] = 1;
  }
  void invalidate(int x, int y) {
    values[index(x, y)] = 0.0;
    valid[index(x, y)] = 0;
  }
  std::size_t valid_count() const;
};

/// Per-pixel displacement (u, v) from the reference frame into the next frame.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<std::uint8_t> valid;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w), height(h),
        u(static_cast<std::size_t>(w) * h, 0.0),
        v(static_cast<std::size_t>(w) * h, 0.0),
        valid(static_cast<std::size_t>(w) * h, 1) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  void set(int x, int y, double du, double dv) {
    u[index(x, y)] = du;
    v[index(x, y)] = dv;
    valid[index(x, y)] = 1;
  }

  /// Bilinear sample at a sub-pixel position. Returns false if any
  /// contributing tap is outside the grid or invalid. Integer positions
  /// read the stored value exactly.
  bool sample(double x, double y, Eigen::Vector2d& out) const;
};

}  // namespace arapdepth
