#include "arapdepth/raster.hpp"

#include <algorithm>
#include <cmath>

#include "arapdepth/error.hpp"

namespace arapdepth {

double Image::color_distance(std::size_t a, std::size_t b) const {
  const double* pa = pixel(a);
  const double* pb = pixel(b);
  double sum = 0.0;
  for (int c = 0; c < channels; ++c) {
    const double d = pa[c] - pb[c];
    sum += d * d;
  }
  return std::sqrt(sum);
}

void Image::validate() const {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kDomain, "image is empty");
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kDomain, "image must have 1 or 3 channels");
  }
  if (data.size() != pixel_count() * channels) {
    throw Error(ErrorCode::kDomain, "image buffer size does not match its dimensions");
  }
  for (double v : data) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::kDomain, "image values must lie in [0, 1]");
  }
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

bool FlowField::sample(double x, double y, Eigen::Vector2d& out) const {
  if (!(x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1)) return false;
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  double su = 0.0;
  double sv = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    const double wy = dy == 0 ? 1.0 - fy : fy;
    if (wy == 0.0) continue;
    for (int dx = 0; dx <= 1; ++dx) {
      const double wx = dx == 0 ? 1.0 - fx : fx;
      if (wx == 0.0) continue;
      const int xi = x0 + dx;
      const int yi = y0 + dy;
      if (!contains(xi, yi)) return false;
      const std::size_t i = index(xi, yi);
      if (!valid[i]) return false;
      su += wx * wy * u[i];
      sv += wx * wy * v[i];
    }
  }
  out = {su, sv};
  return true;
}

}  // namespace arapdepth
