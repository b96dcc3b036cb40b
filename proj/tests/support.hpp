#pragma once

#include <cstdint>
#include <string>

#include "arapdepth/geometry.hpp"
#include "arapdepth/raster.hpp"

namespace arapdepth::testing {

/// Fresh directory below $ARAPDEPTH_TMP (or the system temp dir), unique per test.
std::string scratch_dir(const std::string& name);

/// Camera used by the synthetic scenes: f = 160, centred principal point.
CameraIntrinsics scene_camera(int width = 160, int height = 120);

/// Image filled with uniform random samples in [0, 1].
Image random_image(int width, int height, int channels, std::uint64_t seed);

}  // namespace arapdepth::testing
