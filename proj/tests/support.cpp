#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

namespace arapdepth::testing {

std::string scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const char* root = std::getenv("ARAPDEPTH_TMP");
  fs::path base = root ? fs::path(root) : fs::temp_directory_path() / "arapdepth-tests";
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  if (info) base /= std::string(info->test_suite_name()) + "." + info->name();
  base /= name;
  fs::remove_all(base);
  fs::create_directories(base);
  return base.string();
}

CameraIntrinsics scene_camera(int width, int height) {
  return {160.0, 160.0, (width - 1) / 2.0, (height - 1) / 2.0, 0.0};
}

Image random_image(int width, int height, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(width, height, channels);
  for (double& v : img.data) v = u(rng);
  return img;
}

}  // namespace arapdepth::testing
