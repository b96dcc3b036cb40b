#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "arapdepth/arap.hpp"
#include "arapdepth/refinement.hpp"

namespace arapdepth {

enum class DepthConvention { kRange, kZ };

const char* to_string(DepthConvention convention);
DepthConvention parse_depth_convention(const std::string& text);

struct SegmentationConfig {
  int superpixels = 1100;
  double compactness = 10.0;
  int knn = 20;
  double tau = 0.0;   // <= 0 selects the mean k-NN anchor distance
  double beta = 10.0;
};

/// Every tunable of a run. Serialized as line-oriented key=value text.
struct RunConfig {
  SegmentationConfig segmentation;
  SolverConfig solver;
  double smoothing_eps = 1e-6;
  RefineConfig refine;
  bool color_relabel = true;  // settle next-frame label boundaries by colour
  DepthConvention depth_convention = DepthConvention::kZ;
  double eval_cap = 50.0;
  bool kitti_like = false;  // apply eval_cap during evaluation
  std::uint64_t seed = 0;

  /// Propagates `seed` into the solver and refinement seeds.
  void apply_seed(std::uint64_t new_seed);
  void validate() const;

  bool operator==(const RunConfig& other) const;
};

/// Names of all recognised keys in serialization order.
const std::vector<std::string>& config_keys();

/// Sets one key from text. Throws ParseError for unknown keys or bad values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& config, const std::string& key);

RunConfig parse_config(std::istream& in);
RunConfig read_config(const std::string& path);
void write_config(std::ostream& out, const RunConfig& config);
void write_config(const std::string& path, const RunConfig& config);

}  // namespace arapdepth
