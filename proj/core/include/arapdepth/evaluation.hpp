#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "arapdepth/config.hpp"
#include "arapdepth/io.hpp"
#include "arapdepth/raster.hpp"
#include "arapdepth/sequence.hpp"

namespace arapdepth {

struct MetricReport {
  double mre = 0.0;
  std::size_t valid_pixel_count = 0;
};

/// Mean of |estimate - truth| / truth over pixels valid in both maps with
/// truth <= cap. Throws kEmptyEvaluation when no pixel qualifies.
MetricReport mre(const DepthMap& estimate, const DepthMap& truth,
                 double cap = std::numeric_limits<double>::infinity());

/// Cap to use for a run: config.eval_cap for KITTI-like data, otherwise none.
double evaluation_cap(const RunConfig& config);

/// d * (1 + percent/100 * g), g ~ N(0, 1) per valid pixel, clamped to >= floor.
DepthMap add_depth_noise(const DepthMap& depth, double percent, std::uint64_t seed,
                         double floor = 1e-4);

enum class SweepParameter { kSuperpixelCount, kKnn, kDSigma, kNoisePercent };

/// "superpixel_count", "knn_k", "d_sigma", "noise_percent". Throws ParseError otherwise.
SweepParameter parse_sweep_parameter(const std::string& name);
const char* to_string(SweepParameter parameter);

struct SweepRow {
  double value = 0.0;
  double mre_mean = 0.0;
  double mre_std = 0.0;
  double iterations_mean = 0.0;
  double iterations_to_1pct_mean = 0.0;
  double final_energy_mean = 0.0;
  double wall_time_mean = 0.0;
};

/// Runs the two-frame pipeline on frames 0 -> 1 of `scene` once per
/// repetition (seed = base seed + repetition) for every value. For d_sigma
/// a non-finite value disables the isometry box. Rows are sorted by value.
std::vector<SweepRow> run_sweep(SweepParameter parameter, const std::vector<double>& values,
                                const RunConfig& base, const FrameSequence& scene,
                                int repetitions);

/// value, mre_mean, mre_std, iterations_mean, iterations_to_1pct_mean,
/// final_energy_mean and, when requested, wall_time_mean.
CsvTable sweep_table(const std::vector<SweepRow>& rows, bool include_wall_time);

/// frame, mre, mre_diff (first difference, 0 for the first row).
CsvTable error_accumulation(const std::vector<MetricReport>& per_frame);

}  // namespace arapdepth
