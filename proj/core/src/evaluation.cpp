#include "arapdepth/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "arapdepth/error.hpp"
#include "arapdepth/pipeline.hpp"

namespace arapdepth {

MetricReport mre(const DepthMap& estimate, const DepthMap& truth, double cap) {
  if (estimate.width != truth.width || estimate.height != truth.height) {
    throw Error(ErrorCode::kDomain, "estimate and ground truth sizes differ");
  }
  MetricReport report;
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.pixel_count(); ++i) {
    if (!estimate.valid[i] || !truth.valid[i]) continue;
    const double gt = truth.values[i];
    if (!(gt > 0.0) || gt > cap) continue;
    sum += std::abs(estimate.values[i] - gt) / gt;
    ++report.valid_pixel_count;
  }
  if (report.valid_pixel_count == 0) {
    throw Error(ErrorCode::kEmptyEvaluation, "no pixel is valid in both depth maps");
  }
  report.mre = sum / static_cast<double>(report.valid_pixel_count);
  return report;
}

double evaluation_cap(const RunConfig& config) {
  return config.kitti_like ? config.eval_cap : std::numeric_limits<double>::infinity();
}

DepthMap add_depth_noise(const DepthMap& depth, double percent, std::uint64_t seed, double floor) {
  if (!(percent >= 0.0 && percent <= 100.0)) {
    throw Error(ErrorCode::kDomain, "noise percent must lie in [0, 100]");
  }
  DepthMap out = depth;
  if (percent == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    if (!out.valid[i]) continue;
    out.values[i] = std::max(floor, out.values[i] * (1.0 + percent / 100.0 * gauss(rng)));
  }
  return out;
}

SweepParameter parse_sweep_parameter(const std::string& name) {
  if (name == "superpixel_count") return SweepParameter::kSuperpixelCount;
  if (name == "knn_k") return SweepParameter::kKnn;
  if (name == "d_sigma") return SweepParameter::kDSigma;
  if (name == "noise_percent") return SweepParameter::kNoisePercent;
  throw ParseError("unknown sweep parameter '" + name +
                   "' (expected superpixel_count, knn_k, d_sigma or noise_percent)");
}

const char* to_string(SweepParameter parameter) {
  switch (parameter) {
    case SweepParameter::kSuperpixelCount: return "superpixel_count";
    case SweepParameter::kKnn: return "knn_k";
    case SweepParameter::kDSigma: return "d_sigma";
    case SweepParameter::kNoisePercent: return "noise_percent";
  }
  return "unknown";
}

std::vector<SweepRow> run_sweep(SweepParameter parameter, const std::vector<double>& values,
                                const RunConfig& base, const FrameSequence& scene,
                                int repetitions) {
  if (repetitions < 1) throw Error(ErrorCode::kDomain, "repetitions must be at least 1");
  if (scene.frame_count() < 2 || !scene.has_depth()) {
    throw Error(ErrorCode::kDomain, "sweep needs two frames with ground-truth depth");
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<SweepRow> rows;
  for (double value : sorted) {
    SweepRow row;
    row.value = value;
    std::vector<double> errors;
    try {
      for (int rep = 0; rep < repetitions; ++rep) {
        RunConfig config = base;
        config.apply_seed(base.seed + static_cast<std::uint64_t>(rep));
        double noise = 0.0;
        switch (parameter) {
          case SweepParameter::kSuperpixelCount:
            config.segmentation.superpixels = static_cast<int>(std::lround(value));
            break;
          case SweepParameter::kKnn:
            config.segmentation.knn = static_cast<int>(std::lround(value));
            break;
          case SweepParameter::kDSigma:
            config.solver.use_isometry_box = std::isfinite(value);
            if (std::isfinite(value)) config.solver.d_sigma = value;
            break;
          case SweepParameter::kNoisePercent:
            noise = value;
            break;
        }
        SceneFrame ref{scene.images[0], add_depth_noise(scene.depths[0], noise, config.seed),
                       scene.intrinsics};
        const auto t0 = std::chrono::steady_clock::now();
        const PipelineResult result = propagate_depth(ref, scene.images[1], scene.flows[0], config);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        errors.push_back(mre(result.next_depth, scene.depths[1], evaluation_cap(config)).mre);
        row.iterations_mean += result.solve_report.iterations_used;
        row.iterations_to_1pct_mean += result.solve_report.iterations_to_within(0.01);
        row.final_energy_mean += result.solve_report.energy_trace.back();
        row.wall_time_mean += seconds;
      }
    } catch (const Error& e) {
      throw Error(e.code(), std::string("sweep point ") + to_string(parameter) + "=" +
                                std::to_string(value) + ": " + e.what());
    }
    const double n = static_cast<double>(repetitions);
    for (double e : errors) row.mre_mean += e / n;
    for (double e : errors) row.mre_std += (e - row.mre_mean) * (e - row.mre_mean) / n;
    row.mre_std = std::sqrt(row.mre_std);
    row.iterations_mean /= n;
    row.iterations_to_1pct_mean /= n;
    row.final_energy_mean /= n;
    row.wall_time_mean /= n;
    rows.push_back(row);
  }
  return rows;
}

CsvTable sweep_table(const std::vector<SweepRow>& rows, bool include_wall_time) {
  CsvTable table;
  table.header = {"value", "mre_mean", "mre_std", "iterations_mean", "iterations_to_1pct_mean",
                  "final_energy_mean"};
  if (include_wall_time) table.header.push_back("wall_time_mean");
  for (const SweepRow& r : rows) {
    std::vector<double> cells{r.value, r.mre_mean, r.mre_std, r.iterations_mean,
                              r.iterations_to_1pct_mean, r.final_energy_mean};
    if (include_wall_time) cells.push_back(r.wall_time_mean);
    table.rows.push_back(std::move(cells));
  }
  return table;
}

CsvTable error_accumulation(const std::vector<MetricReport>& per_frame) {
  if (per_frame.empty()) throw Error(ErrorCode::kDomain, "no frames to tabulate");
  CsvTable table;
  table.header = {"frame", "mre", "mre_diff"};
  for (std::size_t i = 0; i < per_frame.size(); ++i) {
    const double diff = i == 0 ? 0.0 : per_frame[i].mre - per_frame[i - 1].mre;
    table.rows.push_back({static_cast<double>(i + 1), per_frame[i].mre, diff});
  }
  return table;
}

}  // namespace arapdepth
