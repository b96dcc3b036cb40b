#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arapdepth/arap.hpp"
#include "arapdepth/config.hpp"
#include "arapdepth/geometry.hpp"
#include "arapdepth/raster.hpp"
#include "arapdepth/refinement.hpp"
#include "arapdepth/segmentation.hpp"

namespace arapdepth {

struct SceneFrame {
  Image image;
  std::optional<DepthMap> depth;  // range depth
  CameraIntrinsics intrinsics;
};

struct PipelineDiagnostics {
  std::vector<int> fallback_planes;   // superpixels whose warped triple was degenerate
  int out_of_bounds_points = 0;       // triple points excluded from the ARAP energy
  int grazing_pixels = 0;             // next-frame pixels without a valid depth
  int grazing_boundary_pairs = 0;
  std::vector<std::string> notes;
};

struct PipelineResult {
  DepthMap next_depth;               // refined, on the next-frame grid
  DepthMap unrefined_depth;          // rendered from the ARAP planes
  std::vector<PlaneParams> planes;   // refined
  std::vector<PlaneParams> arap_planes;
  Segmentation segmentation;
  std::vector<AnchorTriple> triples;
  std::vector<int> next_labels;
  SolveReport solve_report;
  RefineResult refine_result;
  PipelineDiagnostics diagnostics;
};

/// Labels on the next-frame grid: each reference pixel is splatted to the
/// nearest integer pixel of its flow target (closest sub-pixel source wins,
/// exact ties go to the lower label), then holes are filled breadth-first
/// from the labelled set.
std::vector<int> transfer_labels(const Segmentation& seg, const FlowField& flow,
                                 int next_width, int next_height);

/// As above, with occlusion ordering: when two sources land on the same
/// pixel and one is nearer the camera by more than `occlusion_margin`
/// (relative), the nearer one wins. `source_depth` holds one predicted
/// next-frame depth per reference pixel; non-finite entries never occlude.
std::vector<int> transfer_labels(const Segmentation& seg, const FlowField& flow,
                                 int next_width, int next_height,
                                 std::span<const double> source_depth,
                                 double occlusion_margin = 0.01);

/// Reassigns next-frame pixels on label boundaries to the neighbouring
/// (3x3) label whose mean reference colour is closest to the pixel's colour
/// in `next_image`. Interior pixels and ties keep their label.
std::vector<int> relabel_boundaries_by_color(const std::vector<int>& labels,
                                             const Segmentation& seg, const Image& ref_image,
                                             const Image& next_image);

/// Range depth per pixel from the plane of its label; grazing or
/// behind-camera pixels are left invalid.
DepthMap render_depth(const std::vector<PlaneParams>& planes, const std::vector<int>& labels,
                      int width, int height, const CameraIntrinsics& K);

/// Two-frame propagation: segment, pick triples, build the rigidity graph,
/// solve ARAP, fit and render planes, refine and re-render.
PipelineResult propagate_depth(const SceneFrame& ref, const Image& next_image,
                               const FlowField& flow, const RunConfig& config);

/// Chains propagate_depth along a sequence; frame t+1 uses the dense result
/// of step t as its prior. frames.size() must equal flows.size() + 1.
std::vector<PipelineResult> propagate_multiframe(const std::vector<SceneFrame>& frames,
                                                 const std::vector<FlowField>& flows,
                                                 const RunConfig& config);

}  // namespace arapdepth
