#pragma once

#include <string>
#include <vector>

#include "arapdepth/config.hpp"
#include "arapdepth/geometry.hpp"
#include "arapdepth/raster.hpp"

namespace arapdepth {

/// Frames of one camera with forward flows between consecutive frames and
/// (optionally) per-frame range depth.
struct FrameSequence {
  CameraIntrinsics intrinsics;
  std::vector<Image> images;
  std::vector<DepthMap> depths;  // empty, or one per frame
  std::vector<FlowField> flows;  // images.size() - 1

  std::size_t frame_count() const { return images.size(); }
  bool has_depth() const { return !depths.empty(); }
};

/// Directory layout written by write_sequence:
///   intrinsics.txt, frames.txt, flows.txt, depths.txt,
///   frame_NNN.png, flow_NNN.flo, depth_NNN.pfm
/// Depth files use `convention`; list files hold paths relative to the directory.
void write_sequence(const std::string& directory, const FrameSequence& sequence,
                    DepthConvention convention);
FrameSequence read_sequence(const std::string& directory, DepthConvention convention);

}  // namespace arapdepth
