#include <gtest/gtest.h>

#include <cmath>

#include "arapdepth/error.hpp"
#include "arapdepth/evaluation.hpp"
#include "arapdepth/pipeline.hpp"
#include "arapdepth/synthetic.hpp"
#include "support.hpp"

using namespace arapdepth;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.segmentation.superpixels = 150;
  c.segmentation.knn = 10;
  return c;
}

const SyntheticScene& rigid_scene() {
  static const SyntheticScene scene(SceneSpec::two_object(0.0), 1);
  return scene;
}

SceneFrame reference(const FrameSequence& seq, int frame = 0) {
  return {seq.images[frame], seq.depths[frame], seq.intrinsics};
}

Segmentation stripes(int w, int h, int width_per_label) {
  Segmentation seg{w, h, (w + width_per_label - 1) / width_per_label, std::vector<int>(w * h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) seg.labels[seg.index(x, y)] = x / width_per_label;
  return seg;
}

}  // namespace

TEST(TransferLabels, ZeroFlowIsIdentity) {
  const Segmentation seg = stripes(12, 7, 3);
  FlowField zero(12, 7);
  EXPECT_EQ(transfer_labels(seg, zero, 12, 7), seg.labels);
}

TEST(TransferLabels, IntegerShiftAndFill) {
  const Segmentation seg = stripes(12, 4, 3);
  FlowField shift(12, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 12; ++x) shift.set(x, y, 5.0, 0.0);
  const auto labels = transfer_labels(seg, shift, 12, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 12; ++x) {
      // Columns 0..4 receive nothing and are filled from column 5 (label 0).
      const int expect = x < 5 ? 0 : (x - 5) / 3;
      EXPECT_EQ(labels[y * 12 + x], expect) << x << "," << y;
    }
}

TEST(TransferLabels, NearerSourceWinsAndTiesGoLow) {
  Segmentation seg{3, 1, 3, {0, 1, 2}};
  FlowField f(3, 1);
  f.set(0, 0, 1.4, 0.0);   // lands at 1.4, distance 0.4
  f.set(1, 0, 0.1, 0.0);   // lands at 1.1, distance 0.1
  f.set(2, 0, -1.0, 0.0);  // lands at 1.0 exactly
  EXPECT_EQ(transfer_labels(seg, f, 3, 1)[1], 2);

  Segmentation two{2, 1, 2, {0, 1}};
  FlowField g(2, 1);
  g.set(0, 0, 1.25, 0.0);   // lands at 1.25
  g.set(1, 0, -0.25, 0.0);  // lands at 0.75: equally far from pixel 1
  const auto labels = transfer_labels(two, g, 2, 1);
  EXPECT_EQ(labels[1], 0);
}

TEST(TransferLabels, DepthOrderedSplatPrefersNearerSurface) {
  Segmentation seg{2, 1, 2, {0, 1}};
  FlowField f(2, 1);
  f.set(0, 0, 1.0, 0.0);
  const std::vector<double> depth{5.0, 2.0};
  EXPECT_EQ(transfer_labels(seg, f, 2, 1, depth)[1], 1);
  const std::vector<double> flipped{2.0, 5.0};
  EXPECT_EQ(transfer_labels(seg, f, 2, 1, flipped)[1], 0);
}

TEST(TransferLabels, DimensionMismatch) {
  const Segmentation seg = stripes(6, 4, 3);
  EXPECT_THROW(transfer_labels(seg, FlowField(5, 4), 6, 4), Error);
}

TEST(RenderDepth, FrontoParallelPlane) {
  const CameraIntrinsics K = CameraIntrinsics::identity();
  const std::vector<PlaneParams> planes{{{0, 0, 1}, 2.0}};
  const DepthMap d = render_depth(planes, std::vector<int>(4, 0), 2, 2, K);
  EXPECT_DOUBLE_EQ(d.at(0, 0), 2.0);
  EXPECT_NEAR(d.at(1, 0), 2.0 * std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(d.at(1, 1), 2.0 * std::sqrt(3.0), 1e-14);
}

TEST(RenderDepth, GrazingPixelInvalid) {
  const CameraIntrinsics K = CameraIntrinsics::identity();
  // Plane x = 0 contains the principal ray; every other ray hits it behind or in front.
  const std::vector<PlaneParams> planes{{{1, 0, 0}, 1.0}};
  const DepthMap d = render_depth(planes, std::vector<int>(4, 0), 2, 2, K);
  EXPECT_FALSE(d.is_valid(0, 0));
  EXPECT_FALSE(d.is_valid(0, 1));
  EXPECT_TRUE(d.is_valid(1, 0));
  EXPECT_NEAR(d.at(1, 0), std::sqrt(2.0), 1e-14);
}

TEST(Propagate, RigidSceneRecoversNextDepth) {
  const auto& seq = rigid_scene().sequence();
  const PipelineResult r = propagate_depth(reference(seq), seq.images[1], seq.flows[0], small_config());
  const double e = mre(r.next_depth, seq.depths[1]).mre;
  EXPECT_LT(e, 1e-3);
  EXPECT_LT(r.solve_report.energy_trace.back(), 1e-9);
  EXPECT_TRUE(r.diagnostics.fallback_planes.empty());
  for (std::size_t i = 0; i < r.next_depth.pixel_count(); ++i) {
    if (r.next_depth.valid[i]) {
      EXPECT_GT(r.next_depth.values[i], 0.0);
      EXPECT_TRUE(std::isfinite(r.next_depth.values[i]));
    }
  }
}

TEST(Propagate, ArapPlanesInterpolateTheirTriplePoints) {
  const auto& seq = rigid_scene().sequence();
  const PipelineResult r = propagate_depth(reference(seq), seq.images[1], seq.flows[0], small_config());
  for (int s = 0; s < r.segmentation.count; ++s) {
    const auto pts = r.triples[s].points();
    std::vector<Pixel> px;
    for (const auto& p : pts) px.emplace_back(p.x, p.y);
    const WarpedRays w = warp_to_next_rays(px, seq.flows[0], seq.intrinsics);
    for (int j = 0; j < 3; ++j) {
      const double solved = r.solve_report.final_depths[point_index(s, j)];
      EXPECT_NEAR(ray_plane_depth(r.arap_planes[s], w.rays[j]), solved, 1e-9 * solved);
    }
  }
}

TEST(Propagate, RefinementNeverIncreasesEnergy) {
  SyntheticScene scene(SceneSpec::two_object(0.15), 2);
  const auto& seq = scene.sequence();
  const PipelineResult r = propagate_depth(reference(seq), seq.images[1], seq.flows[0], small_config());
  const auto& trace = r.refine_result.energy_trace;
  ASSERT_FALSE(trace.empty());
  for (std::size_t k = 1; k < trace.size(); ++k) EXPECT_LE(trace[k], trace[k - 1]);
  for (std::size_t k = 1; k < r.solve_report.energy_trace.size(); ++k) {
    EXPECT_LE(r.solve_report.energy_trace[k], r.solve_report.energy_trace[k - 1]);
  }
}

TEST(Propagate, ZeroFlowReproducesPlanarReference) {
  const auto& seq = rigid_scene().sequence();
  FlowField zero(seq.images[0].width, seq.images[0].height);
  RunConfig c = small_config();
  c.refine.moves = 0;
  c.color_relabel = false;
  const PipelineResult r = propagate_depth(reference(seq), seq.images[0], zero, c);
  EXPECT_EQ(r.next_labels, r.segmentation.labels);
  // Oracle: planes through the reference triples, rendered on the reference labels.
  std::vector<PlaneParams> planes;
  for (int s = 0; s < r.segmentation.count; ++s) {
    std::array<Point3, 3> x;
    const auto pts = r.triples[s].points();
    for (int j = 0; j < 3; ++j) {
      const UnitRay e = backproject_ray(seq.intrinsics, Pixel(pts[j].x, pts[j].y));
      x[j] = point_from_depth(seq.depths[0].at(pts[j].x, pts[j].y), e);
    }
    planes.push_back(plane_from_points(x[0], x[1], x[2]));
  }
  const DepthMap planar = render_depth(planes, r.segmentation.labels, seq.images[0].width,
                                       seq.images[0].height, seq.intrinsics);
  const double planar_error = mre(planar, seq.depths[0]).mre;
  const double got = mre(r.next_depth, seq.depths[0]).mre;
  EXPECT_NEAR(got, planar_error, 1e-9);
  EXPECT_LT(got, 1e-2);
}

TEST(Propagate, InputValidation) {
  const auto& seq = rigid_scene().sequence();
  EXPECT_THROW(propagate_depth(reference(seq), seq.images[1], FlowField(10, 10), small_config()), Error);
  try {
    propagate_depth(reference(seq), seq.images[1], FlowField(10, 10), small_config());
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomain);
  }
  SceneFrame no_depth{seq.images[0], std::nullopt, seq.intrinsics};
  try {
    propagate_depth(no_depth, seq.images[1], seq.flows[0], small_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnusablePrior);
  }
}

TEST(Propagate, MaskedPriorNamesTheSuperpixel) {
  const auto& seq = rigid_scene().sequence();
  SceneFrame ref = reference(seq);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) ref.depth->invalidate(x, y);
  try {
    propagate_depth(ref, seq.images[1], seq.flows[0], small_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnusablePrior);
    EXPECT_NE(std::string(e.what()).find("superpixel"), std::string::npos);
  }
}

TEST(Propagate, SparsePriorAtSomePixelsSuffices) {
  const auto& seq = rigid_scene().sequence();
  SceneFrame ref = reference(seq);
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 160; ++x)
      if ((x + y) % 2) ref.depth->invalidate(x, y);
  const PipelineResult r = propagate_depth(ref, seq.images[1], seq.flows[0], small_config());
  EXPECT_LT(mre(r.next_depth, seq.depths[1]).mre, 1e-2);
}

TEST(Propagate, Deterministic) {
  SyntheticScene scene(SceneSpec::two_object(0.1), 4);
  const auto& seq = scene.sequence();
  const PipelineResult a = propagate_depth(reference(seq), seq.images[1], seq.flows[0], small_config());
  const PipelineResult b = propagate_depth(reference(seq), seq.images[1], seq.flows[0], small_config());
  EXPECT_EQ(a.next_depth.values, b.next_depth.values);
  EXPECT_EQ(a.next_labels, b.next_labels);
  EXPECT_EQ(a.refine_result.energy_trace, b.refine_result.energy_trace);
}

TEST(Multiframe, TwoFramesEqualSingleStep) {
  const auto& seq = rigid_scene().sequence();
  const std::vector<SceneFrame> frames{reference(seq), {seq.images[1], std::nullopt, seq.intrinsics}};
  const auto chain = propagate_multiframe(frames, {seq.flows[0]}, small_config());
  const PipelineResult one = propagate_depth(reference(seq), seq.images[1], seq.flows[0], small_config());
  ASSERT_EQ(chain.size(), 1u);
  EXPECT_EQ(chain[0].next_depth.values, one.next_depth.values);
  EXPECT_EQ(chain[0].next_depth.valid, one.next_depth.valid);
}

TEST(Multiframe, RigidFiveFramesStayAccurate) {
  SceneSpec spec = SceneSpec::two_object(0.0);
  spec.frames = 5;
  SyntheticScene scene(spec, 1);
  const auto& seq = scene.sequence();
  std::vector<SceneFrame> frames;
  for (int f = 0; f < 5; ++f) frames.push_back({seq.images[f], std::nullopt, seq.intrinsics});
  frames[0].depth = seq.depths[0];
  const auto results = propagate_multiframe(frames, seq.flows, small_config());
  ASSERT_EQ(results.size(), 4u);
  for (int t = 0; t < 4; ++t) EXPECT_LT(mre(results[t].next_depth, seq.depths[t + 1]).mre, 1e-2) << t;
}

TEST(Multiframe, CountMismatchAndAnnotatedErrors) {
  const auto& seq = rigid_scene().sequence();
  const std::vector<SceneFrame> frames{reference(seq), {seq.images[1], std::nullopt, seq.intrinsics}};
  EXPECT_THROW(propagate_multiframe(frames, {seq.flows[0], seq.flows[0]}, small_config()), Error);
  try {
    propagate_multiframe(frames, {FlowField(3, 3)}, small_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos) << e.what();
  }
}
