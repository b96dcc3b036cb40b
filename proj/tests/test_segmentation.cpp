#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "arapdepth/error.hpp"
#include "arapdepth/segmentation.hpp"
#include "arapdepth/synthetic.hpp"
#include "support.hpp"

using namespace arapdepth;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kDomain;
}

std::vector<PixelCoord> block(int x0, int y0, int w, int h) {
  std::vector<PixelCoord> out;
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) out.push_back({x, y});
  return out;
}

AnchorTriple at(int x, int y) { return {{x, y}, {x + 1, y}, {x, y + 1}}; }

double area(PixelCoord a, PixelCoord b, PixelCoord c) {
  return 0.5 * std::abs(double(b.x - a.x) * (c.y - a.y) - double(b.y - a.y) * (c.x - a.x));
}

void expect_partition(const Segmentation& seg) {
  ASSERT_NO_THROW(seg.validate());
  const auto sizes = seg.sizes();
  EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}),
            static_cast<std::size_t>(seg.width) * seg.height);
  for (auto s : sizes) EXPECT_GT(s, 0u);
}

}  // namespace

TEST(Slic, UniformImageSplitsIntoFourRegions) {
  Image img(100, 100, 3, 0.5);
  const Segmentation seg = slic_segment(img, 4, 10.0);
  expect_partition(seg);
  ASSERT_EQ(seg.count, 4);
  for (auto s : seg.sizes()) {
    EXPECT_GT(s, 2000u);
    EXPECT_LT(s, 3000u);
  }
}

TEST(Slic, CountNearTargetOnSceneImage) {
  SyntheticScene scene(SceneSpec::two_object(0.1), 5);
  const Image& img = scene.sequence().images[0];
  for (int target : {150, 600, 1200}) {
    const Segmentation seg = slic_segment(img, target, 10.0);
    expect_partition(seg);
    EXPECT_GE(seg.count, 0.8 * target) << target;
    EXPECT_LE(seg.count, 1.2 * target) << target;
  }
}

TEST(Slic, CountNearTargetOnNoise) {
  const Image img = arapdepth::testing::random_image(320, 240, 3, 11);
  const Segmentation seg = slic_segment(img, 1200, 10.0);
  expect_partition(seg);
  EXPECT_GE(seg.count, 960);
  EXPECT_LE(seg.count, 1440);
}

TEST(Slic, InfeasibleCountIsDomainError) {
  Image img(2, 2, 3, 0.0);
  EXPECT_EQ(code_of([&] { slic_segment(img, 5, 10.0); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([&] { slic_segment(img, 1, 10.0); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([&] { slic_segment(img, 2, 0.0); }), ErrorCode::kDomain);
}

TEST(Slic, Deterministic) {
  const Image img = arapdepth::testing::random_image(64, 48, 3, 4);
  EXPECT_EQ(slic_segment(img, 40, 10.0).labels, slic_segment(img, 40, 10.0).labels);
}

TEST(Slic, EverySuperpixelHostsATriple) {
  const Image img = arapdepth::testing::random_image(80, 60, 3, 9);
  const Segmentation seg = slic_segment(img, 300, 10.0);
  for (int s = 0; s < seg.count; ++s) {
    const AnchorTriple t = select_anchor_triple(seg, s);
    EXPECT_GE(t.area(), kMinTriangleArea);
  }
}

TEST(MergeDegenerate, AbsorbsLineAndSinglePixel) {
  // 5x4 grid: a one-row strip (label 1), a single pixel (label 2), rest label 0.
  Segmentation seg{5, 4, 3, std::vector<int>(20, 0)};
  for (int x = 0; x < 5; ++x) seg.labels[seg.index(x, 0)] = 1;
  seg.labels[seg.index(4, 3)] = 2;
  const Segmentation merged = merge_degenerate_superpixels(seg);
  EXPECT_EQ(merged.count, 1);
  expect_partition(merged);
}

TEST(AnchorTripleSelection, ThreeByThreeSquare) {
  // The anchor is pinned to the centre, so the largest triangle with the
  // farthest corner has area 1 px^2 (not the 2 px^2 of three corners).
  const AnchorTriple t = select_anchor_triple(block(0, 0, 3, 3));
  EXPECT_EQ(t.anchor, (PixelCoord{1, 1}));
  EXPECT_EQ(t.p1, (PixelCoord{0, 0}));
  EXPECT_DOUBLE_EQ(t.area(), 1.0);
  // Exhaustive oracle over the nine pixels with the anchor and p1 fixed.
  double best = 0.0;
  for (const auto& p : block(0, 0, 3, 3)) best = std::max(best, area(t.anchor, t.p1, p));
  EXPECT_DOUBLE_EQ(t.area(), best);
}

TEST(AnchorTripleSelection, DegenerateInputs) {
  EXPECT_EQ(code_of([] { select_anchor_triple(block(4, 4, 1, 1)); }), ErrorCode::kDegenerateSuperpixel);
  EXPECT_EQ(code_of([] { select_anchor_triple(block(0, 0, 5, 1)); }), ErrorCode::kDegenerateSuperpixel);
  EXPECT_EQ(code_of([] { select_anchor_triple(block(0, 0, 2, 1)); }), ErrorCode::kDegenerateSuperpixel);
}

TEST(AnchorTripleSelection, FilterRestrictsCandidates) {
  const auto members = block(0, 0, 4, 4);
  const AnchorTriple t = select_anchor_triple(members, [](int x, int) { return x >= 1; });
  for (const auto& p : t.points()) EXPECT_GE(p.x, 1);
  EXPECT_EQ(code_of([&] { select_anchor_triple(members, [](int x, int) { return x == 0; }); }),
            ErrorCode::kDegenerateSuperpixel);
}

TEST(AnchorTripleSelection, RandomRegionsProperties) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 2 + static_cast<int>(rng() % 8);
    const int h = 2 + static_cast<int>(rng() % 8);
    const auto members = block(static_cast<int>(rng() % 50), static_cast<int>(rng() % 50), w, h);
    const AnchorTriple t = select_anchor_triple(members);
    std::set<std::pair<int, int>> in;
    for (const auto& p : members) in.insert({p.x, p.y});
    for (const auto& p : t.points()) EXPECT_TRUE(in.count({p.x, p.y}));
    EXPECT_GE(t.area(), kMinTriangleArea);
    double best = 0.0;
    for (const auto& p : members) best = std::max(best, area(t.anchor, t.p1, p));
    EXPECT_DOUBLE_EQ(t.area(), best);
  }
}

TEST(KnnGraph, CollinearAnchors) {
  const std::vector<AnchorTriple> triples{at(0, 0), at(1, 0), at(5, 0)};
  const RigidityGraph g = build_knn_graph(triples, 1, 1.0);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g.neighbors[0], std::vector<int>{1});
  EXPECT_EQ(g.neighbors[1], std::vector<int>{0});
  EXPECT_EQ(g.neighbors[2], std::vector<int>{1});
  EXPECT_DOUBLE_EQ(g.weights[2][0], std::exp(-4.0));
}

TEST(KnnGraph, WeightsAtZeroAndTau) {
  const std::vector<AnchorTriple> coincident{at(3, 3), at(3, 3)};
  EXPECT_DOUBLE_EQ(build_knn_graph(coincident, 1, 2.0).weights[0][0], 1.0);
  const std::vector<AnchorTriple> apart{at(0, 0), at(3, 4)};
  EXPECT_NEAR(build_knn_graph(apart, 1, 5.0).weights[0][0], 0.36787944117144233, 1e-15);
}

TEST(KnnGraph, ClampsKWithWarning) {
  const std::vector<AnchorTriple> triples{at(0, 0), at(1, 0), at(5, 0)};
  const RigidityGraph g = build_knn_graph(triples, 7, 1.0);
  EXPECT_EQ(g.k, 2);
  EXPECT_FALSE(g.warnings.empty());
  for (const auto& n : g.neighbors) EXPECT_EQ(n.size(), 2u);
}

TEST(KnnGraph, DefaultTauIsMeanNeighbourDistance) {
  const std::vector<AnchorTriple> triples{at(0, 0), at(1, 0), at(5, 0)};
  const RigidityGraph g = build_knn_graph(triples, 1);
  EXPECT_DOUBLE_EQ(g.tau, (1.0 + 1.0 + 4.0) / 3.0);
}

TEST(KnnGraph, InvalidArguments) {
  const std::vector<AnchorTriple> triples{at(0, 0), at(1, 0)};
  EXPECT_EQ(code_of([&] { build_knn_graph(triples, 0, 1.0); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([&] { build_knn_graph(triples, 1, 0.0); }), ErrorCode::kDomain);
}

TEST(KnnGraph, RandomProperties) {
  std::mt19937_64 rng(23);
  std::vector<AnchorTriple> triples;
  for (int i = 0; i < 60; ++i) triples.push_back(at(static_cast<int>(rng() % 40), static_cast<int>(rng() % 40)));
  const RigidityGraph g = build_knn_graph(triples, 6);
  const RigidityGraph again = build_knn_graph(triples, 6);
  EXPECT_EQ(g.neighbors, again.neighbors);
  for (std::size_t i = 0; i < g.size(); ++i) {
    ASSERT_EQ(g.neighbors[i].size(), 6u);
    double prev_d = -1.0, prev_w = 2.0;
    for (std::size_t n = 0; n < 6; ++n) {
      const int j = g.neighbors[i][n];
      EXPECT_NE(j, static_cast<int>(i));
      const double d = std::hypot(triples[i].anchor.x - triples[j].anchor.x,
                                  triples[i].anchor.y - triples[j].anchor.y);
      EXPECT_GE(d, prev_d);
      EXPECT_GT(g.weights[i][n], 0.0);
      EXPECT_LE(g.weights[i][n], 1.0);
      EXPECT_LE(g.weights[i][n], prev_w);
      prev_d = d;
      prev_w = g.weights[i][n];
    }
    // Brute-force oracle: no excluded anchor is strictly closer than the farthest kept one.
    std::set<int> kept(g.neighbors[i].begin(), g.neighbors[i].end());
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (j == i || kept.count(static_cast<int>(j))) continue;
      const double d = std::hypot(triples[i].anchor.x - triples[j].anchor.x,
                                  triples[i].anchor.y - triples[j].anchor.y);
      EXPECT_GE(d, prev_d);
      if (d == prev_d) EXPECT_GT(static_cast<int>(j), g.neighbors[i].back());
    }
  }
}

TEST(BoundaryPairs, VerticalSeam) {
  Segmentation seg{6, 4, 2, std::vector<int>(24, 0)};
  Image img(6, 4, 3, 0.2);
  for (int y = 0; y < 4; ++y)
    for (int x = 3; x < 6; ++x) seg.labels[seg.index(x, y)] = 1;
  const BoundarySet b = boundary_pairs(seg, img, 10.0);
  ASSERT_EQ(b.pairs.size(), 4u);
  for (const auto& p : b.pairs) {
    EXPECT_EQ(p.pixel_b, p.pixel_a + 1);
    EXPECT_EQ(p.pixel_a % 6, 2u);
    EXPECT_NE(p.label_a, p.label_b);
    EXPECT_DOUBLE_EQ(p.weight, 1.0);
  }
  const auto adj = b.adjacency();
  ASSERT_EQ(adj.size(), 1u);
  EXPECT_EQ(adj[0].a, 0);
  EXPECT_EQ(adj[0].b, 1);
  EXPECT_EQ(adj[0].pair_indices.size(), 4u);
}

TEST(BoundaryPairs, OppositeColours) {
  Segmentation seg{2, 1, 2, {0, 1}};
  Image img(2, 1, 3, 0.0);
  for (int c = 0; c < 3; ++c) img.at(1, 0, c) = 1.0;
  const BoundarySet b = boundary_pairs(seg, img, 1.0);
  ASSERT_EQ(b.pairs.size(), 1u);
  EXPECT_NEAR(b.pairs[0].weight, std::exp(-std::sqrt(3.0)), 1e-15);
  EXPECT_NEAR(b.pairs[0].weight, 0.1769, 1e-4);
}

TEST(BoundaryPairs, EachAdjacencyOnceAndWeightsMonotone) {
  const Image img = arapdepth::testing::random_image(40, 30, 3, 5);
  const Segmentation seg = slic_segment(img, 30, 10.0);
  const BoundarySet b = boundary_pairs(seg, img, 10.0);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& p : b.pairs) {
    const auto key = std::minmax(p.pixel_a, p.pixel_b);
    EXPECT_TRUE(seen.insert(key).second);
    const std::size_t d = key.second - key.first;
    EXPECT_TRUE(d == 1 || d == 40u);
    EXPECT_EQ(seg.labels[p.pixel_a], p.label_a);
    EXPECT_EQ(seg.labels[p.pixel_b], p.label_b);
    EXPECT_NEAR(p.weight, std::exp(-10.0 * img.color_distance(p.pixel_a, p.pixel_b)), 1e-15);
  }
  // Brute-force count of differently labelled 4-neighbours.
  std::size_t expected = 0;
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x) {
      if (x + 1 < 40 && seg.label(x, y) != seg.label(x + 1, y)) ++expected;
      if (y + 1 < 30 && seg.label(x, y) != seg.label(x, y + 1)) ++expected;
    }
  EXPECT_EQ(b.pairs.size(), expected);
}
