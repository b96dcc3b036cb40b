#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "arapdepth/raster.hpp"

namespace arapdepth {

struct PixelCoord {
  int x = 0;
  int y = 0;

  bool operator==(const PixelCoord&) const = default;
};

/// Pixel -> superpixel labeling of the reference frame. Labels are the
/// contiguous range 0..count-1 and every superpixel is 4-connected.
struct Segmentation {
  int width = 0;
  int height = 0;
  int count = 0;
  std::vector<int> labels;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  int label(int x, int y) const { return labels[index(x, y)]; }

  /// Member pixels of each superpixel in raster order.
  std::vector<std::vector<PixelCoord>> members() const;
  std::vector<std::size_t> sizes() const;

  /// Checks the partition invariants (label range, every label used,
  /// 4-connectivity). Throws kDomain on violation.
  void validate() const;
};

/// Anchor pixel (nearest to the superpixel centroid) plus two further
/// pixels of the same superpixel forming a non-degenerate triangle.
struct AnchorTriple {
  PixelCoord anchor;
  PixelCoord p1;
  PixelCoord p2;

  std::array<PixelCoord, 3> points() const { return {anchor, p1, p2}; }
  /// Image-space triangle area in px^2.
  double area() const;
};

/// Directed k-nearest-neighbour graph over superpixel anchors.
struct RigidityGraph {
  int k = 0;       // effective k after clamping to N-1
  double tau = 0;  // distance scale of the exponential weights
  std::vector<std::vector<int>> neighbors;
  std::vector<std::vector<double>> weights;
  std::vector<std::string> warnings;

  std::size_t size() const { return neighbors.size(); }
};

/// Two 4-adjacent pixels carrying different labels, with their colour weight.
struct BoundaryPair {
  std::size_t pixel_a = 0;  // linear index, label_a
  std::size_t pixel_b = 0;  // linear index, label_b
  int label_a = 0;
  int label_b = 0;
  double weight = 1.0;
};

struct BoundarySet {
  double beta = 0.0;
  std::vector<BoundaryPair> pairs;

  /// Unordered superpixel pairs (lower label first) that share a boundary,
  /// sorted, with the indices of their pairs in `pairs`.
  struct Adjacency {
    int a = 0;
    int b = 0;
    std::vector<std::size_t> pair_indices;
  };
  std::vector<Adjacency> adjacency() const;
};

inline constexpr double kMinTriangleArea = 0.5;

/// SLIC over-segmentation. Colour distance is taken in the input colour
/// space scaled to [0, 100] per channel so that `compactness` has its usual
/// meaning. Orphaned fragments are absorbed into their largest neighbouring
/// superpixel and degenerate superpixels (fewer than three pixels or
/// collinear) are merged away before relabeling.
Segmentation slic_segment(const Image& image, int target_count, double compactness,
                          int iterations = 10);

/// Merges every superpixel that cannot host an anchor triple into its
/// largest 4-adjacent neighbour, then relabels contiguously in raster order.
Segmentation merge_degenerate_superpixels(Segmentation seg);

/// Predicate telling triple selection which pixels may be used (e.g. pixels
/// with a valid depth prior). An empty function accepts all pixels.
using PixelFilter = std::function<bool(int x, int y)>;

/// Anchor = usable member nearest the centroid of all members;
/// p1 = usable member farthest from the anchor;
/// p2 = usable member maximizing triangle area. Ties go to raster order.
/// Throws kDegenerateSuperpixel if fewer than three usable pixels or the
/// best area is below 0.5 px^2.
AnchorTriple select_anchor_triple(const std::vector<PixelCoord>& members,
                                  const PixelFilter& usable = {});
AnchorTriple select_anchor_triple(const Segmentation& seg, int superpixel_id,
                                  const PixelFilter& usable = {});

/// k nearest anchors per superpixel (ties by lower index), weights
/// exp(-distance / tau). Without `tau` the mean k-NN anchor distance is used.
/// k >= N is clamped to N-1 and recorded in `warnings`.
RigidityGraph build_knn_graph(const std::vector<AnchorTriple>& triples, int k,
                              std::optional<double> tau = std::nullopt);

/// All 4-adjacent differently-labelled pixel pairs, each stored once, with
/// weight exp(-beta * |I_a - I_b|).
BoundarySet boundary_pairs(const Segmentation& seg, const Image& image, double beta);

}  // namespace arapdepth
