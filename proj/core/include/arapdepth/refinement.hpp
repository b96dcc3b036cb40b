#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "arapdepth/geometry.hpp"
#include "arapdepth/segmentation.hpp"
#include "arapdepth/trws.hpp"

namespace arapdepth {

struct RefineConfig {
  double lambda1 = 0.1;
  double sigma1 = 0.5;
  double sigma2 = 0.5;
  int particles_per_move = 10;
  int moves = 5;
  double perturb_sigma_normal = 0.087266462599716474;  // 5 degrees, in radians
  double perturb_sigma_depth = 0.05;                   // log-scale
  double unary_weight = 1.0;
  int trws_max_passes = 50;
  double trws_tolerance = 1e-6;
  std::uint64_t random_seed = 0;

  void validate() const;
};

/// Planes through the three solved triple points of each superpixel. When a
/// warped triple is degenerate the reference normal is kept (or, failing
/// that, the plane facing the anchor ray) and the plane is put through the
/// warped anchor; the superpixel is appended to `fallbacks`.
std::vector<PlaneParams> fit_planes(const std::vector<AnchorTriple>& triples,
                                    std::span<const double> solved_depths,
                                    std::span<const UnitRay> next_rays,
                                    std::span<const PlaneParams> reference_planes,
                                    std::vector<int>* fallbacks = nullptr);

/// lambda1 * min(1 - |n_i . n_j|, sigma1)
double orientation_cost(const Eigen::Vector3d& n_i, const Eigen::Vector3d& n_j,
                        const RefineConfig& cfg);

/// One boundary pixel pair between superpixels i and j: next-frame rays of
/// the pixel on i's side and on j's side, the (constant) reference-frame
/// squared gap and the colour weight.
struct ShapeTerm {
  UnitRay ray_i;
  UnitRay ray_j;
  double ref_gap_sq = 0.0;
  double weight = 1.0;
};

struct ShapeCost {
  double value = 0.0;
  int grazing_pairs = 0;
};

/// sum_pairs w * min(ref_gap^2 + next_gap^2, sigma2), with next-frame depths
/// from intersecting each pixel ray with its own superpixel's plane. A pair
/// whose ray grazes (or misses) its plane contributes w * sigma2.
ShapeCost shape_cost(const PlaneParams& plane_i, const PlaneParams& plane_j,
                     std::span<const ShapeTerm> terms, const RefineConfig& cfg);

/// particles_per_move candidates; element 0 is `current` itself.
std::vector<PlaneParams> generate_particles(const PlaneParams& current, const RefineConfig& cfg,
                                            std::uint64_t stream_seed);

/// Stream seed trws_refine passes to generate_particles for one node and move.
std::uint64_t particle_stream_seed(std::uint64_t seed, int move, int node);

/// Everything the refinement needs besides the planes themselves.
struct RefinementProblem {
  /// Next-frame anchor ray and ARAP anchor depth per superpixel (unary anchor).
  std::vector<UnitRay> anchor_rays;
  std::vector<double> anchor_depths;

  struct Neighbor {
    int a = 0;  // a < b
    int b = 0;
    std::vector<ShapeTerm> terms;  // ray_i on a's side
  };
  std::vector<Neighbor> adjacency;
};

/// Builds the refinement problem from the boundary set. `next_rays` and
/// `ref_gap_sq` are per boundary pair; pairs flagged invalid are dropped,
/// superpixel pairs without remaining terms still keep an orientation edge.
RefinementProblem make_refinement_problem(const BoundarySet& boundary,
                                          std::span<const UnitRay> next_rays_a,
                                          std::span<const UnitRay> next_rays_b,
                                          std::span<const double> ref_gap_sq,
                                          std::span<const std::uint8_t> pair_valid,
                                          std::vector<UnitRay> anchor_rays,
                                          std::vector<double> anchor_depths);

/// Combined energy: unary + orientation + shape.
double refinement_energy(const RefinementProblem& problem, std::span<const PlaneParams> planes,
                         const RefineConfig& cfg);

struct RefineMoveRecord {
  int move = 0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  bool accepted_trws = false;       // false when the incumbent labeling was kept
  std::vector<double> lower_bounds; // TRW-S bound per pass
};

struct RefineResult {
  std::vector<PlaneParams> planes;
  std::vector<double> energy_trace;  // entry 0 before the first move
  std::vector<RefineMoveRecord> moves;
  int grazing_pairs = 0;
};

/// TRW-S labeling with the incumbent guard: returns `incumbent` unless the
/// TRW-S labeling has strictly lower energy.
std::vector<int> select_labels(const PairwiseMrf& mrf, std::span<const int> incumbent,
                               const TrwsOptions& options, TrwsResult* trws = nullptr);

/// Particle-based discrete refinement of all planes. Each move draws
/// particles around the current planes, builds the pairwise MRF and selects
/// labels via select_labels, so the combined energy never increases.
/// Throws kNumericalFailure on non-finite costs.
RefineResult trws_refine(std::vector<PlaneParams> planes, const RefinementProblem& problem,
                         const RefineConfig& cfg);

/// CSV stream: move,pass,lower_bound,energy_before,energy_after
void write_refine_trace_csv(std::ostream& out, const RefineResult& result);

}  // namespace arapdepth
