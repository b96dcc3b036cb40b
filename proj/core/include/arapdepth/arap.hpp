#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "arapdepth/geometry.hpp"
#include "arapdepth/raster.hpp"
#include "arapdepth/segmentation.hpp"

namespace arapdepth {

/// Length-preservation term between two of the 3N triple points.
struct PointEdge {
  int i = 0;
  int j = 0;
  double weight = 1.0;
};

/// Point index of triple slot `slot` (0 = anchor, 1 = p1, 2 = p2) of a superpixel.
inline int point_index(int superpixel, int slot) { return 3 * superpixel + slot; }

/// Every superpixel edge (i, j) yields the 9 edges between the triple points
/// of i and j with weight w_ij; each superpixel also gets its 3 internal
/// edges with weight 1.
std::vector<PointEdge> expand_graph_to_points(const RigidityGraph& graph,
                                              const std::vector<AnchorTriple>& triples);

struct WarpedRays {
  std::vector<UnitRay> rays;
  std::vector<Pixel> positions;       // pixel + flow
  std::vector<std::uint8_t> valid;    // 0 when flow is missing or the point leaves the image
};

/// Next-frame rays of `pixels` after displacement by bilinearly sampled flow.
WarpedRays warp_to_next_rays(std::span<const Pixel> pixels, const FlowField& flow,
                             const CameraIntrinsics& K);

/// Immutable as-rigid-as-possible problem over the 3N next-frame depths.
class ArapProblem {
 public:
  ArapProblem(std::vector<double> ref_depths, std::vector<UnitRay> ref_rays,
              std::vector<UnitRay> next_rays, std::vector<PointEdge> edges,
              double smoothing_eps = 1e-6, std::vector<std::uint8_t> valid = {});

  std::size_t point_count() const { return ref_depths_.size(); }
  const std::vector<double>& ref_depths() const { return ref_depths_; }
  const std::vector<UnitRay>& ref_rays() const { return ref_rays_; }
  const std::vector<UnitRay>& next_rays() const { return next_rays_; }
  const std::vector<PointEdge>& edges() const { return edges_; }
  const std::vector<std::uint8_t>& valid() const { return valid_; }
  double smoothing_eps() const { return eps_; }

  /// Reference-frame 3D length of every edge (0 for inactive edges).
  const std::vector<double>& ref_lengths() const { return ref_lengths_; }
  /// Edges whose two endpoints are both valid.
  const std::vector<std::size_t>& active_edges() const { return active_; }

  /// Energy / gradient with an explicit smoothing width.
  double energy(std::span<const double> next_depths, double eps) const;
  void gradient(std::span<const double> next_depths, double eps,
                std::span<double> out) const;

 private:
  std::vector<double> ref_depths_;
  std::vector<UnitRay> ref_rays_;
  std::vector<UnitRay> next_rays_;
  std::vector<PointEdge> edges_;
  std::vector<std::uint8_t> valid_;
  double eps_;
  std::vector<double> ref_lengths_;
  std::vector<std::size_t> active_;
};

/// Smoothed absolute value sqrt(x^2 + eps^2) - eps.
inline double smoothed_abs(double x, double eps) {
  return std::sqrt(x * x + eps * eps) - eps;
}

/// sum_e w_e * phi_eps(L_e - L~_e) over active edges, using the problem's eps.
double arap_energy(const ArapProblem& problem, std::span<const double> next_depths);

/// Analytic gradient of arap_energy with respect to the next-frame depths.
std::vector<double> arap_gradient(const ArapProblem& problem, std::span<const double> next_depths);

struct SolverConfig {
  int max_iterations = 2000;
  double gradient_tolerance = 1e-9;
  bool use_isometry_box = false;
  double d_sigma = 1.0;           // box half-width around the reference depth
  double depth_floor = 1e-4;      // closed surrogate for d > 0
  double armijo_c = 1e-4;
  double initial_step = 1e-3;
  /// Smoothing continuation: the first stage uses
  /// max(eps, continuation_start * median reference edge length) and each
  /// following stage shrinks it by continuation_factor down to eps.
  double continuation_start = 0.1;
  double continuation_factor = 0.1;
  std::uint64_t random_seed = 0;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double energy = 0.0;
  double step_size = 0.0;
  double projected_gradient_norm = 0.0;
};

struct SolveReport {
  std::vector<double> final_depths;
  std::vector<double> energy_trace;       // entry 0 is the initial energy
  std::vector<IterationRecord> records;   // one per accepted iteration, plus the start
  int iterations_used = 0;
  bool converged = false;                 // final stage met the tolerance or stopped moving
  double wall_time = 0.0;                 // seconds

  /// First iteration whose energy is within `fraction` of the final energy
  /// (E_k <= (1 + fraction) * E_final).
  int iterations_to_within(double fraction) const;
};

/// Projected gradient descent with Armijo backtracking (step halving) on
/// the smoothed energy. Trial steps come from the Barzilai-Borwein rule and
/// the smoothing width follows a continuation schedule; the recorded energy
/// (at the problem's eps) never increases. Throws NumericalError on NaN/Inf.
SolveReport solve_arap(const ArapProblem& problem, std::span<const double> init,
                       const SolverConfig& config);

/// CSV stream: iteration,energy,step_size,projected_gradient_norm
void write_energy_trace_csv(std::ostream& out, const SolveReport& report);

/// Random well-posed instance: `points` rays inside a 160x120 view with
/// reference depths in [2, 10], a connected edge set with weights in
/// [0.5, 2], and next-frame depths perturbed by up to 20%.
struct RandomArapInstance {
  ArapProblem problem;
  std::vector<double> next_depths;
};
RandomArapInstance random_arap_instance(std::uint64_t seed, int points, double smoothing_eps = 1e-6);

/// max |analytic - central difference| / max(max |analytic|, 1e-12), taken
/// over all coordinates, for step `h`.
double gradient_relative_error(const ArapProblem& problem, std::span<const double> next_depths,
                               double h = 1e-6);

}  // namespace arapdepth
