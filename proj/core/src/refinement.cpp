#include "arapdepth/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <random>

#include <Eigen/Geometry>

#include "arapdepth/arap.hpp"
#include "arapdepth/error.hpp"
#include "arapdepth/parallel.hpp"

namespace arapdepth {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Non-throwing ray/plane intersection: nullopt when grazing or behind.
std::optional<double> intersect(const PlaneParams& plane, const UnitRay& ray) {
  const double cosine = plane.normal.dot(ray.direction());
  if (!(std::abs(cosine) > kGrazingTolerance)) return std::nullopt;
  const double lambda = plane.plane_depth / cosine;
  if (!(lambda > 0.0) || !std::isfinite(lambda)) return std::nullopt;
  return lambda;
}

double unary_cost(const PlaneParams& plane, const UnitRay& ray, double anchor_depth,
                  const RefineConfig& cfg) {
  const auto d = intersect(plane, ray);
  const double diff = d ? *d - anchor_depth : anchor_depth;
  return cfg.unary_weight * diff * diff;
}

double pair_term(std::optional<double> di, const UnitRay& ei, std::optional<double> dj,
                 const UnitRay& ej, const ShapeTerm& t, const RefineConfig& cfg) {
  if (!di || !dj) return t.weight * cfg.sigma2;
  const double gap_sq = (*di * ei.direction() - *dj * ej.direction()).squaredNorm();
  return t.weight * std::min(t.ref_gap_sq + gap_sq, cfg.sigma2);
}

}  // namespace

std::uint64_t particle_stream_seed(std::uint64_t seed, int move, int node) {
  return splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(move)) ^
                    static_cast<std::uint64_t>(node));
}

void RefineConfig::validate() const {
  auto fail = [](const char* msg) { throw Error(ErrorCode::kConfiguration, msg); };
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) fail("lambda1 must be non-negative");
  if (!(sigma1 > 0.0) || !std::isfinite(sigma1)) fail("sigma1 must be positive");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) fail("sigma2 must be positive");
  if (particles_per_move < 2) fail("particles_per_move must be at least 2");
  if (moves < 0) fail("moves must be non-negative");
  if (!(perturb_sigma_normal >= 0.0) || !std::isfinite(perturb_sigma_normal)) {
    fail("perturb_sigma_normal must be non-negative");
  }
  if (!(perturb_sigma_depth >= 0.0) || !std::isfinite(perturb_sigma_depth)) {
    fail("perturb_sigma_depth must be non-negative");
  }
  if (!(unary_weight >= 0.0) || !std::isfinite(unary_weight)) {
    fail("unary_weight must be non-negative");
  }
  if (trws_max_passes < 1) fail("trws_max_passes must be at least 1");
  if (!(trws_tolerance >= 0.0)) fail("trws_tolerance must be non-negative");
}

std::vector<PlaneParams> fit_planes(const std::vector<AnchorTriple>& triples,
                                    std::span<const double> solved_depths,
                                    std::span<const UnitRay> next_rays,
                                    std::span<const PlaneParams> reference_planes,
                                    std::vector<int>* fallbacks) {
  const std::size_t n = triples.size();
  if (solved_depths.size() != 3 * n || next_rays.size() != 3 * n) {
    throw Error(ErrorCode::kDomain, "expected three depths and rays per superpixel");
  }
  if (!reference_planes.empty() && reference_planes.size() != n) {
    throw Error(ErrorCode::kDomain, "reference plane count mismatch");
  }
  std::vector<PlaneParams> planes(n);
  for (std::size_t s = 0; s < n; ++s) {
    const int i = static_cast<int>(s);
    const Point3 xa = point_from_depth(solved_depths[point_index(i, 0)], next_rays[point_index(i, 0)]);
    const Point3 x1 = point_from_depth(solved_depths[point_index(i, 1)], next_rays[point_index(i, 1)]);
    const Point3 x2 = point_from_depth(solved_depths[point_index(i, 2)], next_rays[point_index(i, 2)]);
    try {
      planes[s] = plane_from_points(xa, x1, x2);
      if (planes[s].plane_depth > 0.0) continue;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateTriple) throw;
    }
    Eigen::Vector3d normal = next_rays[point_index(i, 0)].direction();
    if (!reference_planes.empty()) {
      Eigen::Vector3d ref = reference_planes[s].normal;
      if (ref.dot(xa) < 0.0) ref = -ref;
      if (ref.dot(xa) > kGrazingTolerance * xa.norm()) normal = ref;
    }
    planes[s] = {normal, normal.dot(xa)};
    if (fallbacks) fallbacks->push_back(i);
  }
  return planes;
}

double orientation_cost(const Eigen::Vector3d& n_i, const Eigen::Vector3d& n_j,
                        const RefineConfig& cfg) {
  return cfg.lambda1 * std::min(std::abs(1.0 - std::abs(n_i.dot(n_j))), cfg.sigma1);
}

ShapeCost shape_cost(const PlaneParams& plane_i, const PlaneParams& plane_j,
                     std::span<const ShapeTerm> terms, const RefineConfig& cfg) {
  ShapeCost out;
  for (const ShapeTerm& t : terms) {
    const auto di = intersect(plane_i, t.ray_i);
    const auto dj = intersect(plane_j, t.ray_j);
    if (!di || !dj) ++out.grazing_pairs;
    out.value += pair_term(di, t.ray_i, dj, t.ray_j, t, cfg);
  }
  return out;
}

std::vector<PlaneParams> generate_particles(const PlaneParams& current, const RefineConfig& cfg,
                                            std::uint64_t stream_seed) {
  std::vector<PlaneParams> out;
  out.reserve(static_cast<std::size_t>(cfg.particles_per_move));
  out.push_back(current);
  std::mt19937_64 rng(stream_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 1; k < cfg.particles_per_move; ++k) {
    Eigen::Vector3d axis;
    do {
      axis = {gauss(rng), gauss(rng), gauss(rng)};
    } while (axis.squaredNorm() < 1e-12);
    axis.normalize();
    const double angle = cfg.perturb_sigma_normal * gauss(rng);
    const double scale = std::exp(cfg.perturb_sigma_depth * gauss(rng));
    PlaneParams p = current;
    if (angle != 0.0) {
      p.normal = (Eigen::AngleAxisd(angle, axis) * current.normal).normalized();
    }
    p.plane_depth = current.plane_depth * scale;
    out.push_back(p);
  }
  return out;
}

RefinementProblem make_refinement_problem(const BoundarySet& boundary,
                                          std::span<const UnitRay> next_rays_a,
                                          std::span<const UnitRay> next_rays_b,
                                          std::span<const double> ref_gap_sq,
                                          std::span<const std::uint8_t> pair_valid,
                                          std::vector<UnitRay> anchor_rays,
                                          std::vector<double> anchor_depths) {
  const std::size_t m = boundary.pairs.size();
  if (next_rays_a.size() != m || next_rays_b.size() != m || ref_gap_sq.size() != m ||
      pair_valid.size() != m) {
    throw Error(ErrorCode::kDomain, "per-pair input size mismatch");
  }
  if (anchor_rays.size() != anchor_depths.size()) {
    throw Error(ErrorCode::kDomain, "anchor ray and depth counts differ");
  }
  RefinementProblem problem;
  problem.anchor_rays = std::move(anchor_rays);
  problem.anchor_depths = std::move(anchor_depths);
  const int n = static_cast<int>(problem.anchor_rays.size());
  for (const auto& adj : boundary.adjacency()) {
    if (adj.b >= n) throw Error(ErrorCode::kDomain, "boundary label out of range");
    RefinementProblem::Neighbor nb{adj.a, adj.b, {}};
    for (std::size_t p : adj.pair_indices) {
      if (!pair_valid[p]) continue;
      const bool a_first = boundary.pairs[p].label_a == adj.a;
      nb.terms.push_back({a_first ? next_rays_a[p] : next_rays_b[p],
                          a_first ? next_rays_b[p] : next_rays_a[p], ref_gap_sq[p],
                          boundary.pairs[p].weight});
    }
    problem.adjacency.push_back(std::move(nb));
  }
  return problem;
}

double refinement_energy(const RefinementProblem& problem, std::span<const PlaneParams> planes,
                         const RefineConfig& cfg) {
  if (planes.size() != problem.anchor_rays.size()) {
    throw Error(ErrorCode::kDomain, "plane count mismatch");
  }
  double e = 0.0;
  for (std::size_t s = 0; s < planes.size(); ++s) {
    e += unary_cost(planes[s], problem.anchor_rays[s], problem.anchor_depths[s], cfg);
  }
  for (const auto& nb : problem.adjacency) {
    e += orientation_cost(planes[nb.a].normal, planes[nb.b].normal, cfg);
    e += shape_cost(planes[nb.a], planes[nb.b], nb.terms, cfg).value;
  }
  return e;
}

std::vector<int> select_labels(const PairwiseMrf& mrf, std::span<const int> incumbent,
                               const TrwsOptions& options, TrwsResult* trws) {
  TrwsResult result = solve_trws(mrf, options);
  std::vector<int> labels(incumbent.begin(), incumbent.end());
  if (result.energy < mrf.energy(incumbent)) labels = result.labels;
  if (trws) *trws = std::move(result);
  return labels;
}

RefineResult trws_refine(std::vector<PlaneParams> planes, const RefinementProblem& problem,
                         const RefineConfig& cfg) {
  cfg.validate();
  const std::size_t n = planes.size();
  if (n != problem.anchor_rays.size()) throw Error(ErrorCode::kDomain, "plane count mismatch");

  RefineResult result;
  double energy = refinement_energy(problem, planes, cfg);
  if (!std::isfinite(energy)) throw NumericalError("non-finite refinement energy", 0);
  result.energy_trace.push_back(energy);

  const TrwsOptions options{cfg.trws_max_passes, cfg.trws_tolerance};
  for (int move = 0; move < cfg.moves; ++move) {
    std::vector<std::vector<PlaneParams>> particles(n);
    std::vector<std::vector<double>> unary(n);
    parallel_for(n, [&](std::size_t s) {
      const UnitRay& ray = problem.anchor_rays[s];
      particles[s] = generate_particles(planes[s], cfg,
                                        particle_stream_seed(cfg.random_seed, move, static_cast<int>(s)));
      for (PlaneParams& p : particles[s]) {
        if (!intersect(p, ray)) p = planes[s];
      }
      unary[s].reserve(particles[s].size());
      for (const PlaneParams& p : particles[s]) {
        unary[s].push_back(unary_cost(p, ray, problem.anchor_depths[s], cfg));
      }
    });

    std::vector<std::vector<double>> tables(problem.adjacency.size());
    parallel_for(problem.adjacency.size(), [&](std::size_t k) {
      const auto& nb = problem.adjacency[k];
      const auto& pa = particles[nb.a];
      const auto& pb = particles[nb.b];
      const std::size_t T = nb.terms.size();
      std::vector<std::optional<double>> da(pa.size() * T), db(pb.size() * T);
      for (std::size_t i = 0; i < pa.size(); ++i) {
        for (std::size_t t = 0; t < T; ++t) da[i * T + t] = intersect(pa[i], nb.terms[t].ray_i);
      }
      for (std::size_t j = 0; j < pb.size(); ++j) {
        for (std::size_t t = 0; t < T; ++t) db[j * T + t] = intersect(pb[j], nb.terms[t].ray_j);
      }
      auto& table = tables[k];
      table.resize(pa.size() * pb.size());
      for (std::size_t i = 0; i < pa.size(); ++i) {
        for (std::size_t j = 0; j < pb.size(); ++j) {
          double c = orientation_cost(pa[i].normal, pb[j].normal, cfg);
          for (std::size_t t = 0; t < T; ++t) {
            const ShapeTerm& term = nb.terms[t];
            c += pair_term(da[i * T + t], term.ray_i, db[j * T + t], term.ray_j, term, cfg);
          }
          table[i * pb.size() + j] = c;
        }
      }
    });

    std::vector<int> counts(n);
    for (std::size_t s = 0; s < n; ++s) counts[s] = static_cast<int>(particles[s].size());
    PairwiseMrf mrf(std::move(counts));
    for (std::size_t s = 0; s < n; ++s) mrf.set_unary(static_cast<int>(s), std::move(unary[s]));
    for (std::size_t k = 0; k < problem.adjacency.size(); ++k) {
      mrf.add_edge(problem.adjacency[k].a, problem.adjacency[k].b, std::move(tables[k]));
    }

    const std::vector<int> incumbent(n, 0);
    TrwsResult trws;
    const std::vector<int> labels = select_labels(mrf, incumbent, options, &trws);

    RefineMoveRecord record;
    record.move = move;
    record.energy_before = energy;
    record.lower_bounds = trws.lower_bounds;
    std::vector<PlaneParams> candidate(n);
    for (std::size_t s = 0; s < n; ++s) candidate[s] = particles[s][labels[s]];
    const double candidate_energy = refinement_energy(problem, candidate, cfg);
    if (!std::isfinite(candidate_energy)) throw NumericalError("non-finite refinement energy", move);
    if (labels != incumbent && candidate_energy <= energy) {
      planes = std::move(candidate);
      energy = candidate_energy;
      record.accepted_trws = true;
    }
    record.energy_after = energy;
    result.moves.push_back(std::move(record));
    result.energy_trace.push_back(energy);
  }

  for (const auto& nb : problem.adjacency) {
    result.grazing_pairs += shape_cost(planes[nb.a], planes[nb.b], nb.terms, cfg).grazing_pairs;
  }
  result.planes = std::move(planes);
  return result;
}

void write_refine_trace_csv(std::ostream& out, const RefineResult& result) {
  out << "move,pass,lower_bound,energy_before,energy_after\n";
  out.precision(17);
  for (const RefineMoveRecord& m : result.moves) {
    if (m.lower_bounds.empty()) {
      out << m.move << ",0,," << m.energy_before << ',' << m.energy_after << '\n';
      continue;
    }
    for (std::size_t p = 0; p < m.lower_bounds.size(); ++p) {
      out << m.move << ',' << p + 1 << ',' << m.lower_bounds[p] << ',' << m.energy_before << ','
          << m.energy_after << '\n';
    }
  }
}

}  // namespace arapdepth
