#include "arapdepth/arap.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <ostream>
#include <random>

#include "arapdepth/error.hpp"

namespace arapdepth {

namespace {

double edge_length(double di, const UnitRay& ei, double dj, const UnitRay& ej) {
  return (di * ei.direction() - dj * ej.direction()).norm();
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace

std::vector<PointEdge> expand_graph_to_points(const RigidityGraph& graph,
                                              const std::vector<AnchorTriple>& triples) {
  if (graph.size() != triples.size()) {
    throw Error(ErrorCode::kDomain, "graph and triple counts differ");
  }
  std::vector<PointEdge> edges;
  const int n = static_cast<int>(triples.size());
  for (int i = 0; i < n; ++i) {
    edges.push_back({point_index(i, 0), point_index(i, 1), 1.0});
    edges.push_back({point_index(i, 0), point_index(i, 2), 1.0});
    edges.push_back({point_index(i, 1), point_index(i, 2), 1.0});
  }
  for (int i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < graph.neighbors[i].size(); ++m) {
      const int j = graph.neighbors[i][m];
      const double w = graph.weights[i][m];
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) edges.push_back({point_index(i, a), point_index(j, b), w});
      }
    }
  }
  return edges;
}

WarpedRays warp_to_next_rays(std::span<const Pixel> pixels, const FlowField& flow,
                             const CameraIntrinsics& K) {
  WarpedRays out;
  out.rays.reserve(pixels.size());
  out.positions.reserve(pixels.size());
  out.valid.reserve(pixels.size());
  for (const Pixel& p : pixels) {
    Eigen::Vector2d f;
    bool ok = flow.sample(p.x(), p.y(), f);
    const Pixel q = ok ? Pixel(p + f) : p;
    ok = ok && q.x() >= 0.0 && q.y() >= 0.0 && q.x() <= flow.width - 1 && q.y() <= flow.height - 1;
    out.positions.push_back(q);
    out.rays.push_back(backproject_ray(K, q));
    out.valid.push_back(ok ? 1 : 0);
  }
  return out;
}

ArapProblem::ArapProblem(std::vector<double> ref_depths, std::vector<UnitRay> ref_rays,
                         std::vector<UnitRay> next_rays, std::vector<PointEdge> edges,
                         double smoothing_eps, std::vector<std::uint8_t> valid)
    : ref_depths_(std::move(ref_depths)),
      ref_rays_(std::move(ref_rays)),
      next_rays_(std::move(next_rays)),
      edges_(std::move(edges)),
      valid_(std::move(valid)),
      eps_(smoothing_eps) {
  const std::size_t n = ref_depths_.size();
  if (ref_rays_.size() != n || next_rays_.size() != n) {
    throw Error(ErrorCode::kDomain, "depth and ray counts differ");
  }
  if (valid_.empty()) valid_.assign(n, 1);
  if (valid_.size() != n) throw Error(ErrorCode::kDomain, "validity mask size differs");
  if (!(eps_ > 0.0) || !std::isfinite(eps_)) {
    throw Error(ErrorCode::kDomain, "smoothing eps must be positive");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (valid_[i] && !(ref_depths_[i] > 0.0 && std::isfinite(ref_depths_[i]))) {
      throw Error(ErrorCode::kDomain, "reference depths must be positive and finite");
    }
  }
  ref_lengths_.assign(edges_.size(), 0.0);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const PointEdge& pe = edges_[e];
    if (pe.i < 0 || pe.j < 0 || static_cast<std::size_t>(pe.i) >= n ||
        static_cast<std::size_t>(pe.j) >= n || pe.i == pe.j) {
      throw Error(ErrorCode::kDomain, "edge endpoint out of range");
    }
    if (!(pe.weight >= 0.0) || !std::isfinite(pe.weight)) {
      throw Error(ErrorCode::kDomain, "edge weights must be finite and non-negative");
    }
    if (!valid_[pe.i] || !valid_[pe.j]) continue;
    ref_lengths_[e] = edge_length(ref_depths_[pe.i], ref_rays_[pe.i], ref_depths_[pe.j],
                                  ref_rays_[pe.j]);
    active_.push_back(e);
  }
}

double ArapProblem::energy(std::span<const double> x, double eps) const {
  if (x.size() != point_count()) throw Error(ErrorCode::kDomain, "depth vector size mismatch");
  double total = 0.0;
  for (std::size_t e : active_) {
    const PointEdge& pe = edges_[e];
    const double lt = edge_length(x[pe.i], next_rays_[pe.i], x[pe.j], next_rays_[pe.j]);
    total += pe.weight * smoothed_abs(ref_lengths_[e] - lt, eps);
  }
  return total;
}

void ArapProblem::gradient(std::span<const double> x, double eps, std::span<double> out) const {
  if (x.size() != point_count() || out.size() != point_count()) {
    throw Error(ErrorCode::kDomain, "depth vector size mismatch");
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t e : active_) {
    const PointEdge& pe = edges_[e];
    const Eigen::Vector3d& ei = next_rays_[pe.i].direction();
    const Eigen::Vector3d& ej = next_rays_[pe.j].direction();
    const Eigen::Vector3d diff = x[pe.i] * ei - x[pe.j] * ej;
    const double lt = diff.norm();
    if (lt == 0.0) continue;
    const double r = ref_lengths_[e] - lt;
    const double g = -pe.weight * r / std::sqrt(r * r + eps * eps) / lt;
    out[pe.i] += g * ei.dot(diff);
    out[pe.j] -= g * ej.dot(diff);
  }
}

double arap_energy(const ArapProblem& problem, std::span<const double> next_depths) {
  return problem.energy(next_depths, problem.smoothing_eps());
}

std::vector<double> arap_gradient(const ArapProblem& problem,
                                  std::span<const double> next_depths) {
  std::vector<double> g(problem.point_count());
  problem.gradient(next_depths, problem.smoothing_eps(), g);
  return g;
}

void SolverConfig::validate() const {
  auto fail = [](const char* msg) { throw Error(ErrorCode::kConfiguration, msg); };
  if (max_iterations < 0) fail("max_iterations must be non-negative");
  if (!(gradient_tolerance >= 0.0)) fail("gradient_tolerance must be non-negative");
  if (use_isometry_box && !(d_sigma > 0.0)) {
    throw Error(ErrorCode::kDomain, "d_sigma must be positive when the box is enabled");
  }
  if (!(depth_floor > 0.0) || !std::isfinite(depth_floor)) fail("depth_floor must be positive");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) fail("armijo_c must lie in (0, 1)");
  if (!(initial_step > 0.0) || !std::isfinite(initial_step)) fail("initial_step must be positive");
  if (!(continuation_start >= 0.0) || !std::isfinite(continuation_start)) {
    fail("continuation_start must be non-negative");
  }
  if (!(continuation_factor > 0.0 && continuation_factor < 1.0)) {
    fail("continuation_factor must lie in (0, 1)");
  }
}

int SolveReport::iterations_to_within(double fraction) const {
  if (energy_trace.empty()) return 0;
  const double target = (1.0 + fraction) * energy_trace.back();
  for (std::size_t k = 0; k < energy_trace.size(); ++k) {
    if (energy_trace[k] <= target) return static_cast<int>(k);
  }
  return static_cast<int>(energy_trace.size()) - 1;
}

SolveReport solve_arap(const ArapProblem& problem, std::span<const double> init,
                       const SolverConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = problem.point_count();
  if (init.size() != n) throw Error(ErrorCode::kDomain, "initial depth vector size mismatch");

  std::vector<double> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = config.depth_floor;
    hi[i] = std::numeric_limits<double>::infinity();
    if (config.use_isometry_box && problem.valid()[i] && std::isfinite(config.d_sigma)) {
      const double d = problem.ref_depths()[i];
      lo[i] = std::max(config.depth_floor, d - config.d_sigma);
      hi[i] = d + config.d_sigma;
    }
  }
  auto project = [&](std::vector<double>& v) {
    for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
  };
  auto pg_norm = [&](const std::vector<double>& x, const std::vector<double>& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x[i] - std::clamp(x[i] - g[i], lo[i], hi[i]);
      s += d * d;
    }
    return std::sqrt(s);
  };

  std::vector<double> x(init.begin(), init.end());
  for (double v : x) {
    if (!std::isfinite(v)) throw NumericalError("non-finite initial depth", 0);
  }
  project(x);

  const double target_eps = problem.smoothing_eps();
  std::vector<double> lengths;
  lengths.reserve(problem.active_edges().size());
  for (std::size_t e : problem.active_edges()) lengths.push_back(problem.ref_lengths()[e]);
  double eps = std::max(target_eps, config.continuation_start * median(lengths));

  SolveReport report;
  std::vector<double> g(n), g_prev(n), x_prev(n), x_new(n);
  double recorded = problem.energy(x, target_eps);
  if (!std::isfinite(recorded)) throw NumericalError("non-finite initial energy", 0);
  problem.gradient(x, target_eps, g);
  report.energy_trace.push_back(recorded);
  report.records.push_back({0, recorded, 0.0, pg_norm(x, g)});

  int iteration = 0;
  bool converged = false;
  for (;;) {
    double energy = problem.energy(x, eps);
    problem.gradient(x, eps, g);
    double step = config.initial_step;
    bool have_prev = false;
    bool stage_converged = pg_norm(x, g) < config.gradient_tolerance * std::max(1.0, eps / target_eps);
    while (!stage_converged && iteration < config.max_iterations) {
      if (have_prev) {
        double ss = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double s = x[i] - x_prev[i];
          const double y = g[i] - g_prev[i];
          ss += s * s;
          sy += s * y;
        }
        step = sy > 0.0 ? ss / sy : 2.0 * step;
        step = std::clamp(step, 1e-12, 1e3);
      }
      bool accepted = false;
      double new_energy = 0.0;
      double new_recorded = 0.0;
      while (step > 1e-20) {
        for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] - step * g[i];
        project(x_new);
        new_energy = problem.energy(x_new, eps);
        if (!std::isfinite(new_energy)) throw NumericalError("non-finite energy", iteration + 1);
        double decrease = 0.0;
        for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (x[i] - x_new[i]);
        if (new_energy <= energy - config.armijo_c * decrease) {
          new_recorded = eps == target_eps ? new_energy : problem.energy(x_new, target_eps);
          if (new_recorded <= recorded) {
            accepted = true;
            break;
          }
        }
        step *= 0.5;
      }
      if (!accepted) break;
      double moved = 0.0, scale = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        moved = std::max(moved, std::abs(x_new[i] - x[i]));
        scale = std::max(scale, std::abs(x[i]));
      }
      const bool stalled = moved <= 1e-13 * scale;
      x_prev.swap(x);
      x.swap(x_new);
      g_prev.swap(g);
      problem.gradient(x, eps, g);
      for (double v : g) {
        if (!std::isfinite(v)) throw NumericalError("non-finite gradient", iteration + 1);
      }
      energy = new_energy;
      recorded = new_recorded;
      have_prev = true;
      ++iteration;
      const double pg = pg_norm(x, g);
      report.energy_trace.push_back(recorded);
      report.records.push_back({iteration, recorded, step, pg});
      stage_converged = pg < config.gradient_tolerance * std::max(1.0, eps / target_eps) || stalled;
    }
    if (eps <= target_eps) {
      converged = stage_converged;
      break;
    }
    if (iteration >= config.max_iterations) break;
    eps = std::max(target_eps, eps * config.continuation_factor);
  }

  report.final_depths = std::move(x);
  report.iterations_used = iteration;
  report.converged = converged;
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void write_energy_trace_csv(std::ostream& out, const SolveReport& report) {
  out << "iteration,energy,step_size,projected_gradient_norm\n";
  out.precision(17);
  for (const IterationRecord& r : report.records) {
    out << r.iteration << ',' << r.energy << ',' << r.step_size << ','
        << r.projected_gradient_norm << '\n';
  }
}

RandomArapInstance random_arap_instance(std::uint64_t seed, int points, double smoothing_eps) {
  if (points < 2) throw Error(ErrorCode::kDomain, "a random instance needs at least 2 points");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CameraIntrinsics K{160.0, 160.0, 79.5, 59.5, 0.0};
  std::vector<double> ref_depths;
  std::vector<UnitRay> ref_rays, next_rays;
  std::vector<double> next_depths;
  for (int i = 0; i < points; ++i) {
    ref_rays.push_back(backproject_ray(K, Pixel(160.0 * u(rng), 120.0 * u(rng))));
    next_rays.push_back(backproject_ray(K, Pixel(160.0 * u(rng), 120.0 * u(rng))));
    ref_depths.push_back(2.0 + 8.0 * u(rng));
    next_depths.push_back(ref_depths.back() * (0.8 + 0.4 * u(rng)));
  }
  std::vector<PointEdge> edges;
  for (int i = 1; i < points; ++i) {
    edges.push_back({static_cast<int>(u(rng) * i), i, 0.5 + 1.5 * u(rng)});
  }
  for (int e = 0; e < 2 * points; ++e) {
    const int i = static_cast<int>(u(rng) * points);
    const int j = static_cast<int>(u(rng) * points);
    if (i != j) edges.push_back({i, j, 0.5 + 1.5 * u(rng)});
  }
  return {ArapProblem(std::move(ref_depths), std::move(ref_rays), std::move(next_rays),
                      std::move(edges), smoothing_eps),
          std::move(next_depths)};
}

double gradient_relative_error(const ArapProblem& problem, std::span<const double> next_depths,
                               double h) {
  const std::vector<double> analytic = arap_gradient(problem, next_depths);
  std::vector<double> x(next_depths.begin(), next_depths.end());
  double max_diff = 0.0, max_abs = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = arap_energy(problem, x);
    x[i] = saved - h;
    const double down = arap_energy(problem, x);
    x[i] = saved;
    max_diff = std::max(max_diff, std::abs(analytic[i] - (up - down) / (2.0 * h)));
    max_abs = std::max(max_abs, std::abs(analytic[i]));
  }
  return max_diff / std::max(max_abs, 1e-12);
}

}  // namespace arapdepth
