#include "arapdepth/pipeline.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "arapdepth/error.hpp"
#include "arapdepth/parallel.hpp"

namespace arapdepth {

namespace {

void require_same_size(int w, int h, int ow, int oh, const char* what) {
  if (w != ow || h != oh) {
    throw Error(ErrorCode::kDomain, std::string(what) + " dimensions " + std::to_string(ow) + "x" +
                                        std::to_string(oh) + " do not match the reference " +
                                        std::to_string(w) + "x" + std::to_string(h));
  }
}

std::optional<double> try_ray_plane_depth(const PlaneParams& plane, const UnitRay& ray) {
  try {
    return ray_plane_depth(plane, ray);
  } catch (const Error&) {
    return std::nullopt;
  }
}

PlaneParams reference_plane(const AnchorTriple& t, const DepthMap& depth, const CameraIntrinsics& K) {
  const auto pts = t.points();
  Point3 x[3];
  for (int k = 0; k < 3; ++k) {
    x[k] = point_from_depth(depth.at(pts[k].x, pts[k].y),
                            backproject_ray(K, Pixel(pts[k].x, pts[k].y)));
  }
  try {
    return plane_from_points(x[0], x[1], x[2]);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateTriple) throw;
    const Eigen::Vector3d n = x[0].normalized();
    return {n, n.dot(x[0])};
  }
}

}  // namespace

std::vector<int> transfer_labels(const Segmentation& seg, const FlowField& flow, int next_width,
                                 int next_height) {
  return transfer_labels(seg, flow, next_width, next_height, {}, 0.0);
}

std::vector<int> transfer_labels(const Segmentation& seg, const FlowField& flow, int next_width,
                                 int next_height, std::span<const double> source_depth,
                                 double occlusion_margin) {
  require_same_size(seg.width, seg.height, flow.width, flow.height, "flow");
  if (!source_depth.empty() && source_depth.size() != seg.labels.size()) {
    throw Error(ErrorCode::kDomain, "source depth size mismatch");
  }
  if (!(occlusion_margin >= 0.0)) throw Error(ErrorCode::kDomain, "occlusion margin must be >= 0");
  if (next_width <= 0 || next_height <= 0) throw Error(ErrorCode::kDomain, "empty next frame");
  const std::size_t n = static_cast<std::size_t>(next_width) * next_height;
  std::vector<int> labels(n, -1);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<double> front(n, std::numeric_limits<double>::infinity());
  auto depth_of = [&](std::size_t i) {
    if (source_depth.empty() || !std::isfinite(source_depth[i])) {
      return std::numeric_limits<double>::infinity();
    }
    return source_depth[i];
  };
  for (int y = 0; y < seg.height; ++y) {
    for (int x = 0; x < seg.width; ++x) {
      const std::size_t i = flow.index(x, y);
      if (!flow.valid[i]) continue;
      const double qx = x + flow.u[i];
      const double qy = y + flow.v[i];
      const double tx = std::round(qx);
      const double ty = std::round(qy);
      if (!(tx >= 0 && ty >= 0 && tx < next_width && ty < next_height)) continue;
      const std::size_t t = static_cast<std::size_t>(ty) * next_width + static_cast<std::size_t>(tx);
      const double d = (qx - tx) * (qx - tx) + (qy - ty) * (qy - ty);
      const int lab = seg.label(x, y);
      const double z = depth_of(i);
      bool take;
      if (labels[t] < 0) {
        take = true;
      } else if (z < front[t] * (1.0 - occlusion_margin)) {
        take = true;
      } else if (front[t] < z * (1.0 - occlusion_margin)) {
        take = false;
      } else {
        take = d < best[t] || (d == best[t] && lab < labels[t]);
      }
      if (take) {
        best[t] = d;
        labels[t] = lab;
        front[t] = z;
      }
    }
  }

  std::deque<std::size_t> queue;
  for (std::size_t t = 0; t < n; ++t) {
    if (labels[t] >= 0) queue.push_back(t);
  }
  if (queue.empty()) {
    if (next_width == seg.width && next_height == seg.height) return seg.labels;
    std::fill(labels.begin(), labels.end(), 0);
    return labels;
  }
  while (!queue.empty()) {
    const std::size_t p = queue.front();
    queue.pop_front();
    const int x = static_cast<int>(p % next_width);
    const int y = static_cast<int>(p / next_width);
    const std::size_t nbs[4] = {x > 0 ? p - 1 : p, x + 1 < next_width ? p + 1 : p,
                                y > 0 ? p - next_width : p, y + 1 < next_height ? p + next_width : p};
    for (std::size_t q : nbs) {
      if (labels[q] < 0) {
        labels[q] = labels[p];
        queue.push_back(q);
      }
    }
  }
  return labels;
}

std::vector<int> relabel_boundaries_by_color(const std::vector<int>& labels,
                                             const Segmentation& seg, const Image& ref_image,
                                             const Image& next_image) {
  require_same_size(seg.width, seg.height, ref_image.width, ref_image.height, "reference image");
  if (ref_image.channels != next_image.channels) {
    throw Error(ErrorCode::kDomain, "reference and next image channel counts differ");
  }
  const int W = next_image.width;
  const int H = next_image.height;
  if (labels.size() != next_image.pixel_count()) throw Error(ErrorCode::kDomain, "label map size mismatch");
  const int C = ref_image.channels;
  std::vector<double> mean(static_cast<std::size_t>(seg.count) * C, 0.0);
  std::vector<double> count(static_cast<std::size_t>(seg.count), 0.0);
  for (std::size_t i = 0; i < seg.labels.size(); ++i) {
    const int l = seg.labels[i];
    for (int c = 0; c < C; ++c) mean[static_cast<std::size_t>(l) * C + c] += ref_image.pixel(i)[c];
    count[l] += 1.0;
  }
  for (std::size_t l = 0; l < count.size(); ++l) {
    for (int c = 0; c < C; ++c) mean[l * C + c] /= std::max(count[l], 1.0);
  }
  auto distance = [&](int label, const double* px) {
    double d = 0.0;
    for (int c = 0; c < C; ++c) {
      const double diff = px[c] - mean[static_cast<std::size_t>(label) * C + c];
      d += diff * diff;
    }
    return d;
  };

  std::vector<int> out = labels;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      const int own = labels[i];
      bool boundary = false;
      for (int dy = -1; dy <= 1 && !boundary; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= W || ny >= H) continue;
          if (labels[static_cast<std::size_t>(ny) * W + nx] != own) {
            boundary = true;
            break;
          }
        }
      }
      if (!boundary) continue;
      const double* px = next_image.pixel(i);
      int best = own;
      double best_d = distance(own, px);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= W || ny >= H) continue;
          const int cand = labels[static_cast<std::size_t>(ny) * W + nx];
          const double d = distance(cand, px);
          if (d < best_d || (d == best_d && cand < best && cand != own && best != own)) {
            best = cand;
            best_d = d;
          }
        }
      }
      out[i] = best;
    }
  }
  return out;
}

DepthMap render_depth(const std::vector<PlaneParams>& planes, const std::vector<int>& labels,
                      int width, int height, const CameraIntrinsics& K) {
  if (labels.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kDomain, "label map size mismatch");
  }
  DepthMap out(width, height);
  parallel_for(static_cast<std::size_t>(height), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < width; ++x) {
      const int lab = labels[out.index(x, y)];
      if (lab < 0 || static_cast<std::size_t>(lab) >= planes.size()) {
        throw Error(ErrorCode::kDomain, "label without a plane");
      }
      const auto d = try_ray_plane_depth(planes[lab], backproject_ray(K, Pixel(x, y)));
      if (d && std::isfinite(*d)) out.set(x, y, *d);
    }
  });
  return out;
}

PipelineResult propagate_depth(const SceneFrame& ref, const Image& next_image,
                               const FlowField& flow, const RunConfig& config) {
  config.validate();
  ref.image.validate();
  next_image.validate();
  const CameraIntrinsics& K = ref.intrinsics;
  K.validate();
  const int W = ref.image.width;
  const int H = ref.image.height;
  require_same_size(W, H, next_image.width, next_image.height, "next image");
  require_same_size(W, H, flow.width, flow.height, "flow");
  if (!ref.depth) throw Error(ErrorCode::kUnusablePrior, "reference frame has no depth prior");
  const DepthMap& depth = *ref.depth;
  require_same_size(W, H, depth.width, depth.height, "reference depth");

  PipelineResult result;
  PipelineDiagnostics& diag = result.diagnostics;

  result.segmentation = slic_segment(ref.image, config.segmentation.superpixels,
                                     config.segmentation.compactness);
  const Segmentation& seg = result.segmentation;
  const auto members = seg.members();
  const PixelFilter usable = [&depth](int x, int y) {
    return depth.is_valid(x, y) && depth.at(x, y) > 0.0 && std::isfinite(depth.at(x, y));
  };
  // Prefer triple pixels whose flow target stays inside the next frame, so
  // that every triple point keeps its ARAP terms.
  const PixelFilter tracked = [&](int x, int y) {
    if (!usable(x, y)) return false;
    const std::size_t i = flow.index(x, y);
    if (!flow.valid[i]) return false;
    const double qx = x + flow.u[i];
    const double qy = y + flow.v[i];
    return qx >= 0.0 && qy >= 0.0 && qx <= W - 1 && qy <= H - 1;
  };
  for (int s = 0; s < seg.count; ++s) {
    try {
      try {
        result.triples.push_back(select_anchor_triple(members[s], tracked));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateSuperpixel) throw;
        result.triples.push_back(select_anchor_triple(members[s], usable));
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::kUnusablePrior,
                  "superpixel " + std::to_string(s) + " has no usable depth triple: " + e.what());
    }
  }
  const int N = seg.count;

  const std::optional<double> tau =
      config.segmentation.tau > 0.0 ? std::optional<double>(config.segmentation.tau) : std::nullopt;
  const RigidityGraph graph = build_knn_graph(result.triples, config.segmentation.knn, tau);
  for (const auto& w : graph.warnings) diag.notes.push_back(w);

  std::vector<Pixel> pixels;
  std::vector<double> ref_depths;
  std::vector<UnitRay> ref_rays;
  pixels.reserve(3 * N);
  for (const AnchorTriple& t : result.triples) {
    for (const PixelCoord& p : t.points()) {
      pixels.emplace_back(p.x, p.y);
      ref_rays.push_back(backproject_ray(K, pixels.back()));
      ref_depths.push_back(depth.at(p.x, p.y));
    }
  }
  const WarpedRays warped = warp_to_next_rays(pixels, flow, K);
  for (auto v : warped.valid) diag.out_of_bounds_points += v ? 0 : 1;

  const ArapProblem problem(ref_depths, ref_rays, warped.rays,
                            expand_graph_to_points(graph, result.triples), config.smoothing_eps,
                            warped.valid);
  result.solve_report = solve_arap(problem, ref_depths, config.solver);

  std::vector<PlaneParams> ref_planes;
  ref_planes.reserve(N);
  for (const AnchorTriple& t : result.triples) ref_planes.push_back(reference_plane(t, depth, K));
  result.arap_planes = fit_planes(result.triples, result.solve_report.final_depths, warped.rays,
                                  ref_planes, &diag.fallback_planes);

  std::vector<double> predicted(seg.labels.size(), std::numeric_limits<double>::infinity());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = flow.index(x, y);
      if (!flow.valid[i]) continue;
      const UnitRay ray = backproject_ray(K, Pixel(x + flow.u[i], y + flow.v[i]));
      if (const auto d = try_ray_plane_depth(result.arap_planes[seg.labels[i]], ray)) predicted[i] = *d;
    }
  }
  result.next_labels = transfer_labels(seg, flow, W, H, predicted);
  if (config.color_relabel) {
    result.next_labels = relabel_boundaries_by_color(result.next_labels, seg, ref.image, next_image);
  }
  result.unrefined_depth = render_depth(result.arap_planes, result.next_labels, W, H, K);

  const BoundarySet boundary = boundary_pairs(seg, ref.image, config.segmentation.beta);
  const std::size_t M = boundary.pairs.size();
  std::vector<Pixel> side_a, side_b;
  side_a.reserve(M);
  side_b.reserve(M);
  for (const BoundaryPair& bp : boundary.pairs) {
    side_a.emplace_back(static_cast<double>(bp.pixel_a % W), static_cast<double>(bp.pixel_a / W));
    side_b.emplace_back(static_cast<double>(bp.pixel_b % W), static_cast<double>(bp.pixel_b / W));
  }
  const WarpedRays next_a = warp_to_next_rays(side_a, flow, K);
  const WarpedRays next_b = warp_to_next_rays(side_b, flow, K);
  std::vector<double> ref_gap_sq(M, 0.0);
  std::vector<std::uint8_t> pair_valid(M, 0);
  for (std::size_t p = 0; p < M; ++p) {
    const BoundaryPair& bp = boundary.pairs[p];
    const UnitRay ea = backproject_ray(K, side_a[p]);
    const UnitRay eb = backproject_ray(K, side_b[p]);
    const auto da = try_ray_plane_depth(ref_planes[bp.label_a], ea);
    const auto db = try_ray_plane_depth(ref_planes[bp.label_b], eb);
    if (!da || !db || !next_a.valid[p] || !next_b.valid[p]) continue;
    ref_gap_sq[p] = (*da * ea.direction() - *db * eb.direction()).squaredNorm();
    pair_valid[p] = 1;
  }
  std::vector<UnitRay> anchor_rays;
  std::vector<double> anchor_depths;
  for (int s = 0; s < N; ++s) {
    anchor_rays.push_back(warped.rays[point_index(s, 0)]);
    anchor_depths.push_back(result.solve_report.final_depths[point_index(s, 0)]);
  }
  const RefinementProblem refine_problem =
      make_refinement_problem(boundary, next_a.rays, next_b.rays, ref_gap_sq, pair_valid,
                              std::move(anchor_rays), std::move(anchor_depths));
  result.refine_result = trws_refine(result.arap_planes, refine_problem, config.refine);
  result.planes = result.refine_result.planes;
  diag.grazing_boundary_pairs = result.refine_result.grazing_pairs;

  result.next_depth = render_depth(result.planes, result.next_labels, W, H, K);
  diag.grazing_pixels = static_cast<int>(result.next_depth.pixel_count() - result.next_depth.valid_count());
  if (!diag.fallback_planes.empty()) {
    diag.notes.push_back(std::to_string(diag.fallback_planes.size()) +
                         " superpixels used a fallback plane");
  }
  return result;
}

std::vector<PipelineResult> propagate_multiframe(const std::vector<SceneFrame>& frames,
                                                 const std::vector<FlowField>& flows,
                                                 const RunConfig& config) {
  if (frames.size() != flows.size() + 1) {
    throw Error(ErrorCode::kDomain, "expected " + std::to_string(frames.size() > 0 ? frames.size() - 1 : 0) +
                                        " flows for " + std::to_string(frames.size()) +
                                        " frames, got " + std::to_string(flows.size()));
  }
  if (!frames[0].depth) throw Error(ErrorCode::kUnusablePrior, "frame 0 has no depth prior");
  std::vector<PipelineResult> results;
  results.reserve(flows.size());
  SceneFrame current = frames[0];
  for (std::size_t t = 0; t < flows.size(); ++t) {
    try {
      results.push_back(propagate_depth(current, frames[t + 1].image, flows[t], config));
    } catch (const Error& e) {
      throw Error(e.code(), "frame " + std::to_string(t + 1) + ": " + e.what());
    }
    current = SceneFrame{frames[t + 1].image, results.back().next_depth, frames[t + 1].intrinsics};
  }
  return results;
}

}  // namespace arapdepth
