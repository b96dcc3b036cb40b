#include "arapdepth/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

#include "arapdepth/error.hpp"

namespace arapdepth {

namespace {

constexpr double kColorScale = 100.0;

// Component labelling of a label image (4-connectivity). Returns per-pixel
// component ids and, per component, its label and pixel list.
struct Components {
  std::vector<int> id;
  std::vector<int> label;
  std::vector<std::vector<std::size_t>> pixels;
};

Components connected_components(const std::vector<int>& labels, int width, int height) {
  Components comps;
  comps.id.assign(labels.size(), -1);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (comps.id[start] >= 0) continue;
    const int comp = static_cast<int>(comps.label.size());
    const int lab = labels[start];
    comps.label.push_back(lab);
    comps.pixels.emplace_back();
    auto& members = comps.pixels.back();
    comps.id[start] = comp;
    stack.assign(1, start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      members.push_back(p);
      const int x = static_cast<int>(p % width);
      const int y = static_cast<int>(p / width);
      const std::pair<int, int> nbs[4] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (auto [nx, ny] : nbs) {
        if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
        const std::size_t q = static_cast<std::size_t>(ny) * width + nx;
        if (comps.id[q] < 0 && labels[q] == lab) {
          comps.id[q] = comp;
          stack.push_back(q);
        }
      }
    }
    std::sort(members.begin(), members.end());
  }
  return comps;
}

template <typename Fn>
void for_each_neighbor(std::size_t p, int width, int height, Fn&& fn) {
  const int x = static_cast<int>(p % width);
  const int y = static_cast<int>(p / width);
  if (x > 0) fn(p - 1);
  if (x + 1 < width) fn(p + 1);
  if (y > 0) fn(p - width);
  if (y + 1 < height) fn(p + width);
}

// Labels renumbered 0..n-1 in order of first raster appearance.
int relabel_contiguous(std::vector<int>& labels) {
  std::map<int, int> remap;
  for (int& l : labels) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  return static_cast<int>(remap.size());
}

// Keeps the largest component of every label; other fragments (and
// unassigned pixels, label -1) join the largest adjacent superpixel.
std::vector<int> enforce_connectivity(const std::vector<int>& labels, int width, int height) {
  const Components comps = connected_components(labels, width, height);
  const int n_comp = static_cast<int>(comps.label.size());

  std::map<int, int> largest;  // label -> component
  for (int c = 0; c < n_comp; ++c) {
    const int lab = comps.label[c];
    if (lab < 0) continue;
    auto it = largest.find(lab);
    if (it == largest.end() || comps.pixels[c].size() > comps.pixels[it->second].size()) {
      largest[lab] = c;
    }
  }

  std::vector<int> out(labels.size(), -1);
  std::map<int, std::size_t> size;
  for (auto [lab, c] : largest) {
    for (std::size_t p : comps.pixels[c]) out[p] = lab;
    size[lab] = comps.pixels[c].size();
  }
  if (largest.empty()) {
    std::fill(out.begin(), out.end(), 0);
    return out;
  }

  std::vector<int> orphans;
  for (int c = 0; c < n_comp; ++c) {
    if (comps.label[c] < 0 || largest.at(comps.label[c]) != c) orphans.push_back(c);
  }
  while (!orphans.empty()) {
    std::vector<int> pending;
    for (int c : orphans) {
      int best = -1;
      for (std::size_t p : comps.pixels[c]) {
        for_each_neighbor(p, width, height, [&](std::size_t q) {
          const int lab = out[q];
          if (lab < 0) return;
          if (best < 0 || size[lab] > size[best] || (size[lab] == size[best] && lab < best)) {
            best = lab;
          }
        });
      }
      if (best < 0) {
        pending.push_back(c);
        continue;
      }
      for (std::size_t p : comps.pixels[c]) out[p] = best;
      size[best] += comps.pixels[c].size();
    }
    if (pending.size() == orphans.size()) {
      throw Error(ErrorCode::kDomain, "segmentation fragments without labelled neighbours");
    }
    orphans = std::move(pending);
  }
  return out;
}

bool all_collinear(const std::vector<PixelCoord>& pts) {
  if (pts.size() < 3) return true;
  const PixelCoord a = pts.front();
  std::size_t k = 1;
  while (k < pts.size() && pts[k] == a) ++k;
  if (k == pts.size()) return true;
  const long long dx = pts[k].x - a.x;
  const long long dy = pts[k].y - a.y;
  for (const PixelCoord& p : pts) {
    if (dx * (p.y - a.y) - dy * (p.x - a.x) != 0) return false;
  }
  return true;
}

double squared_distance(double ax, double ay, double bx, double by) {
  return (ax - bx) * (ax - bx) + (ay - by) * (ay - by);
}

}  // namespace

std::vector<std::vector<PixelCoord>> Segmentation::members() const {
  std::vector<std::vector<PixelCoord>> out(static_cast<std::size_t>(count));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out[static_cast<std::size_t>(label(x, y))].push_back({x, y});
  }
  return out;
}

std::vector<std::size_t> Segmentation::sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(count), 0);
  for (int l : labels) ++out[static_cast<std::size_t>(l)];
  return out;
}

void Segmentation::validate() const {
  if (width <= 0 || height <= 0 ||
      labels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::kDomain, "segmentation size mismatch");
  }
  for (int l : labels) {
    if (l < 0 || l >= count) throw Error(ErrorCode::kDomain, "segmentation label out of range");
  }
  const Components comps = connected_components(labels, width, height);
  std::vector<int> seen(static_cast<std::size_t>(count), 0);
  for (int l : comps.label) ++seen[static_cast<std::size_t>(l)];
  if (std::any_of(seen.begin(), seen.end(), [](int n) { return n != 1; })) {
    throw Error(ErrorCode::kDomain,
                "segmentation labels must be used exactly once and be 4-connected");
  }
}

double AnchorTriple::area() const {
  const double cross = static_cast<double>(p1.x - anchor.x) * (p2.y - anchor.y) -
                       static_cast<double>(p1.y - anchor.y) * (p2.x - anchor.x);
  return 0.5 * std::abs(cross);
}

std::vector<BoundarySet::Adjacency> BoundarySet::adjacency() const {
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    groups[{std::min(p.label_a, p.label_b), std::max(p.label_a, p.label_b)}].push_back(i);
  }
  std::vector<Adjacency> out;
  out.reserve(groups.size());
  for (auto& [key, idx] : groups) out.push_back({key.first, key.second, std::move(idx)});
  return out;
}

Segmentation slic_segment(const Image& image, int target_count, double compactness,
                          int iterations) {
  image.validate();
  if (target_count < 2) throw Error(ErrorCode::kDomain, "superpixel count must be at least 2");
  if (static_cast<std::size_t>(target_count) > image.pixel_count()) {
    throw Error(ErrorCode::kDomain, "superpixel count exceeds the number of pixels");
  }
  if (!(compactness > 0.0)) throw Error(ErrorCode::kDomain, "compactness must be positive");

  const int W = image.width;
  const int H = image.height;
  const int C = image.channels;
  int nx = std::max(1, static_cast<int>(std::lround(std::sqrt(double(target_count) * W / H))));
  nx = std::min(nx, W);
  int ny = std::max(1, static_cast<int>(std::lround(double(target_count) / nx)));
  ny = std::min(ny, H);
  const double step_x = double(W) / nx;
  const double step_y = double(H) / ny;
  const double S = std::sqrt(step_x * step_y);
  const double spatial_weight = (compactness / S) * (compactness / S);
  const double color_weight = kColorScale * kColorScale;

  auto gradient = [&](int x, int y) {
    if (x <= 0 || y <= 0 || x >= W - 1 || y >= H - 1) return std::numeric_limits<double>::infinity();
    double g = 0.0;
    for (int c = 0; c < C; ++c) {
      const double gx = image.at(x + 1, y, c) - image.at(x - 1, y, c);
      const double gy = image.at(x, y + 1, c) - image.at(x, y - 1, c);
      g += gx * gx + gy * gy;
    }
    return g;
  };

  const int K = nx * ny;
  std::vector<double> cx(K), cy(K), ccol(static_cast<std::size_t>(K) * C);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int k = j * nx + i;
      int sx = std::clamp(static_cast<int>(std::floor((i + 0.5) * step_x)), 0, W - 1);
      int sy = std::clamp(static_cast<int>(std::floor((j + 0.5) * step_y)), 0, H - 1);
      double best = gradient(sx, sy);
      int bx = sx, by = sy;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const double g = gradient(sx + dx, sy + dy);
          if (g < best) {
            best = g;
            bx = sx + dx;
            by = sy + dy;
          }
        }
      }
      cx[k] = bx;
      cy[k] = by;
      for (int c = 0; c < C; ++c) ccol[static_cast<std::size_t>(k) * C + c] = image.at(bx, by, c);
    }
  }

  std::vector<int> labels(image.pixel_count(), -1);
  std::vector<double> dist(image.pixel_count());
  std::vector<double> sx(K), sy(K), scol(static_cast<std::size_t>(K) * C);
  std::vector<std::size_t> cnt(K);
  for (int it = 0; it < std::max(1, iterations); ++it) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    for (int k = 0; k < K; ++k) {
      const int x0 = std::max(0, static_cast<int>(std::floor(cx[k] - step_x)));
      const int x1 = std::min(W - 1, static_cast<int>(std::ceil(cx[k] + step_x)));
      const int y0 = std::max(0, static_cast<int>(std::floor(cy[k] - step_y)));
      const int y1 = std::min(H - 1, static_cast<int>(std::ceil(cy[k] + step_y)));
      const double* col = &ccol[static_cast<std::size_t>(k) * C];
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * W + x;
          const double* px = image.pixel(p);
          double dc = 0.0;
          for (int c = 0; c < C; ++c) dc += (px[c] - col[c]) * (px[c] - col[c]);
          const double d = dc * color_weight + squared_distance(x, y, cx[k], cy[k]) * spatial_weight;
          if (d < dist[p]) {
            dist[p] = d;
            labels[p] = k;
          }
        }
      }
    }
    std::fill(sx.begin(), sx.end(), 0.0);
    std::fill(sy.begin(), sy.end(), 0.0);
    std::fill(scol.begin(), scol.end(), 0.0);
    std::fill(cnt.begin(), cnt.end(), 0);
    for (std::size_t p = 0; p < labels.size(); ++p) {
      const int k = labels[p];
      if (k < 0) continue;
      sx[k] += static_cast<double>(p % W);
      sy[k] += static_cast<double>(p / W);
      const double* px = image.pixel(p);
      for (int c = 0; c < C; ++c) scol[static_cast<std::size_t>(k) * C + c] += px[c];
      ++cnt[k];
    }
    for (int k = 0; k < K; ++k) {
      if (cnt[k] == 0) continue;
      const double inv = 1.0 / static_cast<double>(cnt[k]);
      cx[k] = sx[k] * inv;
      cy[k] = sy[k] * inv;
      for (int c = 0; c < C; ++c) {
        ccol[static_cast<std::size_t>(k) * C + c] = scol[static_cast<std::size_t>(k) * C + c] * inv;
      }
    }
  }

  Segmentation seg;
  seg.width = W;
  seg.height = H;
  seg.labels = enforce_connectivity(labels, W, H);
  seg.count = relabel_contiguous(seg.labels);
  return merge_degenerate_superpixels(std::move(seg));
}

Segmentation merge_degenerate_superpixels(Segmentation seg) {
  const int W = seg.width;
  const int H = seg.height;
  for (;;) {
    const auto members = seg.members();
    std::vector<char> degenerate(members.size(), 0);
    bool any = false;
    for (std::size_t l = 0; l < members.size(); ++l) {
      degenerate[l] = all_collinear(members[l]) ? 1 : 0;
      any = any || degenerate[l];
    }
    if (!any) break;

    std::vector<std::size_t> size(members.size());
    for (std::size_t l = 0; l < members.size(); ++l) size[l] = members[l].size();
    bool merged = false;
    for (std::size_t l = 0; l < members.size(); ++l) {
      if (!degenerate[l] || size[l] == 0) continue;
      int best = -1;
      for (const PixelCoord& px : members[l]) {
        for_each_neighbor(seg.index(px.x, px.y), W, H, [&](std::size_t q) {
          const int lab = seg.labels[q];
          if (lab == static_cast<int>(l)) return;
          if (best < 0 || size[lab] > size[best] || (size[lab] == size[best] && lab < best)) {
            best = lab;
          }
        });
      }
      if (best < 0) continue;
      for (const PixelCoord& px : members[l]) seg.labels[seg.index(px.x, px.y)] = best;
      size[best] += size[l];
      size[l] = 0;
      merged = true;
    }
    if (!merged) {
      throw Error(ErrorCode::kDegenerateSuperpixel,
                  "image cannot be partitioned into non-collinear superpixels");
    }
    seg.count = relabel_contiguous(seg.labels);
  }
  seg.count = relabel_contiguous(seg.labels);
  return seg;
}

AnchorTriple select_anchor_triple(const std::vector<PixelCoord>& members,
                                  const PixelFilter& usable) {
  if (members.size() < 3) {
    throw Error(ErrorCode::kDegenerateSuperpixel, "superpixel has fewer than three pixels");
  }
  double mx = 0.0, my = 0.0;
  for (const PixelCoord& p : members) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(members.size());
  my /= static_cast<double>(members.size());

  std::vector<PixelCoord> candidates;
  candidates.reserve(members.size());
  for (const PixelCoord& p : members) {
    if (!usable || usable(p.x, p.y)) candidates.push_back(p);
  }
  if (candidates.size() < 3) {
    throw Error(ErrorCode::kDegenerateSuperpixel, "superpixel has fewer than three usable pixels");
  }

  AnchorTriple t;
  double best = std::numeric_limits<double>::infinity();
  for (const PixelCoord& p : candidates) {
    const double d = squared_distance(p.x, p.y, mx, my);
    if (d < best) {
      best = d;
      t.anchor = p;
    }
  }
  best = -1.0;
  for (const PixelCoord& p : candidates) {
    const double d = squared_distance(p.x, p.y, t.anchor.x, t.anchor.y);
    if (d > best) {
      best = d;
      t.p1 = p;
    }
  }
  best = -1.0;
  for (const PixelCoord& p : candidates) {
    const AnchorTriple trial{t.anchor, t.p1, p};
    const double a = trial.area();
    if (a > best) {
      best = a;
      t.p2 = p;
    }
  }
  if (t.area() < kMinTriangleArea) {
    throw Error(ErrorCode::kDegenerateSuperpixel, "superpixel pixels are collinear");
  }
  return t;
}

AnchorTriple select_anchor_triple(const Segmentation& seg, int superpixel_id,
                                  const PixelFilter& usable) {
  if (superpixel_id < 0 || superpixel_id >= seg.count) {
    throw Error(ErrorCode::kDomain, "superpixel id out of range");
  }
  std::vector<PixelCoord> members;
  for (int y = 0; y < seg.height; ++y) {
    for (int x = 0; x < seg.width; ++x) {
      if (seg.label(x, y) == superpixel_id) members.push_back({x, y});
    }
  }
  return select_anchor_triple(members, usable);
}

RigidityGraph build_knn_graph(const std::vector<AnchorTriple>& triples, int k,
                              std::optional<double> tau) {
  if (k < 1) throw Error(ErrorCode::kDomain, "k must be at least 1");
  if (tau && !(*tau > 0.0)) throw Error(ErrorCode::kDomain, "tau must be positive");
  const int n = static_cast<int>(triples.size());
  RigidityGraph g;
  g.k = k;
  if (k > n - 1) {
    g.k = std::max(0, n - 1);
    g.warnings.push_back("k=" + std::to_string(k) + " clamped to " + std::to_string(g.k) +
                         " for " + std::to_string(n) + " superpixels");
  }
  g.neighbors.resize(n);
  std::vector<std::vector<double>> dist(n);
  std::vector<std::pair<double, int>> cand;
  double total = 0.0;
  std::size_t terms = 0;
  for (int i = 0; i < n; ++i) {
    cand.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back(std::sqrt(squared_distance(triples[i].anchor.x, triples[i].anchor.y,
                                                   triples[j].anchor.x, triples[j].anchor.y)),
                        j);
    }
    std::partial_sort(cand.begin(), cand.begin() + g.k, cand.end());
    for (int m = 0; m < g.k; ++m) {
      g.neighbors[i].push_back(cand[m].second);
      dist[i].push_back(cand[m].first);
      total += cand[m].first;
      ++terms;
    }
  }
  g.tau = tau ? *tau : (terms > 0 && total > 0.0 ? total / static_cast<double>(terms) : 1.0);
  g.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    for (double d : dist[i]) g.weights[i].push_back(std::exp(-d / g.tau));
  }
  return g;
}

BoundarySet boundary_pairs(const Segmentation& seg, const Image& image, double beta) {
  if (!(beta >= 0.0)) throw Error(ErrorCode::kDomain, "beta must be non-negative");
  if (image.width != seg.width || image.height != seg.height) {
    throw Error(ErrorCode::kDomain, "image and segmentation sizes differ");
  }
  BoundarySet out;
  out.beta = beta;
  auto add = [&](std::size_t a, std::size_t b) {
    const int la = seg.labels[a];
    const int lb = seg.labels[b];
    if (la == lb) return;
    out.pairs.push_back({a, b, la, lb, std::exp(-beta * image.color_distance(a, b))});
  };
  for (int y = 0; y < seg.height; ++y) {
    for (int x = 0; x < seg.width; ++x) {
      const std::size_t p = seg.index(x, y);
      if (x + 1 < seg.width) add(p, p + 1);
      if (y + 1 < seg.height) add(p, p + seg.width);
    }
  }
  return out;
}

}  // namespace arapdepth
