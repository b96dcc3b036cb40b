#include "arapdepth/trws.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "arapdepth/error.hpp"

namespace arapdepth {

PairwiseMrf::PairwiseMrf(std::vector<int> label_counts) : label_counts_(std::move(label_counts)) {
  unary_.resize(label_counts_.size());
  for (std::size_t s = 0; s < label_counts_.size(); ++s) {
    if (label_counts_[s] < 1) throw Error(ErrorCode::kDomain, "every node needs a label");
    unary_[s].assign(static_cast<std::size_t>(label_counts_[s]), 0.0);
  }
}

void PairwiseMrf::set_unary(int node, std::vector<double> costs) {
  if (node < 0 || node >= node_count()) throw Error(ErrorCode::kDomain, "node out of range");
  if (costs.size() != static_cast<std::size_t>(labels(node))) {
    throw Error(ErrorCode::kDomain, "unary size mismatch");
  }
  unary_[node] = std::move(costs);
}

int PairwiseMrf::add_edge(int a, int b, std::vector<double> costs) {
  if (a < 0 || b < 0 || a >= node_count() || b >= node_count() || a == b) {
    throw Error(ErrorCode::kDomain, "edge endpoints out of range");
  }
  const std::size_t la = static_cast<std::size_t>(labels(a));
  const std::size_t lb = static_cast<std::size_t>(labels(b));
  if (costs.size() != la * lb) throw Error(ErrorCode::kDomain, "pairwise table size mismatch");
  if (a > b) {
    std::vector<double> t(costs.size());
    for (std::size_t i = 0; i < la; ++i) {
      for (std::size_t j = 0; j < lb; ++j) t[j * la + i] = costs[i * lb + j];
    }
    costs = std::move(t);
    std::swap(a, b);
  }
  edges_.push_back({a, b, std::move(costs)});
  return static_cast<int>(edges_.size()) - 1;
}

double PairwiseMrf::energy(std::span<const int> x) const {
  if (x.size() != label_counts_.size()) throw Error(ErrorCode::kDomain, "labeling size mismatch");
  double e = 0.0;
  for (int s = 0; s < node_count(); ++s) {
    if (x[s] < 0 || x[s] >= labels(s)) throw Error(ErrorCode::kDomain, "label out of range");
    e += unary_[s][x[s]];
  }
  for (const Edge& ed : edges_) e += ed.costs[x[ed.a] * labels(ed.b) + x[ed.b]];
  return e;
}

namespace {

class Trws {
 public:
  explicit Trws(const PairwiseMrf& mrf) : mrf_(mrf), n_(mrf.node_count()) {
    const auto& edges = mrf.edges();
    lower_.resize(n_);
    higher_.resize(n_);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      higher_[edges[e].a].push_back(static_cast<int>(e));
      lower_[edges[e].b].push_back(static_cast<int>(e));
    }
    to_b_.resize(edges.size());
    to_a_.resize(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      to_b_[e].assign(mrf.labels(edges[e].b), 0.0);
      to_a_[e].assign(mrf.labels(edges[e].a), 0.0);
    }
    weight_.resize(n_);
    for (int s = 0; s < n_; ++s) {
      const std::size_t ns = std::max({lower_[s].size(), higher_[s].size(), std::size_t{1}});
      weight_[s] = static_cast<double>(ns);
    }
    build_chains();
  }

  void forward() {
    std::vector<double> theta;
    for (int s = 0; s < n_; ++s) {
      reparam(s, theta);
      for (int e : higher_[s]) send(e, theta, true);
    }
  }

  void backward() {
    std::vector<double> theta;
    for (int s = n_ - 1; s >= 0; --s) {
      reparam(s, theta);
      for (int e : lower_[s]) send(e, theta, false);
    }
  }

  double lower_bound() const {
    const auto& edges = mrf_.edges();
    double total = 0.0;
    std::vector<double> cur, next, theta;
    for (const Chain& c : chains_) {
      reparam(c.nodes[0], theta);
      cur.resize(theta.size());
      for (std::size_t i = 0; i < theta.size(); ++i) cur[i] = theta[i] / weight_[c.nodes[0]];
      for (std::size_t k = 0; k < c.edges.size(); ++k) {
        const int e = c.edges[k];
        const auto& ed = edges[e];
        const int t = c.nodes[k + 1];
        const int la = mrf_.labels(ed.a);
        const int lb = mrf_.labels(ed.b);
        reparam(t, theta);
        next.assign(theta.size(), std::numeric_limits<double>::infinity());
        for (int i = 0; i < la; ++i) {
          for (int j = 0; j < lb; ++j) {
            const double pair = ed.costs[i * lb + j] - to_b_[e][j] - to_a_[e][i];
            const double v = cur[i] + pair;
            if (v < next[j]) next[j] = v;
          }
        }
        for (std::size_t j = 0; j < next.size(); ++j) next[j] += theta[j] / weight_[t];
        cur.swap(next);
      }
      total += *std::min_element(cur.begin(), cur.end());
    }
    return total;
  }

  std::vector<int> extract() const {
    const auto& edges = mrf_.edges();
    std::vector<int> x(n_, 0);
    std::vector<double> cost;
    for (int s = 0; s < n_; ++s) {
      cost = mrf_.unary(s);
      for (int e : lower_[s]) {
        const auto& ed = edges[e];
        const int lb = mrf_.labels(s);
        for (int j = 0; j < lb; ++j) cost[j] += ed.costs[x[ed.a] * lb + j];
      }
      for (int e : higher_[s]) {
        for (std::size_t i = 0; i < cost.size(); ++i) cost[i] += to_a_[e][i];
      }
      x[s] = static_cast<int>(std::min_element(cost.begin(), cost.end()) - cost.begin());
    }
    return x;
  }

  bool finite() const {
    for (const auto& m : to_b_) {
      for (double v : m) {
        if (!std::isfinite(v)) return false;
      }
    }
    for (const auto& m : to_a_) {
      for (double v : m) {
        if (!std::isfinite(v)) return false;
      }
    }
    return true;
  }

 private:
  struct Chain {
    std::vector<int> nodes;
    std::vector<int> edges;
  };

  // Monotonic chains covering every edge exactly once: chains arriving at a
  // node are continued along its outgoing edges in order.
  void build_chains() {
    const auto& edges = mrf_.edges();
    std::vector<int> chain_of_edge(edges.size(), -1);
    for (int s = 0; s < n_; ++s) {
      std::size_t k = 0;
      for (int e : higher_[s]) {
        int c;
        if (k < lower_[s].size()) {
          c = chain_of_edge[lower_[s][k++]];
        } else {
          c = static_cast<int>(chains_.size());
          chains_.push_back({{s}, {}});
        }
        chains_[c].edges.push_back(e);
        chains_[c].nodes.push_back(edges[e].b);
        chain_of_edge[e] = c;
      }
      if (lower_[s].empty() && higher_[s].empty()) chains_.push_back({{s}, {}});
    }
  }

  void reparam(int s, std::vector<double>& theta) const {
    theta = mrf_.unary(s);
    for (int e : lower_[s]) {
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += to_b_[e][i];
    }
    for (int e : higher_[s]) {
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += to_a_[e][i];
    }
  }

  // Message along edge e out of the endpoint whose reparameterized unary is
  // `theta` (a when `from_a`, otherwise b).
  void send(int e, const std::vector<double>& theta, bool from_a) {
    const auto& ed = mrf_.edges()[e];
    const int s = from_a ? ed.a : ed.b;
    const double gamma = 1.0 / weight_[s];
    const auto& back = from_a ? to_a_[e] : to_b_[e];
    auto& out = from_a ? to_b_[e] : to_a_[e];
    const int la = mrf_.labels(ed.a);
    const int lb = mrf_.labels(ed.b);
    std::fill(out.begin(), out.end(), std::numeric_limits<double>::infinity());
    for (int i = 0; i < la; ++i) {
      for (int j = 0; j < lb; ++j) {
        const double pair = ed.costs[i * lb + j];
        if (from_a) {
          const double v = gamma * theta[i] - back[i] + pair;
          if (v < out[j]) out[j] = v;
        } else {
          const double v = gamma * theta[j] - back[j] + pair;
          if (v < out[i]) out[i] = v;
        }
      }
    }
    const double m = *std::min_element(out.begin(), out.end());
    for (double& v : out) v -= m;
  }

  const PairwiseMrf& mrf_;
  int n_;
  std::vector<std::vector<int>> lower_;
  std::vector<std::vector<int>> higher_;
  std::vector<std::vector<double>> to_b_;
  std::vector<std::vector<double>> to_a_;
  std::vector<double> weight_;
  std::vector<Chain> chains_;
};

}  // namespace

TrwsResult solve_trws(const PairwiseMrf& mrf, const TrwsOptions& options) {
  if (options.max_passes < 1) throw Error(ErrorCode::kConfiguration, "max_passes must be positive");
  if (!(options.tolerance >= 0.0)) {
    throw Error(ErrorCode::kConfiguration, "tolerance must be non-negative");
  }
  for (int s = 0; s < mrf.node_count(); ++s) {
    for (double v : mrf.unary(s)) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kNumericalFailure, "non-finite unary cost");
    }
  }
  for (const auto& ed : mrf.edges()) {
    for (double v : ed.costs) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kNumericalFailure, "non-finite pairwise cost");
    }
  }

  TrwsResult result;
  if (mrf.node_count() == 0) return result;
  Trws solver(mrf);
  result.labels = solver.extract();
  result.energy = mrf.energy(result.labels);
  for (int pass = 1; pass <= options.max_passes; ++pass) {
    solver.forward();
    solver.backward();
    if (!solver.finite()) throw NumericalError("non-finite TRW-S message", pass);
    const double bound = solver.lower_bound();
    result.lower_bounds.push_back(bound);
    result.passes = pass;
    std::vector<int> x = solver.extract();
    const double e = mrf.energy(x);
    if (e < result.energy) {
      result.energy = e;
      result.labels = std::move(x);
    }
    const double scale = std::max(1.0, std::abs(bound));
    if (result.energy - bound <= options.tolerance * scale) break;
    if (pass > 1) {
      const double prev = result.lower_bounds[result.lower_bounds.size() - 2];
      if (std::abs(bound - prev) <= options.tolerance * scale) break;
    }
  }
  return result;
}

}  // namespace arapdepth
