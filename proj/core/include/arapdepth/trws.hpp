#pragma once

#include <span>
#include <vector>

namespace arapdepth {

/// Discrete pairwise MRF: E(x) = sum_s U_s(x_s) + sum_(s,t) P_st(x_s, x_t).
class PairwiseMrf {
 public:
  struct Edge {
    int a = 0;                  // a < b
    int b = 0;
    std::vector<double> costs;  // row-major [label_a * labels(b) + label_b]
  };

  explicit PairwiseMrf(std::vector<int> label_counts);

  int node_count() const { return static_cast<int>(label_counts_.size()); }
  int labels(int node) const { return label_counts_[node]; }

  void set_unary(int node, std::vector<double> costs);
  const std::vector<double>& unary(int node) const { return unary_[node]; }

  /// Adds P(x_a, x_b) given row-major over (labels(a), labels(b)).
  /// Endpoints are stored in increasing order (the table is transposed if needed).
  int add_edge(int a, int b, std::vector<double> costs);
  const std::vector<Edge>& edges() const { return edges_; }

  double energy(std::span<const int> labeling) const;

 private:
  std::vector<int> label_counts_;
  std::vector<std::vector<double>> unary_;
  std::vector<Edge> edges_;
};

struct TrwsOptions {
  int max_passes = 50;
  double tolerance = 1e-6;
};

struct TrwsResult {
  std::vector<int> labels;
  double energy = 0.0;
  /// Tree-decomposition lower bound after each forward+backward pass.
  std::vector<double> lower_bounds;
  int passes = 0;
};

/// Sequential tree-reweighted message passing over the monotonic chains
/// induced by node index order. Each pass sweeps forward then backward.
/// Labels are read off in forward order from the min-marginals (earlier
/// nodes fixed, messages from later nodes); the best labeling seen over all
/// passes is returned.
TrwsResult solve_trws(const PairwiseMrf& mrf, const TrwsOptions& options = {});

}  // namespace arapdepth
