#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "arapdepth/error.hpp"
#include "arapdepth/refinement.hpp"
#include "arapdepth/trws.hpp"

using namespace arapdepth;

namespace {

/// Exhaustive minimum over all labelings (the oracle for small instances).
std::pair<double, std::vector<int>> brute_force(const PairwiseMrf& mrf) {
  const int n = mrf.node_count();
  std::vector<int> x(n, 0), best;
  double best_e = std::numeric_limits<double>::infinity();
  for (;;) {
    const double e = mrf.energy(x);
    if (e < best_e) {
      best_e = e;
      best = x;
    }
    int i = 0;
    while (i < n && ++x[i] == mrf.labels(i)) x[i++] = 0;
    if (i == n) break;
  }
  return {best_e, best};
}

std::vector<double> random_costs(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> c(n);
  for (double& v : c) v = u(rng);
  return c;
}

PairwiseMrf random_tree(std::mt19937_64& rng, int nodes, int max_labels) {
  std::vector<int> counts(nodes);
  for (int& c : counts) c = 1 + static_cast<int>(rng() % max_labels);
  // Random node order so that tree edges do not follow the index order.
  std::vector<int> perm(nodes);
  for (int i = 0; i < nodes; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  PairwiseMrf mrf(counts);
  for (int s = 0; s < nodes; ++s) mrf.set_unary(s, random_costs(rng, counts[s]));
  for (int i = 1; i < nodes; ++i) {
    const int a = perm[i];
    const int b = perm[rng() % i];
    mrf.add_edge(a, b, random_costs(rng, static_cast<std::size_t>(counts[a]) * counts[b]));
  }
  return mrf;
}

}  // namespace

TEST(PairwiseMrfTest, EnergyAndTransposedEdges) {
  PairwiseMrf mrf({2, 3});
  mrf.set_unary(0, {1.0, 2.0});
  mrf.set_unary(1, {0.0, 0.5, 0.25});
  // Given as (node 1, node 0): rows are labels of node 1.
  mrf.add_edge(1, 0, {10, 20, 30, 40, 50, 60});
  ASSERT_EQ(mrf.edges().size(), 1u);
  EXPECT_EQ(mrf.edges()[0].a, 0);
  EXPECT_EQ(mrf.edges()[0].b, 1);
  const std::vector<int> x{1, 2};
  EXPECT_DOUBLE_EQ(mrf.energy(x), 2.0 + 0.25 + 60.0);
  const std::vector<int> y{0, 1};
  EXPECT_DOUBLE_EQ(mrf.energy(y), 1.0 + 0.5 + 30.0);
}

TEST(PairwiseMrfTest, RejectsBadInput) {
  PairwiseMrf mrf({2, 2});
  EXPECT_THROW(mrf.set_unary(0, {1.0}), Error);
  EXPECT_THROW(mrf.add_edge(0, 0, {0, 0, 0, 0}), Error);
  EXPECT_THROW(mrf.add_edge(0, 1, {0, 0, 0}), Error);
  EXPECT_THROW(PairwiseMrf({2, 0}), Error);
}

TEST(Trws, TwoNodesFourCases) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    PairwiseMrf mrf({2, 2});
    mrf.set_unary(0, random_costs(rng, 2));
    mrf.set_unary(1, random_costs(rng, 2));
    mrf.add_edge(0, 1, random_costs(rng, 4));
    const auto [best, labels] = brute_force(mrf);
    const TrwsResult r = solve_trws(mrf);
    EXPECT_EQ(r.labels, labels);
    EXPECT_DOUBLE_EQ(r.energy, best);
  }
}

TEST(Trws, ChainMatchesDynamicProgramming) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int L = 2 + static_cast<int>(rng() % 4);
    PairwiseMrf mrf({L, L, L});
    for (int s = 0; s < 3; ++s) mrf.set_unary(s, random_costs(rng, L));
    mrf.add_edge(0, 1, random_costs(rng, L * L));
    mrf.add_edge(1, 2, random_costs(rng, L * L));
    // Exact Viterbi along the chain.
    std::vector<double> f = mrf.unary(0);
    for (int s = 1; s < 3; ++s) {
      const auto& table = mrf.edges()[s - 1].costs;
      std::vector<double> g(L, std::numeric_limits<double>::infinity());
      for (int j = 0; j < L; ++j)
        for (int i = 0; i < L; ++i) g[j] = std::min(g[j], f[i] + table[i * L + j]);
      for (int j = 0; j < L; ++j) g[j] += mrf.unary(s)[j];
      f = g;
    }
    const double dp = *std::min_element(f.begin(), f.end());
    const TrwsResult r = solve_trws(mrf);
    EXPECT_NEAR(r.energy, dp, 1e-12);
    EXPECT_NEAR(r.lower_bounds.back(), dp, 1e-9);
  }
}

TEST(Trws, RandomTreesMatchBruteForce) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const PairwiseMrf mrf = random_tree(rng, 3 + static_cast<int>(rng() % 4), 4);
    const auto [best, labels] = brute_force(mrf);
    const TrwsResult r = solve_trws(mrf);
    EXPECT_EQ(r.labels, labels) << trial;
    EXPECT_NEAR(r.energy, best, 1e-12);
  }
}

TEST(Trws, LowerBoundMonotoneAndValidOnLoopyGraphs) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    // 2x3 grid with a diagonal: contains cycles.
    PairwiseMrf mrf(std::vector<int>(6, 3));
    for (int s = 0; s < 6; ++s) mrf.set_unary(s, random_costs(rng, 3));
    for (auto [a, b] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {3, 4}, {4, 5}, {0, 3}, {1, 4}, {2, 5}, {0, 4}}) {
      std::vector<double> c = random_costs(rng, 9);
      for (double& v : c) v *= 2.0;
      mrf.add_edge(a, b, c);
    }
    const auto [best, labels] = brute_force(mrf);
    const TrwsResult r = solve_trws(mrf, {100, 1e-9});
    ASSERT_FALSE(r.lower_bounds.empty());
    for (std::size_t p = 1; p < r.lower_bounds.size(); ++p) {
      EXPECT_GE(r.lower_bounds[p], r.lower_bounds[p - 1] - 1e-12);
    }
    EXPECT_LE(r.lower_bounds.back(), best + 1e-9);
    EXPECT_GE(r.energy, best - 1e-12);
    EXPECT_DOUBLE_EQ(r.energy, mrf.energy(r.labels));
  }
}

TEST(Trws, NonFiniteCostIsNumericalFailure) {
  PairwiseMrf mrf({2, 2});
  mrf.add_edge(0, 1, {0, 1, std::numeric_limits<double>::quiet_NaN(), 0});
  try {
    solve_trws(mrf);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumericalFailure);
  }
}

TEST(Trws, IsolatedNodesPickTheirUnaryMinimum) {
  PairwiseMrf mrf({3, 2});
  mrf.set_unary(0, {0.5, 0.1, 0.3});
  mrf.set_unary(1, {0.0, -1.0});
  const TrwsResult r = solve_trws(mrf);
  EXPECT_EQ(r.labels, (std::vector<int>{1, 1}));
  EXPECT_DOUBLE_EQ(r.lower_bounds.back(), -0.9);
}

TEST(SelectLabels, KeepsIncumbentUnlessStrictlyBetter) {
  PairwiseMrf mrf({2, 2});
  mrf.set_unary(0, {0.0, 0.0});
  mrf.set_unary(1, {0.0, 0.0});
  mrf.add_edge(0, 1, {1.0, 0.0, 0.0, 1.0});
  const std::vector<int> incumbent{0, 1};
  EXPECT_EQ(select_labels(mrf, incumbent, {}), incumbent);
  const std::vector<int> worse{0, 0};
  const auto picked = select_labels(mrf, worse, {});
  EXPECT_DOUBLE_EQ(mrf.energy(picked), 0.0);
}
