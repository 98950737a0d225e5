#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "hte/error.hpp"
#include "hte/forest.hpp"
#include "hte/stats.hpp"
#include "hte/tree.hpp"

using namespace hte;

namespace {

struct Sample {
  Matrix x;
  std::vector<double> y;
};

Sample random_sample(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 0.3);
  Sample s{Matrix(n, p), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) s.x(i, j) = u(rng);
    s.y[i] = (s.x(i, 0) > 0.5 ? 2.0 : 0.0) + s.x(i, p - 1) + z(rng);
  }
  return s;
}

std::vector<std::size_t> iota(std::size_t n, std::size_t from = 0) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), from);
  return v;
}

double sse(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double a : v) s += (a - m) * (a - m);
  return s;
}

}  // namespace

// With 20 rows and min_leaf 7 no child can split again, so the tree is one
// split; compare it with an exhaustive search over features and cut points.
TEST(Tree, SingleSplitMatchesExhaustiveSearch) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto s = random_sample(20, 3, seed);
    const auto rows = iota(20);
    const auto features = iota(3);
    const auto tree = grow_tree(s.x, s.y, rows, features, TreeParams{7, {}});
    double best = sse(s.y);
    for (std::size_t j = 0; j < 3; ++j) {
      auto order = rows;
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.x(a, j) < s.x(b, j); });
      for (std::size_t k = 7; k <= 13; ++k) {
        std::vector<double> l, r;
        for (std::size_t i = 0; i < 20; ++i) (i < k ? l : r).push_back(s.y[order[i]]);
        best = std::min(best, sse(l) + sse(r));
      }
    }
    ASSERT_EQ(tree.nodes().size(), 3u) << "seed " << seed;
    std::vector<double> l, r;
    for (std::size_t i = 0; i < 20; ++i)
      (s.x(i, tree.nodes()[0].feature) <= tree.nodes()[0].threshold ? l : r).push_back(s.y[i]);
    EXPECT_NEAR(sse(l) + sse(r), best, 1e-9) << "seed " << seed;
    EXPECT_GE(l.size(), 7u);
    EXPECT_GE(r.size(), 7u);
  }
}

TEST(Tree, HonestLeafValuesAreEstimationMeans) {
  const auto s = random_sample(400, 4, 7);
  const auto split = iota(200), est = iota(200, 200);
  const auto features = iota(4);
  const auto tree = grow_honest_tree(s.x, s.y, split, est, features, TreeParams{15, {}});
  EXPECT_GT(tree.n_leaves(), 2u);
  std::map<std::size_t, std::vector<double>> by_leaf;
  for (auto i : est) by_leaf[tree.leaf_index(s.x.row(i))].push_back(s.y[i]);
  std::size_t split_count = 0;
  for (std::size_t k = 0; k < tree.nodes().size(); ++k) {
    const auto& node = tree.nodes()[k];
    if (!node.is_leaf()) continue;
    ASSERT_TRUE(by_leaf.count(k));
    EXPECT_EQ(node.value, stats::mean(by_leaf[k]));
    EXPECT_EQ(node.n_estimation, by_leaf[k].size());
    EXPECT_GE(node.n_estimation, 15u);
    EXPECT_GE(node.n_training, 15u);
    split_count += node.n_training;
  }
  EXPECT_EQ(split_count, split.size());
}

TEST(Tree, SplitsIgnoreEstimationOutcomes) {
  auto s = random_sample(300, 3, 9);
  const auto split = iota(150), est = iota(150, 150);
  const auto features = iota(3);
  const auto a = grow_honest_tree(s.x, s.y, split, est, features, TreeParams{10, 0});
  for (auto i : est) s.y[i] = -s.y[i] * 3.0;
  const auto b = grow_honest_tree(s.x, s.y, split, est, features, TreeParams{10, 0});
  ASSERT_EQ(a.nodes().size(), b.nodes().size());
  for (std::size_t k = 0; k < a.nodes().size(); ++k) {
    EXPECT_EQ(a.nodes()[k].feature, b.nodes()[k].feature);
    EXPECT_EQ(a.nodes()[k].threshold, b.nodes()[k].threshold);
  }
}

TEST(Tree, ConstantOutcomeGivesRoot) {
  Matrix x(30, 1);
  for (std::size_t i = 0; i < 30; ++i) x(i, 0) = static_cast<double>(i);
  const std::vector<double> y(30, 4.0);
  const auto rows = iota(30);
  const std::vector<std::size_t> f{0};
  const auto tree = grow_tree(x, y, rows, f, TreeParams{2, {}});
  EXPECT_EQ(tree.n_leaves(), 1u);
  EXPECT_EQ(tree.nodes()[0].value, 4.0);
}

TEST(Tree, StepFunctionIsRecovered) {
  Matrix x(40, 1);
  std::vector<double> y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    x(i, 0) = static_cast<double>(i);
    y[i] = i < 20 ? 1.0 : 5.0;
  }
  const auto rows = iota(40);
  const std::vector<std::size_t> f{0};
  const auto tree = grow_tree(x, y, rows, f, TreeParams{5, {}});
  ASSERT_EQ(tree.n_leaves(), 2u);
  EXPECT_EQ(tree.nodes()[0].threshold, 19.5);
  const double lo[] = {3.0}, hi[] = {30.0};
  EXPECT_EQ(tree.predict(std::span<const double>(lo)), 1.0);
  EXPECT_EQ(tree.predict(std::span<const double>(hi)), 5.0);
}

TEST(Forest, PredictionIsMeanOfTrees) {
  const auto s = random_sample(300, 3, 5);
  std::vector<int> clusters(300);
  for (int i = 0; i < 300; ++i) clusters[i] = i / 3;
  ForestConfig cfg;
  cfg.trees = 40;
  cfg.min_leaf = 5;
  cfg.seed = 17;
  const auto forest = fit_regression_forest(s.x, s.y, clusters, cfg);
  const auto pred = predict_forest(forest, s.x);
  for (std::size_t i = 0; i < 300; ++i) {
    std::vector<double> per_tree;
    for (const auto& t : forest.trees) per_tree.push_back(t.predict(s.x.row(i)));
    EXPECT_EQ(pred[i], stats::mean(per_tree));
  }
}

TEST(Forest, TreesUseDisjointClusterHalves) {
  const auto s = random_sample(240, 4, 6);
  std::vector<int> clusters(240);
  for (int i = 0; i < 240; ++i) clusters[i] = i / 4;
  ForestConfig cfg;
  cfg.trees = 30;
  cfg.min_leaf = 3;
  cfg.seed = 2;
  const auto forest = fit_regression_forest(s.x, s.y, clusters, cfg);
  const std::size_t k = forest_cluster_draw(cfg, 60);
  EXPECT_EQ(k, 30u);
  EXPECT_EQ(forest_feature_draw(cfg, 4), 3u);
  for (const auto& a : forest.audit) {
    EXPECT_EQ(a.split_clusters.size(), (k + 1) / 2);
    EXPECT_EQ(a.estimation_clusters.size(), k / 2);
    std::set<int> split(a.split_clusters.begin(), a.split_clusters.end());
    EXPECT_EQ(split.size(), a.split_clusters.size());
    for (int c : a.estimation_clusters) EXPECT_FALSE(split.count(c));
    EXPECT_EQ(a.features.size(), 3u);
  }
  for (std::size_t h = 0; h < forest.trees.size(); ++h)
    for (const auto& node : forest.trees[h].nodes())
      if (!node.is_leaf()) {
        EXPECT_TRUE(std::find(forest.audit[h].features.begin(), forest.audit[h].features.end(),
                              static_cast<std::size_t>(node.feature)) != forest.audit[h].features.end());
      }
}

TEST(Forest, SameResultForAnyWorkerCount) {
  const auto s = random_sample(200, 3, 8);
  std::vector<int> clusters(200);
  std::iota(clusters.begin(), clusters.end(), 0);
  ForestConfig cfg;
  cfg.trees = 25;
  cfg.seed = 4;
  const auto a = predict_forest(fit_regression_forest(s.x, s.y, clusters, cfg, ExecPolicy{1}), s.x, ExecPolicy{1});
  const auto b = predict_forest(fit_regression_forest(s.x, s.y, clusters, cfg, ExecPolicy{8}), s.x, ExecPolicy{8});
  EXPECT_EQ(a, b);
}

TEST(Forest, ConfigValidation) {
  ForestConfig cfg;
  cfg.subsample_fraction = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.trees = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  const auto s = random_sample(3, 1, 1);
  const std::vector<int> clusters{0, 1, 2};
  EXPECT_THROW(fit_regression_forest(s.x, s.y, clusters, ForestConfig{}), InsufficientDataError);
}
