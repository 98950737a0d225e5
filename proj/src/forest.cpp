#include "hte/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "hte/error.hpp"
#include "hte/rng.hpp"
#include "hte/stats.hpp"

namespace hte {
namespace {

constexpr const char* kModule = "forest";

// First k entries of a uniform random permutation of `items`.
template <class T>
std::vector<T> draw_without_replacement(std::vector<T> items, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
  items.resize(k);
  return items;
}

}  // namespace

void ForestConfig::validate() const {
  if (trees == 0) throw ConfigError(kModule, "trees must be at least 1");
  if (min_leaf == 0) throw ConfigError(kModule, "min-leaf must be at least 1");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0))
    throw ConfigError(kModule, "subsample-fraction must lie in (0, 1]");
  if (!(feature_fraction > 0.0 && feature_fraction <= 1.0))
    throw ConfigError(kModule, "feature-fraction must lie in (0, 1]");
}

std::size_t forest_cluster_draw(const ForestConfig& config, std::size_t n_clusters) {
  return static_cast<std::size_t>(std::floor(config.subsample_fraction * static_cast<double>(n_clusters) + 1e-9));
}

std::size_t forest_feature_draw(const ForestConfig& config, std::size_t n_features) {
  const auto m = static_cast<std::size_t>(std::ceil(config.feature_fraction * static_cast<double>(n_features) - 1e-9));
  return std::clamp<std::size_t>(m, n_features == 0 ? 0 : 1, n_features);
}

RegressionForest fit_regression_forest(const Matrix& x, std::span<const double> y, std::span<const int> clusters,
                                       const ForestConfig& config, ExecPolicy exec) {
  config.validate();
  if (y.size() != x.rows() || clusters.size() != x.rows())
    throw ShapeError(kModule, "features, target and clusters must have the same number of rows");
  for (double v : y)
    if (!std::isfinite(v)) throw ValidationError(kModule, "target contains a non-finite value");

  std::map<int, std::vector<std::size_t>> rows_by_cluster;
  for (std::size_t r = 0; r < clusters.size(); ++r) rows_by_cluster[clusters[r]].push_back(r);
  std::vector<int> cluster_ids;
  for (const auto& [c, rows] : rows_by_cluster) cluster_ids.push_back(c);
  if (cluster_ids.size() < 4)
    throw InsufficientDataError(kModule, "a forest needs at least 4 clusters, found " + std::to_string(cluster_ids.size()));
  const std::size_t k = forest_cluster_draw(config, cluster_ids.size());
  if (k < 2) throw ConfigError(kModule, "subsample-fraction leaves fewer than 2 clusters per tree");

  std::vector<std::size_t> all_features(x.cols());
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});
  const std::size_t m = forest_feature_draw(config, x.cols());

  RegressionForest forest;
  forest.config = config;
  forest.n_features = x.cols();
  forest.trees.resize(config.trees);
  forest.audit.resize(config.trees);
  const TreeParams params{config.min_leaf, std::nullopt};

  parallel_for(config.trees, exec, [&](std::size_t h) {
    Rng rng = make_stream(config.seed, "forest-tree", h);
    auto drawn = draw_without_replacement(cluster_ids, k, rng);
    auto features = draw_without_replacement(all_features, m, rng);
    std::sort(features.begin(), features.end());

    TreeAudit a;
    const std::size_t n_split = (k + 1) / 2;
    a.split_clusters.assign(drawn.begin(), drawn.begin() + static_cast<std::ptrdiff_t>(n_split));
    a.estimation_clusters.assign(drawn.begin() + static_cast<std::ptrdiff_t>(n_split), drawn.end());
    std::sort(a.split_clusters.begin(), a.split_clusters.end());
    std::sort(a.estimation_clusters.begin(), a.estimation_clusters.end());
    std::vector<std::size_t> split_rows, est_rows;
    for (int c : a.split_clusters) {
      const auto& r = rows_by_cluster.at(c);
      split_rows.insert(split_rows.end(), r.begin(), r.end());
    }
    for (int c : a.estimation_clusters) {
      const auto& r = rows_by_cluster.at(c);
      est_rows.insert(est_rows.end(), r.begin(), r.end());
    }
    std::sort(split_rows.begin(), split_rows.end());
    std::sort(est_rows.begin(), est_rows.end());
    forest.trees[h] = grow_honest_tree(x, y, split_rows, est_rows, features, params);
    a.features = std::move(features);
    forest.audit[h] = std::move(a);
  });
  return forest;
}

std::vector<double> predict_forest(const RegressionForest& forest, const Matrix& x, ExecPolicy exec) {
  if (forest.trees.empty()) throw ShapeError(kModule, "forest has no trees");
  if (x.cols() != forest.n_features)
    throw ShapeError(kModule, "expected " + std::to_string(forest.n_features) + " feature columns, got " +
                                  std::to_string(x.cols()));
  std::vector<double> out(x.rows());
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (x.rows() + kBlock - 1) / kBlock;
  parallel_for(blocks, exec, [&](std::size_t b) {
    std::vector<double> per_tree(forest.trees.size());
    const std::size_t end = std::min(x.rows(), (b + 1) * kBlock);
    for (std::size_t r = b * kBlock; r < end; ++r) {
      const auto row = x.row(r);
      for (std::size_t h = 0; h < forest.trees.size(); ++h) per_tree[h] = forest.trees[h].predict(row);
      out[r] = stats::mean(per_tree);
    }
  });
  return out;
}

}  // namespace hte
