#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hte/matrix.hpp"
#include "hte/parallel.hpp"
#include "hte/tree.hpp"

namespace hte {

struct ForestConfig {
  std::size_t trees = 1000;
  std::size_t min_leaf = 10;
  // Share of clusters drawn (without replacement) for each tree.
  double subsample_fraction = 0.5;
  // Share of covariates each tree may split on.
  double feature_fraction = 2.0 / 3.0;
  std::uint64_t seed = 0;

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

// Which clusters and features one tree was built from.
struct TreeAudit {
  std::vector<int> split_clusters;
  std::vector<int> estimation_clusters;
  std::vector<std::size_t> features;
};

struct RegressionForest {
  ForestConfig config;
  std::vector<RegressionTree> trees;
  std::vector<TreeAudit> audit;
  std::size_t n_features = 0;
};

// Subsampled forest of honest trees. Each tree draws
// floor(subsample_fraction * n_clusters) clusters, hands the first half of the
// draw (rounded up) to split selection and the rest to leaf estimation, and
// splits on ceil(feature_fraction * n_features) randomly chosen columns.
// Tree h uses the stream ("forest-tree", h) of config.seed, so the result does
// not depend on the worker count.
RegressionForest fit_regression_forest(const Matrix& x, std::span<const double> y, std::span<const int> clusters,
                                       const ForestConfig& config, ExecPolicy exec = {});

// Per-row mean of the tree predictions.
std::vector<double> predict_forest(const RegressionForest& forest, const Matrix& x, ExecPolicy exec = {});

// Number of clusters and features a tree uses under `config`.
std::size_t forest_cluster_draw(const ForestConfig& config, std::size_t n_clusters);
std::size_t forest_feature_draw(const ForestConfig& config, std::size_t n_features);

}  // namespace hte
