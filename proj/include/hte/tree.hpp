#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hte/matrix.hpp"

namespace hte {

// Internal nodes have feature >= 0 and route x[feature] <= threshold to
// `left`. Leaves have feature == -1 and hold `value`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  std::size_t n_training = 0;
  std::size_t n_estimation = 0;
  // Leaf received no estimation rows and carries its nearest populated
  // ancestor's estimation mean instead.
  bool fallback = false;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct TreeParams {
  // Minimum number of split-sample rows in each child.
  std::size_t min_leaf = 10;
  // Minimum number of estimation rows in each child; defaults to min_leaf.
  // Zero allows empty honest leaves, which then fall back to an ancestor.
  std::optional<std::size_t> min_estimation_leaf;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  RegressionTree(std::vector<TreeNode> nodes, std::size_t min_leaf);

  double predict(std::span<const double> x) const { return nodes_[leaf_index(x)].value; }
  std::vector<double> predict(const Matrix& x) const;
  // Index into nodes() of the leaf reached by x.
  std::size_t leaf_index(std::span<const double> x) const;

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t n_leaves() const;
  std::size_t min_leaf() const noexcept { return min_leaf_; }

  // Indented text rendering, one node per line.
  std::string to_text(const std::vector<std::string>& feature_names = {}) const;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t min_leaf_ = 0;
};

// Greedy squared-error tree. Splits are chosen on `split_rows` only; each leaf
// value is the mean of `y` over the `estimation_rows` routed to it. Only the
// columns listed in `features` are split on; node features index columns of x.
// Ties in split gain go to the lower feature index, then the lower threshold.
RegressionTree grow_honest_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> split_rows,
                                std::span<const std::size_t> estimation_rows, std::span<const std::size_t> features,
                                const TreeParams& params);

// Adaptive tree: the same rows choose the splits and the leaf means.
RegressionTree grow_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows,
                         std::span<const std::size_t> features, const TreeParams& params);

}  // namespace hte
