#include "hte/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>

#include "hte/data.hpp"
#include "hte/error.hpp"
#include "hte/stats.hpp"

namespace hte {
namespace {

constexpr const char* kModule = "tree";

// Rows of one sample, copied per candidate feature and presorted by value.
// A node owns the same [begin, end) range in every feature's order array.
struct SortedSample {
  std::vector<std::vector<double>> values;     // values[f][local]
  std::vector<std::vector<std::uint32_t>> order;  // order[f]: locals sorted by value
  std::vector<double> target;

  SortedSample(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows,
               std::span<const std::size_t> features) {
    const std::size_t n = rows.size();
    target.resize(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = y[rows[i]];
    values.assign(features.size(), std::vector<double>(n));
    order.assign(features.size(), std::vector<std::uint32_t>(n));
    for (std::size_t f = 0; f < features.size(); ++f) {
      auto& v = values[f];
      for (std::size_t i = 0; i < n; ++i) v[i] = x(rows[i], features[f]);
      auto& o = order[f];
      std::iota(o.begin(), o.end(), 0u);
      std::stable_sort(o.begin(), o.end(), [&v](std::uint32_t a, std::uint32_t b) { return v[a] < v[b]; });
    }
  }

  // Stable-partitions [begin, end) of every order array so locals with
  // values[f][local] <= threshold come first. Returns the split point.
  std::size_t partition(std::size_t begin, std::size_t end, std::size_t f, double threshold,
                        std::vector<std::uint32_t>& scratch) {
    const auto& v = values[f];
    std::size_t mid = begin;
    for (auto& o : order) {
      scratch.clear();
      std::size_t w = begin;
      for (std::size_t k = begin; k < end; ++k) {
        if (v[o[k]] <= threshold) o[w++] = o[k];
        else scratch.push_back(o[k]);
      }
      std::copy(scratch.begin(), scratch.end(), o.begin() + static_cast<std::ptrdiff_t>(w));
      mid = w;
    }
    return mid;
  }

  double range_mean(std::size_t begin, std::size_t end) const {
    std::vector<double> v;
    v.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) v.push_back(target[order[0][k]]);
    return stats::mean(v);
  }
};

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return (mid >= hi || mid < lo) ? lo : mid;
}

Split best_split(const SortedSample& s, const SortedSample& e, std::size_t sb, std::size_t se, std::size_t eb,
                 std::size_t ee, std::size_t min_leaf, std::size_t min_est, double& sse_out) {
  const std::size_t n = se - sb;
  const auto& o0 = s.order[0];
  double centre = 0.0;
  for (std::size_t k = sb; k < se; ++k) centre += s.target[o0[k]];
  centre /= static_cast<double>(n);
  double total = 0.0, sse = 0.0;
  for (std::size_t k = sb; k < se; ++k) {
    const double c = s.target[o0[k]] - centre;
    total += c;
    sse += c * c;
  }
  sse_out = sse;
  Split best;
  if (sse <= 0.0) return best;
  const double parent = total * total / static_cast<double>(n);
  const std::size_t n_est = ee - eb;

  for (std::size_t f = 0; f < s.values.size(); ++f) {
    const auto& v = s.values[f];
    const auto& o = s.order[f];
    const auto& ev = e.values[f];
    const auto& eo = e.order[f];
    double left_sum = 0.0;
    std::size_t est_left = 0;
    for (std::size_t k = sb; k + 1 < se; ++k) {
      left_sum += s.target[o[k]] - centre;
      const std::size_t n_left = k + 1 - sb;
      const double lo = v[o[k]];
      const double hi = v[o[k + 1]];
      if (lo == hi || n_left < min_leaf) continue;
      if (n - n_left < min_leaf) break;
      const double threshold = midpoint(lo, hi);
      while (eb + est_left < ee && ev[eo[eb + est_left]] <= threshold) ++est_left;
      if (est_left < min_est || n_est - est_left < min_est) continue;
      const double right_sum = total - left_sum;
      const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                          right_sum * right_sum / static_cast<double>(n - n_left) - parent;
      if (gain > best.gain) best = {true, f, threshold, gain};
    }
  }
  if (best.found && best.gain <= 1e-12 * sse) best.found = false;
  return best;
}

struct Pending {
  int node;
  int parent;
  std::size_t sb, se, eb, ee;
};

RegressionTree grow(const Matrix& x, std::span<const double> y, std::span<const std::size_t> split_rows,
                    std::span<const std::size_t> estimation_rows, std::span<const std::size_t> features,
                    const TreeParams& params) {
  if (y.size() != x.rows()) throw ShapeError(kModule, "target length does not match feature rows");
  if (split_rows.empty()) throw InsufficientDataError(kModule, "no rows to grow a tree on");
  if (estimation_rows.empty()) throw InsufficientDataError(kModule, "no estimation rows for leaf values");
  if (params.min_leaf == 0) throw ConfigError(kModule, "min_leaf must be at least 1");
  for (std::size_t r : split_rows)
    if (r >= x.rows()) throw ShapeError(kModule, "row index out of range");
  for (std::size_t r : estimation_rows)
    if (r >= x.rows()) throw ShapeError(kModule, "row index out of range");
  std::vector<std::size_t> feats(features.begin(), features.end());
  std::sort(feats.begin(), feats.end());
  feats.erase(std::unique(feats.begin(), feats.end()), feats.end());
  for (std::size_t f : feats)
    if (f >= x.cols()) throw ShapeError(kModule, "feature index out of range");

  const std::size_t min_leaf = params.min_leaf;
  const std::size_t min_est = params.min_estimation_leaf.value_or(min_leaf);
  // An empty feature list still needs one order array to carry the ranges.
  const bool no_features = feats.empty();
  std::vector<std::size_t> carrier{0};
  const std::span<const std::size_t> used = no_features ? std::span<const std::size_t>(carrier) : feats;
  if (no_features && x.cols() == 0) {
    TreeNode root;
    std::vector<double> v;
    for (std::size_t r : estimation_rows) v.push_back(y[r]);
    root.value = stats::mean(v);
    root.n_training = split_rows.size();
    root.n_estimation = estimation_rows.size();
    return RegressionTree({root}, min_leaf);
  }
  SortedSample s(x, y, split_rows, used);
  SortedSample e(x, y, estimation_rows, used);

  std::vector<TreeNode> nodes(1);
  std::vector<int> parents{-1};
  std::vector<std::pair<std::size_t, std::size_t>> est_ranges(1);
  std::vector<Pending> stack{{0, -1, 0, split_rows.size(), 0, estimation_rows.size()}};
  std::vector<std::uint32_t> scratch;
  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    TreeNode& node = nodes[static_cast<std::size_t>(p.node)];
    node.n_training = p.se - p.sb;
    node.n_estimation = p.ee - p.eb;
    est_ranges[static_cast<std::size_t>(p.node)] = {p.eb, p.ee};

    Split split;
    if (!no_features && node.n_training >= 2 * min_leaf) {
      double sse = 0.0;
      split = best_split(s, e, p.sb, p.se, p.eb, p.ee, min_leaf, min_est, sse);
    }
    if (!split.found) {
      node.feature = -1;
      continue;
    }
    const std::size_t smid = s.partition(p.sb, p.se, split.feature, split.threshold, scratch);
    const std::size_t emid = e.partition(p.eb, p.ee, split.feature, split.threshold, scratch);
    const int left = static_cast<int>(nodes.size());
    const int right = left + 1;
    node.feature = static_cast<int>(used[split.feature]);
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    nodes.resize(nodes.size() + 2);
    parents.push_back(p.node);
    parents.push_back(p.node);
    est_ranges.resize(nodes.size());
    // Right pushed first so the left subtree is numbered first.
    stack.push_back({right, p.node, smid, p.se, emid, p.ee});
    stack.push_back({left, p.node, p.sb, smid, p.eb, emid});
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    TreeNode& node = nodes[i];
    if (!node.is_leaf()) continue;
    int source = static_cast<int>(i);
    while (source >= 0 && est_ranges[static_cast<std::size_t>(source)].first ==
                              est_ranges[static_cast<std::size_t>(source)].second)
      source = parents[static_cast<std::size_t>(source)];
    const auto [b, end] = est_ranges[static_cast<std::size_t>(source)];
    node.value = e.range_mean(b, end);
    node.fallback = source != static_cast<int>(i);
  }
  return RegressionTree(std::move(nodes), min_leaf);
}

}  // namespace

RegressionTree::RegressionTree(std::vector<TreeNode> nodes, std::size_t min_leaf)
    : nodes_(std::move(nodes)), min_leaf_(min_leaf) {
  if (nodes_.empty()) throw ShapeError(kModule, "a tree needs at least one node");
}

std::size_t RegressionTree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return i;
}

std::vector<double> RegressionTree::predict(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict(x.row(r));
  return out;
}

std::size_t RegressionTree::n_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::string RegressionTree::to_text(const std::vector<std::string>& feature_names) const {
  std::ostringstream out;
  const auto name = [&](int f) {
    const auto j = static_cast<std::size_t>(f);
    return j < feature_names.size() ? feature_names[j] : "x" + std::to_string(j);
  };
  struct Item {
    std::size_t node;
    int depth;
    std::string prefix;
  };
  std::vector<Item> stack{{0, 0, ""}};
  while (!stack.empty()) {
    const Item it = stack.back();
    stack.pop_back();
    const TreeNode& n = nodes_[it.node];
    out << std::string(static_cast<std::size_t>(it.depth) * 2, ' ') << it.prefix;
    if (n.is_leaf()) {
      out << "leaf value=" << format_double(n.value) << " n_train=" << n.n_training << " n_est=" << n.n_estimation;
      if (n.fallback) out << " (fallback)";
      out << '\n';
      continue;
    }
    out << "split " << name(n.feature) << " <= " << format_double(n.threshold) << " n_train=" << n.n_training
        << " n_est=" << n.n_estimation << '\n';
    stack.push_back({static_cast<std::size_t>(n.right), it.depth + 1, "else: "});
    stack.push_back({static_cast<std::size_t>(n.left), it.depth + 1, "then: "});
  }
  return out.str();
}

RegressionTree grow_honest_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> split_rows,
                                std::span<const std::size_t> estimation_rows, std::span<const std::size_t> features,
                                const TreeParams& params) {
  return grow(x, y, split_rows, estimation_rows, features, params);
}

RegressionTree grow_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows,
                         std::span<const std::size_t> features, const TreeParams& params) {
  TreeParams adaptive = params;
  adaptive.min_estimation_leaf = params.min_leaf;
  return grow(x, y, rows, rows, features, adaptive);
}

}  // namespace hte
