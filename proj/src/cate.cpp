#include "hte/cate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "hte/error.hpp"
#include "hte/rng.hpp"
#include "hte/stats.hpp"

namespace hte {
namespace {

constexpr const char* kModule = "cate";

template <class T>
void shuffle_with(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = 0; i + 1 < items.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
}

// Kernel regression on points sorted by (x, y). Terms whose weight relative
// to the nearest point underflows are exactly zero, so they are skipped.
std::vector<double> nadaraya_watson(const std::vector<std::pair<double, double>>& points, double h,
                                    const std::vector<double>& grid) {
  constexpr double kCutoff = 746.0;
  std::vector<double> out(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double z = grid[g];
    const auto near = std::lower_bound(points.begin(), points.end(), z,
                                       [](const std::pair<double, double>& p, double v) { return p.first < v; });
    double u_min = std::numeric_limits<double>::infinity();
    if (near != points.end()) u_min = std::min(u_min, std::abs(near->first - z) / h);
    if (near != points.begin()) u_min = std::min(u_min, std::abs(std::prev(near)->first - z) / h);
    const double base = u_min * u_min;
    double num = 0.0, den = 0.0;
    for (const auto& [x, y] : points) {
      const double u = (z - x) / h;
      const double e = 0.5 * (u * u - base);
      if (e > kCutoff) continue;
      const double w = std::exp(-e);
      num += w * y;
      den += w;
    }
    out[g] = num / den;
  }
  return out;
}

}  // namespace

LocalConstantModel::LocalConstantModel(PartitionSpec spec, double positive_median,
                                       std::vector<LocalConstantGroup> groups)
    : spec_(spec), positive_median_(positive_median), groups_(std::move(groups)) {}

int LocalConstantModel::stratum_of(const PanelDataset& ds, std::size_t row) const {
  if (!spec_.stratify_column) return 0;
  const double v = ds.covariates()(row, *spec_.stratify_column);
  if (v <= 0.0) return 0;
  return v <= positive_median_ ? 1 : 2;
}

const LocalConstantGroup& LocalConstantModel::group_of(const PanelDataset& ds, std::size_t row) const {
  const int k = stratum_of(ds, row);
  const int t = spec_.by_period ? ds.period()[row] : 0;
  const auto it = std::lower_bound(groups_.begin(), groups_.end(), std::pair{k, t},
                                   [](const LocalConstantGroup& g, const std::pair<int, int>& key) {
                                     return std::pair{g.stratum, g.period} < key;
                                   });
  if (it == groups_.end() || it->stratum != k || it->period != t)
    throw DegenerateError(kModule, "group (k=" + std::to_string(k) + ", t=" + std::to_string(t) + ") was not fitted");
  return *it;
}

std::vector<double> LocalConstantModel::predict(const PanelDataset& ds) const {
  if (spec_.stratify_column && *spec_.stratify_column >= ds.n_covariates())
    throw ShapeError(kModule, "stratification column out of range");
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = group_of(ds, i).delta;
  return out;
}

LocalConstantModel fit_local_constant(const PanelDataset& ds, const PartitionSpec& spec) {
  if (ds.empty()) throw InsufficientDataError(kModule, "empty dataset");
  if (spec.stratify_column && *spec.stratify_column >= ds.n_covariates())
    throw ConfigError(kModule, "stratification column out of range");
  double median = 0.0;
  if (spec.stratify_column) {
    std::vector<double> positive;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double v = ds.covariates()(i, *spec.stratify_column);
      if (v > 0.0) positive.push_back(v);
    }
    std::sort(positive.begin(), positive.end());
    if (!positive.empty()) median = stats::quantile_sorted(positive, 0.5);
  }
  const LocalConstantModel probe(spec, median, {});
  std::map<std::pair<int, int>, std::pair<std::vector<double>, std::vector<double>>> cells;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int k = probe.stratum_of(ds, i);
    const int t = spec.by_period ? ds.period()[i] : 0;
    auto& cell = cells[{k, t}];
    (ds.treatment()[i] ? cell.first : cell.second).push_back(ds.outcome()[i]);
  }
  std::vector<LocalConstantGroup> groups;
  for (const auto& [key, cell] : cells) {
    const auto& [treated, control] = cell;
    if (treated.empty() || control.empty())
      throw DegenerateError(kModule, "group (k=" + std::to_string(key.first) + ", t=" + std::to_string(key.second) +
                                         ") has no " + (treated.empty() ? "treated" : "control") + " rows");
    LocalConstantGroup g;
    g.stratum = key.first;
    g.period = key.second;
    g.gamma = stats::mean(control);
    g.delta = stats::mean(treated) - g.gamma;
    g.n_treated = treated.size();
    g.n_control = control.size();
    groups.push_back(g);
  }
  return LocalConstantModel(spec, median, std::move(groups));
}

CateTreeFit fit_cate_tree(const Matrix& features, const ScoreVector& score, const CateTreeConfig& config,
                          ExecPolicy exec) {
  if (score.values.size() != features.rows() || score.clusters.size() != features.rows())
    throw ShapeError(kModule, "features and score are not aligned");
  if (config.cv_folds < 2 && !config.fixed_min_leaf) throw ConfigError(kModule, "cross-validation needs 2 folds");
  for (std::size_t c : config.min_leaf_grid)
    if (c == 0) throw ConfigError(kModule, "min-leaf grid entries must be positive");
  if (config.fixed_min_leaf && *config.fixed_min_leaf == 0) throw ConfigError(kModule, "min-leaf must be positive");
  const ClusterIndex index(score.clusters);
  const std::size_t k = index.n_clusters();
  if (k < 4) throw InsufficientDataError(kModule, "a CATE tree needs at least 4 clusters, found " + std::to_string(k));

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng honesty = make_stream(config.seed, "cate-tree-honesty");
  shuffle_with(order, honesty);
  const std::size_t n_train = (k + 1) / 2;
  CateTreeFit fit;
  std::vector<std::size_t> train_rows, est_rows;
  std::vector<std::size_t> train_clusters(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  for (std::size_t i = 0; i < k; ++i) {
    const auto& rows = index.rows(order[i]);
    auto& dest = i < n_train ? train_rows : est_rows;
    dest.insert(dest.end(), rows.begin(), rows.end());
    (i < n_train ? fit.training_clusters : fit.estimation_clusters).push_back(index.ids()[order[i]]);
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(est_rows.begin(), est_rows.end());
  std::sort(fit.training_clusters.begin(), fit.training_clusters.end());
  std::sort(fit.estimation_clusters.begin(), fit.estimation_clusters.end());

  std::vector<std::size_t> all_features(features.cols());
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});
  const auto& y = score.values;

  std::size_t chosen = 0;
  if (config.fixed_min_leaf) {
    chosen = *config.fixed_min_leaf;
  } else {
    Rng cv_rng = make_stream(config.seed, "cate-tree-cv");
    shuffle_with(train_clusters, cv_rng);
    const std::size_t folds = std::min(config.cv_folds, train_clusters.size());
    std::vector<int> row_fold(features.rows(), -1);
    for (std::size_t i = 0; i < train_clusters.size(); ++i)
      for (std::size_t r : index.rows(train_clusters[i])) row_fold[r] = static_cast<int>(i % folds);

    std::vector<std::size_t> candidates{0};
    std::vector<std::size_t> grid = config.min_leaf_grid;
    std::sort(grid.begin(), grid.end(), std::greater<>());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    candidates.insert(candidates.end(), grid.begin(), grid.end());

    std::vector<double> sse(candidates.size() * folds, 0.0);
    parallel_for(sse.size(), exec, [&](std::size_t task) {
      const std::size_t c = candidates[task / folds];
      const int v = static_cast<int>(task % folds);
      std::vector<std::size_t> fit_rows, held_out;
      for (std::size_t r : train_rows) (row_fold[r] == v ? held_out : fit_rows).push_back(r);
      double total = 0.0;
      if (c == 0) {
        std::vector<double> t;
        for (std::size_t r : fit_rows) t.push_back(y[r]);
        const double m = stats::mean(t);
        for (std::size_t r : held_out) total += (y[r] - m) * (y[r] - m);
      } else {
        const auto tree = grow_tree(features, y, fit_rows, all_features, TreeParams{c, std::nullopt});
        for (std::size_t r : held_out) {
          const double e = y[r] - tree.predict(features.row(r));
          total += e * e;
        }
      }
      sse[task] = total;
    });
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      double total = 0.0;
      for (std::size_t v = 0; v < folds; ++v) total += sse[i * folds + v];
      const double mse = total / static_cast<double>(train_rows.size());
      fit.cv.push_back({candidates[i], mse});
      if (mse < best) {
        best = mse;
        chosen = candidates[i];
      }
    }
  }
  fit.selected_min_leaf = chosen;
  const std::size_t leaf = chosen == 0 ? std::max<std::size_t>(1, train_rows.size()) : chosen;
  fit.tree = grow_honest_tree(features, y, train_rows, est_rows, all_features, TreeParams{leaf, std::nullopt});
  return fit;
}

RegressionForest fit_cate_forest(const Matrix& features, const ScoreVector& score, const ForestConfig& config,
                                 ExecPolicy exec) {
  if (score.values.size() != features.rows() || score.clusters.size() != features.rows())
    throw ShapeError(kModule, "features and score are not aligned");
  return fit_regression_forest(features, score.values, score.clusters, config, exec);
}

std::vector<double> predict_cate(const RegressionTree& tree, const Matrix& features) { return tree.predict(features); }

std::vector<double> predict_cate(const RegressionForest& forest, const Matrix& features, ExecPolicy exec) {
  return predict_forest(forest, features, exec);
}

SignShares sign_shares(std::span<const double> cates, std::span<const std::size_t> idx) {
  if (idx.empty()) throw InsufficientDataError(kModule, "sign shares of an empty index set");
  std::size_t negative = 0;
  for (std::size_t i : idx) {
    if (i >= cates.size()) throw ShapeError(kModule, "index out of range");
    negative += cates[i] < 0.0;
  }
  SignShares s;
  s.pct_negative = 100.0 * static_cast<double>(negative) / static_cast<double>(idx.size());
  s.pct_positive = 100.0 - s.pct_negative;
  return s;
}

double silverman_bandwidth(std::span<const double> x) {
  const double h = 1.06 * stats::sample_sd(x) * std::pow(static_cast<double>(x.size()), -0.2);
  if (!(h > 0.0)) throw DegenerateError(kModule, "zero bandwidth: the running variable is constant");
  return h;
}

CurvePoints smooth_cates(std::span<const double> cates, std::span<const double> running,
                         std::span<const std::size_t> idx, const SmoothConfig& config, std::span<const int> clusters,
                         ExecPolicy exec) {
  if (idx.empty()) throw InsufficientDataError(kModule, "smoothing needs at least one row");
  if (cates.size() != running.size()) throw ShapeError(kModule, "CATEs and running variable are not aligned");
  if (config.grid_points == 0) throw ConfigError(kModule, "grid needs at least one point");
  std::vector<std::pair<double, double>> points;
  points.reserve(idx.size());
  for (std::size_t i : idx) {
    if (i >= cates.size()) throw ShapeError(kModule, "index out of range");
    if (!std::isfinite(running[i]) || !std::isfinite(cates[i]))
      throw ValidationError(kModule, "non-finite value at row " + std::to_string(i));
    points.emplace_back(running[i], cates[i]);
  }
  std::sort(points.begin(), points.end());
  const auto bandwidth_of = [](const std::vector<std::pair<double, double>>& pts) {
    std::vector<double> x(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) x[i] = pts[i].first;
    return silverman_bandwidth(x);
  };

  CurvePoints curve;
  curve.bandwidth = bandwidth_of(points);
  const double lo = points.front().first;
  const double hi = config.cap ? std::min(*config.cap, points.back().first) : points.back().first;
  if (hi < lo) throw ConfigError(kModule, "curve cap lies below the smallest running value");
  const std::size_t g = config.grid_points;
  curve.grid.resize(g);
  for (std::size_t j = 0; j < g; ++j)
    curve.grid[j] = g == 1 ? lo : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(g - 1);
  if (g > 1) curve.grid.back() = hi;
  curve.effect = nadaraya_watson(points, curve.bandwidth, curve.grid);

  if (!config.band) {
    curve.ci_low = curve.effect;
    curve.ci_high = curve.effect;
    return curve;
  }
  if (clusters.size() != cates.size()) throw ShapeError(kModule, "a band needs one cluster per row");
  const BootstrapPlan& plan = *config.band;
  plan.validate();
  std::vector<int> idx_clusters;
  for (std::size_t i : idx) idx_clusters.push_back(clusters[i]);
  const ClusterIndex index(idx_clusters);
  std::vector<std::optional<std::vector<double>>> draws(plan.replicates);
  parallel_for(plan.replicates, exec, [&](std::size_t b) {
    const Resample r = draw_replicate(index, plan, b);
    std::vector<std::pair<double, double>> pts;
    pts.reserve(r.rows.size());
    for (std::size_t j : r.rows) pts.emplace_back(running[idx[j]], cates[idx[j]]);
    std::sort(pts.begin(), pts.end());
    try {
      draws[b] = nadaraya_watson(pts, bandwidth_of(pts), curve.grid);
    } catch (const DegenerateError&) {
    }
  });
  std::vector<std::vector<double>> columns(g);
  for (const auto& d : draws)
    if (d)
      for (std::size_t j = 0; j < g; ++j) columns[j].push_back((*d)[j]);
  if (columns.front().empty()) throw DegenerateError(kModule, "every band replicate was degenerate");
  curve.ci_low.resize(g);
  curve.ci_high.resize(g);
  for (std::size_t j = 0; j < g; ++j) {
    const auto ci = stats::percentile_interval(std::move(columns[j]), 0.95);
    curve.ci_low[j] = std::min(ci.low, curve.effect[j]);
    curve.ci_high[j] = std::max(ci.high, curve.effect[j]);
  }
  return curve;
}

}  // namespace hte
