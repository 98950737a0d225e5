#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hte/data.hpp"
#include "hte/forest.hpp"
#include "hte/inference.hpp"
#include "hte/parallel.hpp"
#include "hte/score.hpp"
#include "hte/tree.hpp"

namespace hte {

// Groups of the local-constant model: strata of one covariate crossed with
// periods. The three strata are "zero" (value <= 0), "low" (positive and at
// most the median of the positive values) and "high" (above that median).
struct PartitionSpec {
  std::optional<std::size_t> stratify_column;
  bool by_period = true;
};

struct LocalConstantGroup {
  int stratum = 0;
  int period = 0;
  double gamma = 0.0;  // control mean
  double delta = 0.0;  // treated mean minus control mean
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
};

class LocalConstantModel {
 public:
  LocalConstantModel() = default;
  LocalConstantModel(PartitionSpec spec, double positive_median, std::vector<LocalConstantGroup> groups);

  // Stratum and period key of a row.
  int stratum_of(const PanelDataset& ds, std::size_t row) const;
  // Group of a row; throws DegenerateError for a group absent from the fit.
  const LocalConstantGroup& group_of(const PanelDataset& ds, std::size_t row) const;
  std::vector<double> predict(const PanelDataset& ds) const;

  const PartitionSpec& spec() const noexcept { return spec_; }
  double positive_median() const noexcept { return positive_median_; }
  const std::vector<LocalConstantGroup>& groups() const noexcept { return groups_; }

 private:
  PartitionSpec spec_;
  double positive_median_ = 0.0;
  std::vector<LocalConstantGroup> groups_;  // ascending (stratum, period)
};

// Fully interacted (saturated) model: per group, the control mean and the
// treated-minus-control difference. Throws DegenerateError naming (k, t)
// when a group lacks one arm.
LocalConstantModel fit_local_constant(const PanelDataset& ds, const PartitionSpec& spec);

struct CateTreeConfig {
  // Candidate minimum leaf sizes; the root-only tree is always a candidate.
  std::vector<std::size_t> min_leaf_grid{50, 100, 200, 400, 800, 1600};
  // Skips cross-validation when set.
  std::optional<std::size_t> fixed_min_leaf;
  std::size_t cv_folds = 10;
  std::uint64_t seed = 0;
};

struct CvPoint {
  std::size_t min_leaf = 0;  // 0 is the root-only tree
  double mse = 0.0;
};

struct CateTreeFit {
  RegressionTree tree;
  std::size_t selected_min_leaf = 0;  // 0 is the root-only tree
  std::vector<CvPoint> cv;
  std::vector<int> training_clusters;
  std::vector<int> estimation_clusters;
};

// Honest tree on the score: clusters split 50/50 into a training half, which
// chooses the splits and the minimum leaf size by cluster-level K-fold
// cross-validation, and an estimation half, which sets the leaf means. The
// candidates are compared from the simplest (root-only, then the largest
// minimum leaf) and a candidate wins only with a strictly smaller MSE.
CateTreeFit fit_cate_tree(const Matrix& features, const ScoreVector& score, const CateTreeConfig& config,
                          ExecPolicy exec = {});

RegressionForest fit_cate_forest(const Matrix& features, const ScoreVector& score, const ForestConfig& config,
                                 ExecPolicy exec = {});

struct CateEstimates {
  std::vector<double> values;
  std::string estimator;
  std::string covariate_set;
};

std::vector<double> predict_cate(const RegressionTree& tree, const Matrix& features);
std::vector<double> predict_cate(const RegressionForest& forest, const Matrix& features, ExecPolicy exec = {});

struct SignShares {
  double pct_positive = 0.0;  // zeros count as positive
  double pct_negative = 0.0;
};

SignShares sign_shares(std::span<const double> cates, std::span<const std::size_t> idx);

struct SmoothConfig {
  std::size_t grid_points = 200;
  // Upper end of the grid; the data range otherwise.
  std::optional<double> cap;
  // Cluster-bootstrap band when set; needs clusters.
  std::optional<BootstrapPlan> band;
};

struct CurvePoints {
  std::vector<double> grid;
  std::vector<double> effect;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  double bandwidth = 0.0;
};

// Silverman bandwidth 1.06 * sd * m^(-1/5); throws DegenerateError when zero.
double silverman_bandwidth(std::span<const double> x);

// Gaussian-kernel Nadaraya-Watson regression of the CATEs on a running
// variable over the rows in idx, on an even grid spanning their range. The
// result does not depend on the order of the rows. The optional band
// resamples clusters of the idx rows and recomputes the curve on the same
// grid; it is widened where needed to contain the point estimate.
CurvePoints smooth_cates(std::span<const double> cates, std::span<const double> running,
                         std::span<const std::size_t> idx, const SmoothConfig& config = {},
                         std::span<const int> clusters = {}, ExecPolicy exec = {});

}  // namespace hte
