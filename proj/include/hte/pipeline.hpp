#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "hte/cate.hpp"
#include "hte/data.hpp"
#include "hte/inference.hpp"
#include "hte/nuisance.hpp"
#include "hte/score.hpp"

namespace hte {

enum class Estimator { LocalConstant, Tree, Forest };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& text);

struct PipelineConfig {
  Estimator estimator = Estimator::Forest;
  ScoreKind score = ScoreKind::Orthogonal;
  std::string covariate_set = "all";
  CovariateSetDefinitions covariate_sets;
  // Adds the period as a feature of the CATE model.
  bool period_feature = false;
  NuisanceConfig nuisance;
  ForestConfig forest;
  CateTreeConfig tree;
  // Local-constant strata column (by name); none gives period groups only.
  std::optional<std::string> stratify_column;
  bool stratify_by_period = true;
  std::optional<double> p_marginal;
};

struct PipelineResult {
  CateEstimates cates;
  std::optional<NuisanceFit> nuisance;
  std::optional<ScoreVector> score;
  std::string model_summary;
};

// Nuisances, score and CATE model in one pass. With the orthogonal score the
// forest is trained once on each cross-fitting fold and the two predictions
// are averaged; the tree is trained on the second fold. The unadjusted score
// uses all rows. Every random component derives from `seed`.
PipelineResult estimate_cates(const PanelDataset& ds, const PipelineConfig& cfg, std::uint64_t seed,
                              ExecPolicy exec = {});

// Full re-estimation on each bootstrap sample, run serially inside the
// replicate.
RefitFn pipeline_refit(const PipelineConfig& cfg);

}  // namespace hte
