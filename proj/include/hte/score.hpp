#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hte/data.hpp"
#include "hte/inference.hpp"
#include "hte/nuisance.hpp"

namespace hte {

enum class ScoreKind { Orthogonal, Unadjusted };

struct ScoreVector {
  std::vector<double> values;
  ScoreKind kind = ScoreKind::Orthogonal;
  std::vector<int> clusters;

  std::size_t size() const noexcept { return values.size(); }
};

// mu1 - mu0 + d (y - mu1) / p - (1 - d) (y - mu0) / (1 - p), per row.
double orthogonal_score_value(int d, double y, double mu1, double mu0, double p);
ScoreVector orthogonal_score(const PanelDataset& ds, const NuisanceFit& nf);

// (d - p) y / (p (1 - p)) with a constant treatment probability p; defaults
// to the treated share of the rows.
double unadjusted_score_value(int d, double y, double p);
ScoreVector unadjusted_score(const PanelDataset& ds, std::optional<double> p_marginal = std::nullopt);

struct AteEstimate {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Mean score with a cluster-bootstrap percentile interval over the score's
// clusters.
AteEstimate ate(const ScoreVector& sv, const BootstrapPlan& plan, ExecPolicy exec = {});

}  // namespace hte
