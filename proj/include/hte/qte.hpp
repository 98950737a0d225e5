#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hte/data.hpp"
#include "hte/inference.hpp"
#include "hte/parallel.hpp"
#include "hte/stats.hpp"

namespace hte {

// Type-1 quantiles: the smallest sample value whose EDF reaches tau.
std::vector<double> empirical_quantiles(std::span<const double> values, std::span<const double> taus);

// 0.05, 0.10, ..., 0.95.
std::vector<double> default_taus();

struct QteCurve {
  std::vector<double> taus;
  std::vector<double> q1;
  std::vector<double> q0;
  std::vector<double> qte;
};

// Arm-wise outcome quantiles and their differences.
QteCurve qte(const PanelDataset& ds, std::span<const double> taus);

// Pointwise cluster-bootstrap percentile intervals of the QTE curve.
std::vector<stats::Interval> qte_band(const PanelDataset& ds, std::span<const double> taus, const BootstrapPlan& plan,
                                      ExecPolicy exec = {});

// Counterfactual outcomes implied by the CATEs: y + cate over control rows
// (arm 1) or y - cate over treated rows (arm 0).
std::vector<double> simulated_outcomes(const PanelDataset& ds, std::span<const double> cates, int arm);
EDF simulated_distribution(const PanelDataset& ds, std::span<const double> cates, int arm);

// Pr(0 < Y <= y): values at or below zero are removed but still count in
// the denominator.
EDF positive_part(std::span<const double> values);
EDF positive_part(const EDF& e);

struct KsResult {
  double ks_treated = 0.0;
  double ks_control = 0.0;
  double ks_joint = 0.0;
  double p_treated = 0.0;
  double p_control = 0.0;
  double p_joint = 0.0;
  std::size_t replicates = 0;
  std::size_t dropped = 0;
  std::string warning;
};

struct KsStatistics {
  double treated = 0.0;
  double control = 0.0;
  double joint() const { return treated > control ? treated : control; }
};

// sup_y |F+(y) - F^S+(y)| for each arm over the pooled support. Throws
// DegenerateError when an arm is empty or a positive part has no mass.
KsStatistics ks_statistics(const PanelDataset& ds, std::span<const double> cates);

// Re-centered bootstrap KS tests: KS_b = sup |Delta_b - Delta| with
// Delta = F+ - F^S+, and p = share of replicates with KS_b > KS. With
// plan.recenter off, KS_b = sup |Delta_b| instead. `refit` re-estimates the
// CATEs on each bootstrap sample (fixed_model_refit keeps the original ones).
KsResult ks_nesting_test(const PanelDataset& ds, std::span<const double> cates, const RefitFn& refit,
                         const BootstrapPlan& plan, ExecPolicy exec = {});

}  // namespace hte
