#include "hte/score.hpp"

#include <cmath>

#include "hte/error.hpp"

namespace hte {
namespace {

constexpr const char* kModule = "score";

}  // namespace

double orthogonal_score_value(int d, double y, double mu1, double mu0, double p) {
  return mu1 - mu0 + d * (y - mu1) / p - (1 - d) * (y - mu0) / (1.0 - p);
}

ScoreVector orthogonal_score(const PanelDataset& ds, const NuisanceFit& nf) {
  if (nf.mu1.size() != ds.size() || nf.mu0.size() != ds.size() || nf.p.size() != ds.size())
    throw ShapeError(kModule, "nuisance predictions are not aligned with the dataset");
  ScoreVector sv;
  sv.kind = ScoreKind::Orthogonal;
  sv.clusters.assign(ds.cluster().begin(), ds.cluster().end());
  sv.values.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!(nf.p[i] > 0.0 && nf.p[i] < 1.0)) throw ValidationError(kModule, "p_hat outside (0, 1) at row " + std::to_string(i));
    sv.values[i] = orthogonal_score_value(ds.treatment()[i], ds.outcome()[i], nf.mu1[i], nf.mu0[i], nf.p[i]);
    if (!std::isfinite(sv.values[i])) throw ValidationError(kModule, "non-finite score at row " + std::to_string(i));
  }
  return sv;
}

double unadjusted_score_value(int d, double y, double p) { return (d - p) * y / (p * (1.0 - p)); }

ScoreVector unadjusted_score(const PanelDataset& ds, std::optional<double> p_marginal) {
  if (ds.empty()) throw InsufficientDataError(kModule, "empty dataset");
  double p = 0.0;
  if (p_marginal) {
    p = *p_marginal;
  } else {
    std::size_t treated = 0;
    for (int d : ds.treatment()) treated += static_cast<std::size_t>(d);
    p = static_cast<double>(treated) / static_cast<double>(ds.size());
  }
  if (!(p > 0.0 && p < 1.0)) throw ConfigError(kModule, "treatment probability must lie in (0, 1)");
  ScoreVector sv;
  sv.kind = ScoreKind::Unadjusted;
  sv.clusters.assign(ds.cluster().begin(), ds.cluster().end());
  sv.values.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) sv.values[i] = unadjusted_score_value(ds.treatment()[i], ds.outcome()[i], p);
  return sv;
}

AteEstimate ate(const ScoreVector& sv, const BootstrapPlan& plan, ExecPolicy exec) {
  plan.validate();
  if (sv.values.empty()) throw InsufficientDataError(kModule, "empty score");
  if (sv.clusters.size() != sv.values.size()) throw ShapeError(kModule, "score clusters are not aligned");
  AteEstimate out;
  out.estimate = stats::mean(sv.values);
  const ClusterIndex index(sv.clusters);
  std::vector<double> draws(plan.replicates);
  parallel_for(plan.replicates, exec, [&](std::size_t b) {
    const Resample r = draw_replicate(index, plan, b);
    std::vector<double> v(r.rows.size());
    for (std::size_t j = 0; j < r.rows.size(); ++j) v[j] = sv.values[r.rows[j]];
    draws[b] = stats::mean(v);
  });
  const auto ci = stats::percentile_interval(std::move(draws), 0.95);
  out.ci_low = ci.low;
  out.ci_high = ci.high;
  return out;
}

}  // namespace hte
