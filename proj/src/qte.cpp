#include "hte/qte.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "hte/error.hpp"

namespace hte {
namespace {

constexpr const char* kModule = "qte";

// Positive values of one arm's distribution, sorted, with the arm size as
// denominator.
struct SubDistribution {
  std::vector<double> points;
  double n = 0.0;

  double at(std::size_t count) const { return static_cast<double>(count) / n; }
};

SubDistribution positive_sub(std::vector<double> values) {
  SubDistribution s;
  s.n = static_cast<double>(values.size());
  for (double v : values)
    if (v > 0.0) s.points.push_back(v);
  std::sort(s.points.begin(), s.points.end());
  return s;
}

// Both distributions an arm's statistic compares.
struct ArmPair {
  SubDistribution actual;
  SubDistribution simulated;
};

ArmPair arm_pair(const PanelDataset& ds, std::span<const double> cates, int arm) {
  std::vector<double> actual;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.treatment()[i] == arm) actual.push_back(ds.outcome()[i]);
  return {positive_sub(std::move(actual)), positive_sub(simulated_outcomes(ds, cates, arm))};
}

std::vector<double> pooled_points(std::initializer_list<const std::vector<double>*> sets) {
  std::vector<double> all;
  for (const auto* s : sets) all.insert(all.end(), s->begin(), s->end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

// sup_z |(a(z) - b(z)) - (c(z) - d(z))|; pass empty c and d for the plain
// statistic. Identical pairs cancel exactly.
double sup_abs(const ArmPair& now, const ArmPair* reference) {
  static const SubDistribution kEmpty{{}, 1.0};
  const SubDistribution& c = reference ? reference->actual : kEmpty;
  const SubDistribution& d = reference ? reference->simulated : kEmpty;
  const auto z = pooled_points({&now.actual.points, &now.simulated.points, &c.points, &d.points});
  std::size_t ia = 0, ib = 0, ic = 0, id = 0;
  double best = 0.0;
  for (double v : z) {
    while (ia < now.actual.points.size() && now.actual.points[ia] <= v) ++ia;
    while (ib < now.simulated.points.size() && now.simulated.points[ib] <= v) ++ib;
    while (ic < c.points.size() && c.points[ic] <= v) ++ic;
    while (id < d.points.size() && d.points[id] <= v) ++id;
    const double delta_now = now.actual.at(ia) - now.simulated.at(ib);
    const double delta_ref = c.at(ic) - d.at(id);
    best = std::max(best, std::abs(delta_now - delta_ref));
  }
  return best;
}

void require_arms(const PanelDataset& ds) {
  bool treated = false, control = false;
  for (int d : ds.treatment()) (d ? treated : control) = true;
  if (!treated || !control) throw DegenerateError(kModule, "both arms must be non-empty");
}

}  // namespace

std::vector<double> empirical_quantiles(std::span<const double> values, std::span<const double> taus) {
  if (values.empty()) throw InsufficientDataError(kModule, "quantiles of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(taus.size());
  for (double tau : taus) {
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError(kModule, "quantile levels must lie in (0, 1]");
    out.push_back(stats::quantile_sorted(sorted, tau));
  }
  return out;
}

std::vector<double> default_taus() {
  std::vector<double> taus;
  for (int k = 1; k <= 19; ++k) taus.push_back(k / 20.0);
  return taus;
}

QteCurve qte(const PanelDataset& ds, std::span<const double> taus) {
  require_arms(ds);
  std::vector<double> treated, control;
  for (std::size_t i = 0; i < ds.size(); ++i) (ds.treatment()[i] ? treated : control).push_back(ds.outcome()[i]);
  QteCurve c;
  c.taus.assign(taus.begin(), taus.end());
  c.q1 = empirical_quantiles(treated, taus);
  c.q0 = empirical_quantiles(control, taus);
  c.qte.resize(taus.size());
  for (std::size_t j = 0; j < taus.size(); ++j) c.qte[j] = c.q1[j] - c.q0[j];
  return c;
}

std::vector<stats::Interval> qte_band(const PanelDataset& ds, std::span<const double> taus, const BootstrapPlan& plan,
                                      ExecPolicy exec) {
  const std::vector<double> t(taus.begin(), taus.end());
  return bootstrap_band(
      [&t](const PanelDataset& sample, std::span<const std::size_t>, std::uint64_t) { return qte(sample, t).qte; }, ds,
      plan, exec);
}

std::vector<double> simulated_outcomes(const PanelDataset& ds, std::span<const double> cates, int arm) {
  if (cates.size() != ds.size()) throw ShapeError(kModule, "CATEs are not aligned with the dataset");
  if (arm != 0 && arm != 1) throw ConfigError(kModule, "arm must be 0 or 1");
  std::vector<double> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (arm == 1 && ds.treatment()[i] == 0) out.push_back(ds.outcome()[i] + cates[i]);
    if (arm == 0 && ds.treatment()[i] == 1) out.push_back(ds.outcome()[i] - cates[i]);
  }
  return out;
}

EDF simulated_distribution(const PanelDataset& ds, std::span<const double> cates, int arm) {
  auto values = simulated_outcomes(ds, cates, arm);
  if (values.empty()) throw DegenerateError(kModule, "the source arm is empty");
  return EDF::from_values(std::move(values));
}

EDF positive_part(std::span<const double> values) {
  if (values.empty()) throw DegenerateError(kModule, "positive part of an empty sample");
  std::vector<double> kept;
  for (double v : values)
    if (v > 0.0) kept.push_back(v);
  return EDF::from_values(std::move(kept), values.size());
}

EDF positive_part(const EDF& e) {
  std::vector<double> kept;
  for (double v : e.points())
    if (v > 0.0) kept.push_back(v);
  return EDF::from_values(std::move(kept), e.denominator());
}

KsStatistics ks_statistics(const PanelDataset& ds, std::span<const double> cates) {
  require_arms(ds);
  KsStatistics s;
  for (int arm : {1, 0}) {
    const ArmPair pair = arm_pair(ds, cates, arm);
    if (pair.actual.points.empty() || pair.simulated.points.empty())
      throw DegenerateError(kModule, std::string("empty positive part in the ") + (arm ? "treated" : "control") +
                                         " comparison");
    (arm ? s.treated : s.control) = sup_abs(pair, nullptr);
  }
  return s;
}

KsResult ks_nesting_test(const PanelDataset& ds, std::span<const double> cates, const RefitFn& refit,
                         const BootstrapPlan& plan, ExecPolicy exec) {
  plan.validate();
  const KsStatistics observed = ks_statistics(ds, cates);
  const ArmPair ref1 = arm_pair(ds, cates, 1);
  const ArmPair ref0 = arm_pair(ds, cates, 0);

  struct Draw {
    double treated, control;
  };
  const ClusterIndex index(ds.cluster());
  std::vector<std::optional<Draw>> draws(plan.replicates);
  parallel_for(plan.replicates, exec, [&](std::size_t b) {
    const Resample r = draw_replicate(index, plan, b);
    const PanelDataset sample = ds.resample(r);
    try {
      require_arms(sample);
      const auto cb = refit(sample, r.rows, replicate_seed(plan, b));
      if (cb.size() != sample.size()) throw ShapeError(kModule, "refit returned misaligned CATEs");
      draws[b] = Draw{sup_abs(arm_pair(sample, cb, 1), plan.recenter ? &ref1 : nullptr),
                      sup_abs(arm_pair(sample, cb, 0), plan.recenter ? &ref0 : nullptr)};
    } catch (const ShapeError&) {
      throw;
    } catch (const Error&) {
    }
  });

  KsResult out;
  out.ks_treated = observed.treated;
  out.ks_control = observed.control;
  out.ks_joint = observed.joint();
  std::size_t exceed[3] = {0, 0, 0};
  for (const auto& d : draws) {
    if (!d) {
      ++out.dropped;
      continue;
    }
    ++out.replicates;
    exceed[0] += d->treated > out.ks_treated;
    exceed[1] += d->control > out.ks_control;
    exceed[2] += std::max(d->treated, d->control) > out.ks_joint;
  }
  if (out.replicates == 0) throw DegenerateError(kModule, "every bootstrap replicate was dropped");
  const double b = static_cast<double>(out.replicates);
  out.p_treated = static_cast<double>(exceed[0]) / b;
  out.p_control = static_cast<double>(exceed[1]) / b;
  out.p_joint = static_cast<double>(exceed[2]) / b;
  out.warning = drop_warning(out.dropped, plan.replicates);
  return out;
}

}  // namespace hte
