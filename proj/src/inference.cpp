#include "hte/inference.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>

#include "hte/error.hpp"

namespace hte {
namespace {

constexpr const char* kModule = "inference";

// Largest a(z) - b(z) over minus infinity and the given evaluation points,
// walking all three sorted sequences once.
template <class Next>
Ratio walk_sup(const EDF& a, const EDF& b, Next&& next_point) {
  const auto& pa = a.points();
  const auto& pb = b.points();
  const auto na = static_cast<std::int64_t>(a.denominator());
  const auto nb = static_cast<std::int64_t>(b.denominator());
  std::size_t ia = 0, ib = 0;
  std::int64_t best = 0;
  double z = 0.0;
  while (next_point(z)) {
    while (ia < pa.size() && pa[ia] <= z) ++ia;
    while (ib < pb.size() && pb[ib] <= z) ++ib;
    const std::int64_t num = static_cast<std::int64_t>(ia) * nb - static_cast<std::int64_t>(ib) * na;
    best = std::max(best, num);
  }
  return {best, na * nb};
}

}  // namespace

void BootstrapPlan::validate() const {
  if (replicates < 1) throw ConfigError(kModule, "bootstrap needs at least one replicate");
}

ClusterIndex::ClusterIndex(std::span<const int> clusters) : n_rows_(clusters.size()) {
  std::map<int, std::vector<std::size_t>> grouped;
  for (std::size_t r = 0; r < clusters.size(); ++r) grouped[clusters[r]].push_back(r);
  ids_.reserve(grouped.size());
  rows_.reserve(grouped.size());
  for (auto& [id, rows] : grouped) {
    ids_.push_back(id);
    rows_.push_back(std::move(rows));
  }
}

Resample cluster_bootstrap_indices(const ClusterIndex& index, Rng& rng) {
  const std::size_t k = index.n_clusters();
  if (k == 0) throw InsufficientDataError(kModule, "cannot resample zero clusters");
  Resample out;
  out.rows.reserve(index.n_rows());
  out.drawn_clusters.reserve(k);
  out.draw_offsets.reserve(k + 1);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t c = pick(rng);
    const auto& rows = index.rows(c);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    out.drawn_clusters.push_back(index.ids()[c]);
    out.draw_offsets.push_back(out.rows.size());
  }
  return out;
}

Resample draw_replicate(const ClusterIndex& index, const BootstrapPlan& plan, std::size_t b) {
  Rng rng = make_stream(plan.seed, "bootstrap-draw", b);
  return cluster_bootstrap_indices(index, rng);
}

std::uint64_t replicate_seed(const BootstrapPlan& plan, std::size_t b) {
  return derive_seed(plan.seed, "bootstrap-refit", b);
}

EDF EDF::from_values(std::vector<double> values) {
  const std::size_t n = values.size();
  return from_values(std::move(values), n);
}

EDF EDF::from_values(std::vector<double> values, std::size_t denominator) {
  if (denominator == 0) throw DegenerateError(kModule, "distribution with zero denominator");
  if (values.size() > denominator) throw ValidationError(kModule, "more points than the denominator allows");
  std::sort(values.begin(), values.end());
  EDF e;
  e.points_ = std::move(values);
  e.den_ = denominator;
  return e;
}

EDF EDF::point_mass(double at) { return from_values({at}); }

std::size_t EDF::count_at_or_below(double z) const {
  return static_cast<std::size_t>(std::upper_bound(points_.begin(), points_.end(), z) - points_.begin());
}

Ratio sup_difference(const EDF& a, const EDF& b) {
  const auto& pa = a.points();
  const auto& pb = b.points();
  std::size_t ia = 0, ib = 0;
  return walk_sup(a, b, [&](double& z) {
    if (ia == pa.size() && ib == pb.size()) return false;
    if (ib == pb.size() || (ia < pa.size() && pa[ia] <= pb[ib])) z = pa[ia];
    else z = pb[ib];
    while (ia < pa.size() && pa[ia] <= z) ++ia;
    while (ib < pb.size() && pb[ib] <= z) ++ib;
    return true;
  });
}

Ratio sup_difference_on(const EDF& a, const EDF& b, std::span<const double> grid_sorted) {
  std::size_t i = 0;
  return walk_sup(a, b, [&](double& z) {
    if (i == grid_sorted.size()) return false;
    z = grid_sorted[i++];
    return true;
  });
}

DominanceStatistics dominance_statistics(std::span<const double> cates) {
  if (cates.empty()) throw InsufficientDataError(kModule, "dominance statistics of an empty sample");
  std::int64_t negative = 0, positive = 0;
  for (double c : cates) {
    negative += c < 0.0;
    positive += c > 0.0;
  }
  const auto n = static_cast<std::int64_t>(cates.size());
  return {{negative, n}, {positive, n}};
}

ReplicateStatistics replicate_statistics(std::span<const double> original_sorted,
                                         std::span<const double> replicate_cates, SupGrid grid) {
  ReplicateStatistics out;
  out.uncentered = dominance_statistics(replicate_cates);
  const EDF original = EDF::from_values(std::vector<double>(original_sorted.begin(), original_sorted.end()));
  const EDF replicate = EDF::from_values(std::vector<double>(replicate_cates.begin(), replicate_cates.end()));
  if (grid == SupGrid::Exact) {
    out.recentered.d_plus = sup_difference(replicate, original);
    out.recentered.d_minus = sup_difference(original, replicate);
  } else {
    out.recentered.d_plus = sup_difference_on(replicate, original, original.points());
    out.recentered.d_minus = sup_difference_on(original, replicate, original.points());
  }
  return out;
}

DominanceAccumulator::DominanceAccumulator(std::span<const double> original_cates, SupGrid grid, Ties ties)
    : sorted_(original_cates.begin(), original_cates.end()), grid_(grid), ties_(ties) {
  observed_ = dominance_statistics(original_cates);
  std::sort(sorted_.begin(), sorted_.end());
}

void DominanceAccumulator::add(std::span<const double> replicate_cates) {
  add(replicate_statistics(sorted_, replicate_cates, grid_));
}

void DominanceAccumulator::add(const ReplicateStatistics& s) {
  const auto exceeds = [](const Ratio& b, const Ratio& observed, bool weak) {
    return weak ? b >= observed : b > observed;
  };
  counts_[0] += exceeds(s.recentered.d_plus, observed_.d_plus, ties_ == Ties::Weak);
  counts_[1] += exceeds(s.recentered.d_minus, observed_.d_minus, ties_ != Ties::Strict);
  // The uncentered statistics tie with the observed ones whenever all CATEs
  // share a sign, so they always use the strict count.
  counts_[2] += s.uncentered.d_plus > observed_.d_plus;
  counts_[3] += s.uncentered.d_minus > observed_.d_minus;
  ++completed_;
}

DominanceResult DominanceAccumulator::result(bool recenter) const {
  DominanceResult r;
  r.d_plus = observed_.d_plus.value();
  r.d_minus = observed_.d_minus.value();
  r.n = sorted_.size();
  r.replicates = completed_;
  r.dropped = dropped_;
  r.warning = drop_warning(dropped_, completed_ + dropped_);
  if (completed_ == 0) throw DegenerateError(kModule, "every bootstrap replicate was dropped");
  const double b = static_cast<double>(completed_);
  r.p_plus_recentered = static_cast<double>(counts_[0]) / b;
  r.p_minus_recentered = static_cast<double>(counts_[1]) / b;
  r.p_plus_uncentered = static_cast<double>(counts_[2]) / b;
  r.p_minus_uncentered = static_cast<double>(counts_[3]) / b;
  r.p_plus = recenter ? r.p_plus_recentered : r.p_plus_uncentered;
  r.p_minus = recenter ? r.p_minus_recentered : r.p_minus_uncentered;
  return r;
}

RefitFn fixed_model_refit(std::vector<double> cates) {
  return [cates = std::move(cates)](const PanelDataset&, std::span<const std::size_t> source_rows, std::uint64_t) {
    std::vector<double> out(source_rows.size());
    for (std::size_t j = 0; j < source_rows.size(); ++j) out[j] = cates.at(source_rows[j]);
    return out;
  };
}

std::vector<DominanceResult> dominance_battery(std::span<const double> original_cates, const RefitFn& refit,
                                               const PanelDataset& ds,
                                               const std::vector<std::vector<std::size_t>>& subgroups,
                                               const BootstrapPlan& plan, ExecPolicy exec) {
  plan.validate();
  if (original_cates.size() != ds.size()) throw ShapeError(kModule, "CATEs are not aligned with the dataset");
  const std::size_t g = subgroups.size();
  std::vector<std::vector<char>> masks(g, std::vector<char>(ds.size(), 0));
  std::vector<DominanceAccumulator> acc;
  std::vector<std::vector<double>> sorted(g);
  for (std::size_t k = 0; k < g; ++k) {
    if (subgroups[k].empty()) throw InsufficientDataError(kModule, "subgroup " + std::to_string(k) + " is empty");
    for (std::size_t r : subgroups[k]) {
      if (r >= ds.size()) throw ShapeError(kModule, "subgroup row out of range");
      masks[k][r] = 1;
      sorted[k].push_back(original_cates[r]);
    }
    acc.emplace_back(sorted[k], plan.grid, plan.ties);
    std::sort(sorted[k].begin(), sorted[k].end());
  }

  struct Outcome {
    bool failed = false;
    std::vector<std::optional<ReplicateStatistics>> per_group;
  };
  const ClusterIndex index(ds.cluster());
  std::vector<Outcome> outcomes(plan.replicates);
  parallel_for(plan.replicates, exec, [&](std::size_t b) {
    const Resample draw = draw_replicate(index, plan, b);
    const PanelDataset sample = ds.resample(draw);
    std::vector<double> cates;
    try {
      cates = refit(sample, draw.rows, replicate_seed(plan, b));
    } catch (const Error&) {
      outcomes[b].failed = true;
      return;
    }
    if (cates.size() != sample.size()) throw ShapeError(kModule, "refit returned misaligned CATEs");
    auto& per_group = outcomes[b].per_group;
    per_group.resize(g);
    std::vector<double> values;
    for (std::size_t k = 0; k < g; ++k) {
      values.clear();
      for (std::size_t j = 0; j < draw.rows.size(); ++j)
        if (masks[k][draw.rows[j]]) values.push_back(cates[j]);
      if (!values.empty()) per_group[k] = replicate_statistics(sorted[k], values, plan.grid);
    }
  });

  std::vector<DominanceResult> results;
  for (std::size_t k = 0; k < g; ++k) {
    for (const auto& o : outcomes) {
      if (o.failed || !o.per_group[k]) acc[k].drop();
      else acc[k].add(*o.per_group[k]);
    }
    results.push_back(acc[k].result(plan.recenter));
  }
  return results;
}

DominanceResult dominance_test(std::span<const double> original_cates, const RefitFn& refit, const PanelDataset& ds,
                               std::span<const std::size_t> subgroup, const BootstrapPlan& plan, ExecPolicy exec) {
  return dominance_battery(original_cates, refit, ds, {std::vector<std::size_t>(subgroup.begin(), subgroup.end())},
                           plan, exec)
      .front();
}

BootstrapDraws bootstrap_statistics(const StatisticFn& statistic, const PanelDataset& ds, const BootstrapPlan& plan,
                                    ExecPolicy exec) {
  plan.validate();
  const ClusterIndex index(ds.cluster());
  std::vector<std::optional<std::vector<double>>> slots(plan.replicates);
  parallel_for(plan.replicates, exec, [&](std::size_t b) {
    const Resample draw = draw_replicate(index, plan, b);
    const PanelDataset sample = ds.resample(draw);
    try {
      slots[b] = statistic(sample, draw.rows, replicate_seed(plan, b));
    } catch (const Error&) {
    }
  });
  BootstrapDraws out;
  for (auto& s : slots) {
    if (s) out.draws.push_back(std::move(*s));
    else ++out.dropped;
  }
  return out;
}

stats::Interval bootstrap_ci(const std::function<double(const PanelDataset&, std::span<const std::size_t>,
                                                        std::uint64_t)>& statistic,
                             const PanelDataset& ds, const BootstrapPlan& plan, ExecPolicy exec, double level) {
  const auto draws = bootstrap_statistics(
      [&](const PanelDataset& sample, std::span<const std::size_t> rows, std::uint64_t seed) {
        return std::vector<double>{statistic(sample, rows, seed)};
      },
      ds, plan, exec);
  if (draws.draws.empty()) throw DegenerateError(kModule, "every bootstrap replicate was dropped");
  std::vector<double> values;
  for (const auto& d : draws.draws) values.push_back(d.front());
  return stats::percentile_interval(std::move(values), level);
}

std::vector<stats::Interval> bootstrap_band(const StatisticFn& statistic, const PanelDataset& ds,
                                            const BootstrapPlan& plan, ExecPolicy exec, double level) {
  const auto draws = bootstrap_statistics(statistic, ds, plan, exec);
  if (draws.draws.empty()) throw DegenerateError(kModule, "every bootstrap replicate was dropped");
  const std::size_t k = draws.draws.front().size();
  std::vector<stats::Interval> out;
  out.reserve(k);
  std::vector<double> column(draws.draws.size());
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t b = 0; b < draws.draws.size(); ++b) {
      if (draws.draws[b].size() != k) throw ShapeError(kModule, "bootstrap statistic changed length");
      column[b] = draws.draws[b][j];
    }
    out.push_back(stats::percentile_interval(column, level));
  }
  return out;
}

std::string drop_warning(std::size_t dropped, std::size_t requested) {
  if (requested == 0 || dropped * 100 <= requested) return {};
  std::ostringstream out;
  out << "dropped " << dropped << " of " << requested << " bootstrap replicates";
  return out.str();
}

}  // namespace hte
