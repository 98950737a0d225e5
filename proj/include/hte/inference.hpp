#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hte/data.hpp"
#include "hte/parallel.hpp"
#include "hte/rng.hpp"
#include "hte/stats.hpp"

namespace hte {

// Points at which the suprema of the dominance statistics are taken.
enum class SupGrid {
  // Every point where either step function jumps, plus minus infinity.
  // Exact for step functions.
  Exact,
  // Only the original estimated CATEs, plus minus infinity.
  SamplePoints,
};

// How a re-centered replicate statistic equal to the observed one is counted
// in the p-value of a dominance test. Uncentered statistics always use the
// strict count.
enum class Ties {
  // 1{D_b > D}: ties are not exceedances.
  Strict,
  // 1{D_b >= D}: ties are exceedances.
  Weak,
  // Weak for the H0- statistic, strict for the H0+ statistic.
  WeakMinus,
};

struct BootstrapPlan {
  std::size_t replicates = 1999;
  std::uint64_t seed = 0;
  bool recenter = true;
  SupGrid grid = SupGrid::Exact;
  Ties ties = Ties::Strict;

  // Throws ConfigError when replicates < 1.
  void validate() const;
};

// Exact rational num / den with den > 0, compared by cross-multiplication so
// ties between statistics computed from different sample sizes are exact.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend std::strong_ordering operator<=>(const Ratio& a, const Ratio& b) noexcept {
    const __int128 l = static_cast<__int128>(a.num) * b.den;
    const __int128 r = static_cast<__int128>(b.num) * a.den;
    return l <=> r;
  }
  friend bool operator==(const Ratio& a, const Ratio& b) noexcept { return (a <=> b) == 0; }
};

// Rows grouped by cluster, clusters in ascending id order.
class ClusterIndex {
 public:
  explicit ClusterIndex(std::span<const int> clusters);

  std::size_t n_clusters() const noexcept { return ids_.size(); }
  std::size_t n_rows() const noexcept { return n_rows_; }
  const std::vector<int>& ids() const noexcept { return ids_; }
  const std::vector<std::size_t>& rows(std::size_t k) const { return rows_[k]; }

 private:
  std::vector<int> ids_;
  std::vector<std::vector<std::size_t>> rows_;
  std::size_t n_rows_ = 0;
};

// Draws n_clusters clusters with replacement and returns all rows of every
// drawn cluster, with multiplicity, in draw order.
Resample cluster_bootstrap_indices(const ClusterIndex& index, Rng& rng);

// Draw and refit seed of replicate b: the draw uses stream
// ("bootstrap-draw", b) and the refit receives derive_seed(seed,
// "bootstrap-refit", b), so a replicate depends only on (seed, b).
Resample draw_replicate(const ClusterIndex& index, const BootstrapPlan& plan, std::size_t b);
std::uint64_t replicate_seed(const BootstrapPlan& plan, std::size_t b);

// Right-continuous empirical distribution with integer counts. The
// denominator may exceed the number of support points, which gives a
// sub-distribution with total mass below one.
class EDF {
 public:
  EDF() = default;
  static EDF from_values(std::vector<double> values);
  static EDF from_values(std::vector<double> values, std::size_t denominator);
  static EDF point_mass(double at);

  // Number of points <= z.
  std::size_t count_at_or_below(double z) const;
  Ratio at(double z) const { return {static_cast<std::int64_t>(count_at_or_below(z)), static_cast<std::int64_t>(den_)}; }
  double operator()(double z) const { return at(z).value(); }

  const std::vector<double>& points() const noexcept { return points_; }
  std::size_t denominator() const noexcept { return den_; }
  double mass() const noexcept { return static_cast<double>(points_.size()) / static_cast<double>(den_); }

 private:
  std::vector<double> points_;  // sorted, with multiplicity
  std::size_t den_ = 1;
};

// sup_z (a(z) - b(z)) over minus infinity and every jump point of either
// function; never below zero.
Ratio sup_difference(const EDF& a, const EDF& b);
// Same supremum restricted to minus infinity and the points of `grid`.
Ratio sup_difference_on(const EDF& a, const EDF& b, std::span<const double> grid_sorted);

struct DominanceStatistics {
  Ratio d_plus;   // sup_z (F(z) - 1{z >= 0}) = share of CATEs below zero
  Ratio d_minus;  // sup_z (1{z >= 0} - F(z)) = share of CATEs above zero
};

DominanceStatistics dominance_statistics(std::span<const double> cates);

// Bootstrap statistics of one replicate against the original CATEs.
// Re-centered: sup_z (F_b - F) and sup_z (F - F_b) on the chosen grid.
// Uncentered: the replicate's own dominance statistics.
struct ReplicateStatistics {
  DominanceStatistics recentered;
  DominanceStatistics uncentered;
};
ReplicateStatistics replicate_statistics(std::span<const double> original_sorted,
                                         std::span<const double> replicate_cates, SupGrid grid);

struct DominanceResult {
  double d_plus = 0.0;
  double d_minus = 0.0;
  // p-values of the variant selected by the plan.
  double p_plus = 0.0;
  double p_minus = 0.0;
  double p_plus_recentered = 0.0;
  double p_minus_recentered = 0.0;
  double p_plus_uncentered = 0.0;
  double p_minus_uncentered = 0.0;
  std::size_t n = 0;
  std::size_t replicates = 0;  // completed
  std::size_t dropped = 0;
  std::string warning;
};

// Accumulates exceedance counts 1{D_b > D}, or 1{D_b >= D} where `ties` says so.
class DominanceAccumulator {
 public:
  DominanceAccumulator(std::span<const double> original_cates, SupGrid grid, Ties ties = Ties::Strict);
  void add(std::span<const double> replicate_cates);
  void add(const ReplicateStatistics& statistics);
  void drop() { ++dropped_; }
  DominanceResult result(bool recenter) const;

 private:
  std::vector<double> sorted_;
  SupGrid grid_;
  Ties ties_;
  DominanceStatistics observed_;
  std::size_t counts_[4] = {0, 0, 0, 0};
  std::size_t completed_ = 0;
  std::size_t dropped_ = 0;
};

// Re-estimates CATEs on a bootstrap sample. `source_rows[j]` is the original
// row behind sample row j; the returned vector is aligned with the sample.
using RefitFn = std::function<std::vector<double>(const PanelDataset& sample, std::span<const std::size_t> source_rows,
                                                  std::uint64_t seed)>;

// Refit that reuses the original CATEs of the drawn rows.
RefitFn fixed_model_refit(std::vector<double> cates);

// Dominance tests for several subgroups sharing one set of replicates. Each
// replicate resamples clusters, refits once and evaluates every subgroup on
// the rows whose source row belongs to it. A replicate whose refit throws an
// hte::Error is dropped for all subgroups; one whose subgroup is empty is
// dropped for that subgroup only. p-values use completed replicates.
std::vector<DominanceResult> dominance_battery(std::span<const double> original_cates, const RefitFn& refit,
                                               const PanelDataset& ds,
                                               const std::vector<std::vector<std::size_t>>& subgroups,
                                               const BootstrapPlan& plan, ExecPolicy exec = {});

DominanceResult dominance_test(std::span<const double> original_cates, const RefitFn& refit, const PanelDataset& ds,
                               std::span<const std::size_t> subgroup, const BootstrapPlan& plan,
                               ExecPolicy exec = {});

// Statistic of a bootstrap sample (same contract as RefitFn).
using StatisticFn = std::function<std::vector<double>(const PanelDataset& sample,
                                                      std::span<const std::size_t> source_rows, std::uint64_t seed)>;

struct BootstrapDraws {
  // draws[b] is the statistic vector of completed replicate b.
  std::vector<std::vector<double>> draws;
  std::size_t dropped = 0;
};

BootstrapDraws bootstrap_statistics(const StatisticFn& statistic, const PanelDataset& ds, const BootstrapPlan& plan,
                                    ExecPolicy exec = {});

// Percentile interval of a scalar statistic.
stats::Interval bootstrap_ci(const std::function<double(const PanelDataset&, std::span<const std::size_t>,
                                                        std::uint64_t)>& statistic,
                             const PanelDataset& ds, const BootstrapPlan& plan, ExecPolicy exec = {},
                             double level = 0.95);

// Pointwise percentile intervals of a vector statistic.
std::vector<stats::Interval> bootstrap_band(const StatisticFn& statistic, const PanelDataset& ds,
                                            const BootstrapPlan& plan, ExecPolicy exec = {}, double level = 0.95);

// Warning text when more than 1% of replicates were dropped, else empty.
std::string drop_warning(std::size_t dropped, std::size_t requested);

}  // namespace hte
