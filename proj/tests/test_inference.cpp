#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "hte/error.hpp"
#include "hte/inference.hpp"
#include "hte/rng.hpp"
#include "test_util.hpp"

using namespace hte;

namespace {

// sup_z (a(z) - b(z)) by evaluating both counts at every point and just
// below it, in exact integer arithmetic.
Ratio brute_sup(const std::vector<double>& a, std::size_t na, const std::vector<double>& b, std::size_t nb) {
  std::vector<double> z{-1e300};
  for (double v : a) z.insert(z.end(), {v, std::nextafter(v, -1e300)});
  for (double v : b) z.insert(z.end(), {v, std::nextafter(v, -1e300)});
  std::int64_t best_num = 0;
  const std::int64_t den = static_cast<std::int64_t>(na * nb);
  for (double p : z) {
    const auto ca = std::count_if(a.begin(), a.end(), [&](double v) { return v <= p; });
    const auto cb = std::count_if(b.begin(), b.end(), [&](double v) { return v <= p; });
    best_num = std::max<std::int64_t>(best_num, ca * static_cast<std::int64_t>(nb) - cb * static_cast<std::int64_t>(na));
  }
  return {best_num, den};
}

std::vector<double> draws(std::size_t n, std::uint64_t seed, double shift, bool ties) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(shift, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = ties ? std::round(z(rng) * 2.0) / 2.0 : z(rng);
  return v;
}

}  // namespace

TEST(Ratio, ComparesExactly) {
  EXPECT_EQ((Ratio{1, 3}), (Ratio{2, 6}));
  EXPECT_LT((Ratio{1, 3}), (Ratio{334, 1000}));
  EXPECT_GT((Ratio{1, 3}), (Ratio{333, 1000}));
}

TEST(EDF, CountsAndPositivePart) {
  const auto e = EDF::from_values({0, 0, 1, 2});
  EXPECT_EQ(e.count_at_or_below(-1), 0u);
  EXPECT_EQ(e.count_at_or_below(0), 2u);
  EXPECT_EQ(e(1.5), 0.75);
  const auto sub = EDF::from_values({1, 2}, 4);
  EXPECT_EQ(sub(1), 0.25);
  EXPECT_EQ(sub.mass(), 0.5);
}

TEST(Dominance, StatisticsMatchCounting) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto c = draws(50 + seed, seed, seed % 3 == 0 ? 0.0 : 0.5, seed % 2 == 0);
    if (seed % 5 == 0) c[0] = 0.0;
    const auto s = dominance_statistics(c);
    const auto n = static_cast<std::int64_t>(c.size());
    const auto below = std::count_if(c.begin(), c.end(), [](double v) { return v < 0; });
    const auto above = std::count_if(c.begin(), c.end(), [](double v) { return v > 0; });
    EXPECT_EQ(s.d_plus, (Ratio{below, n}));
    EXPECT_EQ(s.d_minus, (Ratio{above, n}));
    // Against the definitions with the step at zero.
    EXPECT_EQ(s.d_plus, brute_sup(c, c.size(), {0.0}, 1));
    EXPECT_EQ(s.d_minus, brute_sup({0.0}, 1, c, c.size()));
  }
}

TEST(Dominance, SupDifferenceMatchesBruteForce) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto a = draws(30 + seed % 7, seed, 0.0, seed % 2 == 0);
    const auto b = draws(25 + seed % 5, seed + 100, 0.3, seed % 2 == 0);
    EXPECT_EQ(sup_difference(EDF::from_values(a), EDF::from_values(b)), brute_sup(a, a.size(), b, b.size()));
    EXPECT_EQ(sup_difference(EDF::from_values(b), EDF::from_values(a)), brute_sup(b, b.size(), a, a.size()));
  }
}

TEST(Dominance, SampleGridRestrictsSupremum) {
  const std::vector<double> a{1, 2, 3}, b{1.5, 2.5, 10};
  std::vector<double> grid{1, 2, 3};
  const auto full = sup_difference(EDF::from_values(a), EDF::from_values(b));
  const auto on = sup_difference_on(EDF::from_values(a), EDF::from_values(b), grid);
  EXPECT_LE(on, full);
  EXPECT_EQ(on, (Ratio{1, 3}));
  EXPECT_EQ(full, (Ratio{1, 3}));
  const std::vector<double> only{10};
  EXPECT_EQ(sup_difference_on(EDF::from_values(a), EDF::from_values(b), only), (Ratio{0, 1}));
}

TEST(Bootstrap, ResamplesWholeClusters) {
  const auto ds = fixtures::random_panel(30, 4, 1, 5);
  const ClusterIndex index(ds.cluster());
  EXPECT_EQ(index.n_clusters(), 30u);
  BootstrapPlan plan;
  plan.seed = 9;
  for (std::size_t b = 0; b < 20; ++b) {
    const auto r = draw_replicate(index, plan, b);
    ASSERT_EQ(r.drawn_clusters.size(), 30u);
    ASSERT_EQ(r.draw_offsets.size(), 31u);
    for (std::size_t k = 0; k < 30; ++k) {
      std::vector<std::size_t> got(r.rows.begin() + r.draw_offsets[k], r.rows.begin() + r.draw_offsets[k + 1]);
      EXPECT_EQ(got, index.rows(static_cast<std::size_t>(r.drawn_clusters[k])));
    }
    const auto again = draw_replicate(index, plan, b);
    EXPECT_EQ(again.rows, r.rows);
  }
}

TEST(Bootstrap, FixedModelPValuesMatchCountingOracle) {
  const auto ds = fixtures::random_panel(60, 2, 1, 21);
  std::vector<double> cates(ds.size());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.2, 1.0);
  for (auto& c : cates) c = std::round(z(rng) * 4.0) / 4.0;
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  for (SupGrid grid : {SupGrid::Exact, SupGrid::SamplePoints})
  for (Ties ties : {Ties::Strict, Ties::Weak, Ties::WeakMinus}) {
    BootstrapPlan plan{199, 5, true, grid};
    plan.ties = ties;
    const auto res = dominance_test(cates, fixed_model_refit(cates), ds, all, plan);
    const ClusterIndex index(ds.cluster());
    auto sorted = cates;
    std::sort(sorted.begin(), sorted.end());
    const auto obs = dominance_statistics(cates);
    std::size_t cp = 0, cm = 0, up = 0, um = 0;
    for (std::size_t b = 0; b < plan.replicates; ++b) {
      const auto r = draw_replicate(index, plan, b);
      std::vector<double> rep;
      for (auto i : r.rows) rep.push_back(cates[i]);
      const EDF fb = EDF::from_values(rep), f = EDF::from_values(cates);
      Ratio sp, sm;
      if (grid == SupGrid::Exact) {
        sp = brute_sup(rep, rep.size(), cates, cates.size());
        sm = brute_sup(cates, cates.size(), rep, rep.size());
      } else {
        sp = sup_difference_on(fb, f, sorted);
        sm = sup_difference_on(f, fb, sorted);
      }
      cp += ties == Ties::Weak ? sp >= obs.d_plus : sp > obs.d_plus;
      cm += ties != Ties::Strict ? sm >= obs.d_minus : sm > obs.d_minus;
      const auto u = dominance_statistics(rep);
      up += u.d_plus > obs.d_plus;
      um += u.d_minus > obs.d_minus;
    }
    EXPECT_EQ(res.p_plus_recentered, cp / 199.0);
    EXPECT_EQ(res.p_minus_recentered, cm / 199.0);
    EXPECT_EQ(res.p_plus_uncentered, up / 199.0);
    EXPECT_EQ(res.p_minus_uncentered, um / 199.0);
    EXPECT_EQ(res.p_plus, res.p_plus_recentered);
    EXPECT_EQ(res.replicates, 199u);
  }
}

TEST(Bootstrap, BatteryIsWorkerInvariantAndDropsFailedRefits) {
  const auto ds = fixtures::random_panel(80, 2, 1, 4);
  std::vector<double> cates(ds.outcome().begin(), ds.outcome().end());
  std::vector<std::size_t> even, all;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    all.push_back(i);
    if (i % 2 == 0) even.push_back(i);
  }
  const RefitFn flaky = [&](const PanelDataset&, std::span<const std::size_t> src, std::uint64_t seed) {
    if (seed % 10 == 0) throw DegenerateError("test", "refit failed");
    std::vector<double> out;
    for (auto i : src) out.push_back(cates[i]);
    return out;
  };
  const BootstrapPlan plan{300, 8};
  const auto a = dominance_battery(cates, flaky, ds, {all, even}, plan, ExecPolicy{1});
  const auto b = dominance_battery(cates, flaky, ds, {all, even}, plan, ExecPolicy{8});
  ASSERT_EQ(a.size(), 2u);
  std::size_t failing = 0;
  for (std::size_t r = 0; r < 300; ++r) failing += replicate_seed(plan, r) % 10 == 0;
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(a[k].p_plus, b[k].p_plus);
    EXPECT_EQ(a[k].p_minus, b[k].p_minus);
    EXPECT_EQ(a[k].dropped, failing);
    EXPECT_EQ(a[k].replicates, 300 - failing);
    EXPECT_EQ(a[k].warning.empty(), failing * 100 <= 300);
  }
}

TEST(Bootstrap, DropWarningThreshold) {
  EXPECT_TRUE(drop_warning(10, 1000).empty());
  EXPECT_FALSE(drop_warning(11, 1000).empty());
}

TEST(Bootstrap, ScalarIntervalCoversMean) {
  const auto ds = fixtures::random_panel(200, 1, 1, 12);
  const auto stat = [](const PanelDataset& s, std::span<const std::size_t>, std::uint64_t) {
    double sum = 0.0;
    for (double y : s.outcome()) sum += y;
    return sum / static_cast<double>(s.size());
  };
  const auto ci = bootstrap_ci(stat, ds, BootstrapPlan{499, 3});
  const double m = stat(ds, {}, 0);
  EXPECT_LT(ci.low, m);
  EXPECT_GT(ci.high, m);
}

TEST(Rng, DerivedStreamsAreStable) {
  EXPECT_EQ(derive_seed(1, "a", 0), derive_seed(1, "a", 0));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "b", 0));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(2, "a", 0));
}
