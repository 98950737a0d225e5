#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hte/data.hpp"
#include "hte/inference.hpp"
#include "hte/parallel.hpp"

namespace hte {

enum class DgpKind {
  // Single period: y = d x beta + x gamma + u, x ~ U(0, 1), u ~ N(0, noise_sd^2).
  Dgp1,
  // As Dgp1 with the interaction negated.
  Dgp2,
  // Seven-period earnings panel with a mass point at zero and a kinked,
  // sign-changing effect around an earnings threshold.
  Kink,
  // Single period with a mass point at zero and a constant effect plus
  // optional idiosyncratic noise.
  Shift,
};

std::string to_string(DgpKind kind);
DgpKind parse_dgp_kind(const std::string& text);

struct KinkParams {
  double threshold = 3000.0;
  std::size_t periods = 7;
  double zero_share = 0.35;
  // Effect knots (r / threshold, effect) with r the observed baseline
  // earnings x1 minus the threshold; linear between knots, flat outside.
  std::vector<std::pair<double, double>> knots{{-1.0, 800.0}, {-0.25, 0.0}, {0.0, -400.0}, {2.0, 0.0}};
  // Relative spread of the individual effect around its mean.
  double effect_spread = 0.5;
  // Outcome noise half-width as a share of the threshold.
  double noise_share = 0.1;
};

struct ShiftParams {
  double effect = 1000.0;
  double effect_sd = 0.0;
  double zero_share = 0.3;
  double scale = 6000.0;  // positive baseline outcomes ~ U(0, scale)
};

struct DgpConfig {
  DgpKind kind = DgpKind::Dgp1;
  std::size_t n = 1000;  // individuals
  double beta = 1.0;
  double gamma = 1.0;
  double noise_sd = 4.0;
  double p_treat = 0.5;
  KinkParams kink;
  ShiftParams shift;
  std::uint64_t seed = 0;

  // Throws ConfigError on invalid values, including knots that do not give
  // a positive effect for zero earners and a non-positive one above the
  // threshold.
  void validate() const;
};

struct GroundTruth {
  std::vector<double> true_cate;  // E[y1 - y0 | x] per row, after censoring
  std::vector<double> y0;
  std::vector<double> y1;
  double true_ate = 0.0;  // mean of true_cate over the rows
};

struct SimulatedData {
  PanelDataset ds;
  GroundTruth truth;
};

SimulatedData generate(const DgpConfig& cfg);

// Effect of the kinked design at r = x1 - threshold.
double kink_effect(const KinkParams& p, double r);
// E[max(0, max(0, m + e) + g (1 + v)) - max(0, m + e)] with e and v uniform,
// for baseline index m and effect g; exact.
double kink_true_cate(const KinkParams& p, double m, double g);

// OLS of y on (1, d, x, d x); coefficients in that order. Throws
// DegenerateError on a singular design.
struct OlsInteraction {
  double intercept = 0.0;
  double treatment = 0.0;
  double covariate = 0.0;
  double interaction = 0.0;
};
OlsInteraction ols_interaction(std::span<const double> x, std::span<const int> d, std::span<const double> y,
                               std::span<const std::size_t> rows);
// CATE treatment + interaction * x per row of a single-covariate dataset.
std::vector<double> ols_interaction_cate(const PanelDataset& ds);

struct MonteCarloConfig {
  std::vector<DgpKind> dgps{DgpKind::Dgp1, DgpKind::Dgp2};
  std::vector<std::size_t> sizes{500, 1000, 2000};
  std::size_t reps = 500;
  std::size_t replicates = 499;
  double beta = 1.0;
  double gamma = 1.0;
  double noise_sd = 4.0;
  double p_treat = 0.5;
  double level = 0.05;
  SupGrid grid = SupGrid::Exact;
  Ties ties = Ties::Strict;
  std::uint64_t seed = 0;
};

struct MonteCarloCell {
  DgpKind dgp = DgpKind::Dgp1;
  std::size_t n = 0;
  std::size_t reps = 0;
  double reject_plus_recentered = 0.0;
  double reject_minus_recentered = 0.0;
  double reject_plus_uncentered = 0.0;
  double reject_minus_uncentered = 0.0;
  std::size_t dropped_replicates = 0;
};

// Rejection rates of the dominance tests over repeated draws, with the OLS
// interaction model refitted on every bootstrap sample. Repetitions run in
// parallel; repetition r of (dgp, n) uses its own derived seed.
std::vector<MonteCarloCell> run_monte_carlo(const MonteCarloConfig& cfg, ExecPolicy exec = {});

}  // namespace hte
