#include "hte/sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "hte/error.hpp"
#include "hte/rng.hpp"
#include "hte/stats.hpp"

namespace hte {
namespace {

constexpr const char* kModule = "sim";

// Kinked design layout in threshold units: the baseline index is
// x1 - kBaselineShift plus period and group terms of at most kJitter.
constexpr double kBaselineShift = 0.3;
constexpr double kJitter = 0.075;

// Extremes of the piecewise-linear effect over [lo, hi] (F units).
std::pair<double, double> effect_range(const KinkParams& p, double lo, double hi) {
  const double f = p.threshold;
  double mn = std::min(kink_effect(p, lo * f), kink_effect(p, hi * f));
  double mx = std::max(kink_effect(p, lo * f), kink_effect(p, hi * f));
  for (const auto& [r, g] : p.knots) {
    if (r > lo && r < hi) {
      mn = std::min(mn, g);
      mx = std::max(mx, g);
    }
  }
  return {mn, mx};
}

// G(t) = integral from 0 to t of clamp(s, 0, cap) ds.
double clamped_integral(double t, double cap) {
  if (t <= 0.0) return 0.0;
  if (t <= cap) return 0.5 * t * t;
  return cap * t - 0.5 * cap * cap;
}

std::vector<std::string> numbered_keys(std::size_t n) {
  std::vector<std::string> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = std::to_string(i + 1);
  return keys;
}

SimulatedData generate_linear(const DgpConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, cfg.noise_sd);
  std::bernoulli_distribution assign(cfg.p_treat);
  const double sign = cfg.kind == DgpKind::Dgp1 ? 1.0 : -1.0;
  const std::size_t n = cfg.n;
  std::vector<int> cluster(n), period(n, 1), treatment(n);
  std::vector<double> outcome(n);
  Matrix x(n, 1);
  SimulatedData out;
  auto& t = out.truth;
  t.true_cate.resize(n);
  t.y0.resize(n);
  t.y1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = unit(rng);
    const int d = assign(rng) ? 1 : 0;
    const double u = noise(rng);
    cluster[i] = static_cast<int>(i);
    treatment[i] = d;
    x(i, 0) = xi;
    t.y0[i] = xi * cfg.gamma + u;
    t.y1[i] = t.y0[i] + sign * xi * cfg.beta;
    t.true_cate[i] = sign * xi * cfg.beta;
    outcome[i] = d ? t.y1[i] : t.y0[i];
  }
  out.ds = PanelDataset::from_columns(numbered_keys(n), cluster, cluster, period, treatment, outcome, std::move(x), {"x"});
  return out;
}

SimulatedData generate_kink(const DgpConfig& cfg, Rng& rng) {
  const KinkParams& p = cfg.kink;
  const double f = p.threshold;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution assign(cfg.p_treat);
  std::bernoulli_distribution zero(p.zero_share);
  std::bernoulli_distribution coin(0.5);
  const std::size_t rows = cfg.n * p.periods;
  std::vector<int> cluster(rows), period(rows), treatment(rows);
  std::vector<double> outcome(rows);
  Matrix x(rows, 5);
  SimulatedData out;
  auto& t = out.truth;
  t.true_cate.resize(rows);
  t.y0.resize(rows);
  t.y1.resize(rows);
  const double a = p.noise_share * f;
  std::size_t row = 0;
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const double x1 = zero(rng) ? 0.0 : 2.2 * f * unit(rng);
    const double x3 = coin(rng) ? 1.0 : 0.0;
    const double x5 = normal(rng);
    const int d = assign(rng) ? 1 : 0;
    for (std::size_t s = 0; s < p.periods; ++s, ++row) {
      const double x2 = unit(rng);
      const double x4 = unit(rng);
      const double e = a * (2.0 * unit(rng) - 1.0);
      const double v = p.effect_spread * (2.0 * unit(rng) - 1.0);
      const double m = -kBaselineShift * f + x1 + 0.1 * f * (x2 - 0.5) + 0.05 * f * (x3 - 0.5);
      const double y0 = std::max(0.0, m + e);
      const double g = kink_effect(p, x1 - f);
      const double y1 = std::max(0.0, y0 + g * (1.0 + v));
      cluster[row] = static_cast<int>(i);
      period[row] = static_cast<int>(s + 1);
      treatment[row] = d;
      x(row, 0) = x1;
      x(row, 1) = x2;
      x(row, 2) = x3;
      x(row, 3) = x4;
      x(row, 4) = x5;
      t.y0[row] = y0;
      t.y1[row] = y1;
      t.true_cate[row] = kink_true_cate(p, m, g);
      outcome[row] = d ? y1 : y0;
    }
  }
  out.ds = PanelDataset::from_columns(numbered_keys(cfg.n), cluster, cluster, period, treatment, outcome, std::move(x),
                                      {"x1", "x2", "x3", "x4", "x5"});
  return out;
}

SimulatedData generate_shift(const DgpConfig& cfg, Rng& rng) {
  const ShiftParams& p = cfg.shift;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution assign(cfg.p_treat);
  std::bernoulli_distribution zero(p.zero_share);
  const double half_width = std::sqrt(3.0) * p.effect_sd;
  const std::size_t n = cfg.n;
  std::vector<int> cluster(n), period(n, 1), treatment(n);
  std::vector<double> outcome(n);
  Matrix x(n, 1);
  SimulatedData out;
  auto& t = out.truth;
  t.true_cate.assign(n, p.effect);
  t.y0.resize(n);
  t.y1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = unit(rng);
    const int d = assign(rng) ? 1 : 0;
    const double y0 = zero(rng) ? 0.0 : p.scale * unit(rng);
    const double effect = p.effect + half_width * (2.0 * unit(rng) - 1.0);
    cluster[i] = static_cast<int>(i);
    treatment[i] = d;
    t.y0[i] = y0;
    t.y1[i] = y0 + effect;
    outcome[i] = d ? t.y1[i] : y0;
  }
  out.ds = PanelDataset::from_columns(numbered_keys(n), cluster, cluster, period, treatment, outcome, std::move(x), {"x"});
  return out;
}

}  // namespace

std::string to_string(DgpKind kind) {
  switch (kind) {
    case DgpKind::Dgp1: return "dgp1";
    case DgpKind::Dgp2: return "dgp2";
    case DgpKind::Kink: return "kink";
    case DgpKind::Shift: return "shift";
  }
  return "unknown";
}

DgpKind parse_dgp_kind(const std::string& text) {
  for (DgpKind k : {DgpKind::Dgp1, DgpKind::Dgp2, DgpKind::Kink, DgpKind::Shift})
    if (to_string(k) == text) return k;
  throw ConfigError(kModule, "unknown DGP '" + text + "' (expected dgp1, dgp2, kink or shift)");
}

void DgpConfig::validate() const {
  if (n < 2) throw ConfigError(kModule, "n must be at least 2");
  if (!(p_treat > 0.0 && p_treat < 1.0)) throw ConfigError(kModule, "p_treat must lie in (0, 1)");
  if (!std::isfinite(beta) || !std::isfinite(gamma)) throw ConfigError(kModule, "beta and gamma must be finite");
  if (kind == DgpKind::Dgp1 || kind == DgpKind::Dgp2) {
    if (!(noise_sd > 0.0)) throw ConfigError(kModule, "noise_sd must be positive");
  }
  if (kind == DgpKind::Kink) {
    const KinkParams& p = kink;
    if (!(p.threshold > 0.0)) throw ConfigError(kModule, "kink threshold must be positive");
    if (p.periods < 1) throw ConfigError(kModule, "kink periods must be at least 1");
    if (!(p.zero_share >= 0.0 && p.zero_share < 1.0)) throw ConfigError(kModule, "zero share must lie in [0, 1)");
    if (!(p.noise_share > 0.0)) throw ConfigError(kModule, "noise share must be positive");
    if (!(p.effect_spread >= 0.0 && p.effect_spread < 1.0)) throw ConfigError(kModule, "effect spread must lie in [0, 1)");
    if (p.knots.empty()) throw ConfigError(kModule, "kink needs at least one knot");
    for (std::size_t i = 1; i < p.knots.size(); ++i)
      if (!(p.knots[i].first > p.knots[i - 1].first)) throw ConfigError(kModule, "knots must be strictly increasing");
    const double s = p.noise_share + kJitter;
    const double far = 1e6;
    // Index x1 / F - 1 reachable by zero earners, by earners at or above the
    // threshold and by earners strictly between.
    if (!(effect_range(p, -far, kBaselineShift + s - 1.0).first > 0.0))
      throw ConfigError(kModule, "knots must give a strictly positive effect for zero earners");
    if (!(effect_range(p, kBaselineShift - s, far).second <= 0.0))
      throw ConfigError(kModule, "knots must give a non-positive effect above the threshold");
    const auto below = effect_range(p, -1.0, kBaselineShift + s);
    if (!(below.first < 0.0 && below.second > 0.0))
      throw ConfigError(kModule, "knots must give mixed signs below the threshold");
  }
  if (kind == DgpKind::Shift) {
    const ShiftParams& p = shift;
    if (!(p.effect_sd >= 0.0)) throw ConfigError(kModule, "effect sd must be non-negative");
    if (!(p.effect - std::sqrt(3.0) * p.effect_sd >= 0.0))
      throw ConfigError(kModule, "shift effects must stay non-negative (effect >= sqrt(3) * effect_sd)");
    if (!(p.zero_share >= 0.0 && p.zero_share < 1.0)) throw ConfigError(kModule, "zero share must lie in [0, 1)");
    if (!(p.scale > 0.0)) throw ConfigError(kModule, "scale must be positive");
  }
}

SimulatedData generate(const DgpConfig& cfg) {
  cfg.validate();
  Rng rng = make_stream(cfg.seed, "dgp-" + to_string(cfg.kind));
  SimulatedData out;
  switch (cfg.kind) {
    case DgpKind::Dgp1:
    case DgpKind::Dgp2: out = generate_linear(cfg, rng); break;
    case DgpKind::Kink: out = generate_kink(cfg, rng); break;
    case DgpKind::Shift: out = generate_shift(cfg, rng); break;
  }
  out.truth.true_ate = stats::mean(out.truth.true_cate);
  return out;
}

double kink_effect(const KinkParams& p, double r) {
  const auto& k = p.knots;
  const double u = r / p.threshold;
  if (u <= k.front().first) return k.front().second;
  if (u >= k.back().first) return k.back().second;
  const auto hi = std::upper_bound(k.begin(), k.end(), u, [](double v, const auto& knot) { return v < knot.first; });
  const auto lo = std::prev(hi);
  const double w = (u - lo->first) / (hi->first - lo->first);
  return lo->second + w * (hi->second - lo->second);
}

double kink_true_cate(const KinkParams& p, double m, double g) {
  if (g >= 0.0) return g;
  // A negative effect of size L lowers the outcome by clamp(m + e, 0, L).
  const double a = p.noise_share * p.threshold;
  const auto loss = [&](double cap) { return (clamped_integral(m + a, cap) - clamped_integral(m - a, cap)) / (2.0 * a); };
  const double l_lo = -g * (1.0 - p.effect_spread);
  const double l_hi = -g * (1.0 + p.effect_spread);
  if (l_hi == l_lo) return -loss(l_lo);
  // The loss is quadratic in the cap between the breakpoints m - a and
  // m + a, so Simpson's rule is exact on each piece.
  std::vector<double> cuts{l_lo, l_hi};
  for (double b : {m - a, m + a})
    if (b > l_lo && b < l_hi) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    total += (hi - lo) / 6.0 * (loss(lo) + 4.0 * loss(0.5 * (lo + hi)) + loss(hi));
  }
  return -total / (l_hi - l_lo);
}

OlsInteraction ols_interaction(std::span<const double> x, std::span<const int> d, std::span<const double> y,
                               std::span<const std::size_t> rows) {
  Eigen::Matrix4d xtx = Eigen::Matrix4d::Zero();
  Eigen::Vector4d xty = Eigen::Vector4d::Zero();
  for (std::size_t r : rows) {
    const double di = d[r];
    const Eigen::Vector4d z(1.0, di, x[r], di * x[r]);
    xtx.noalias() += z * z.transpose();
    xty.noalias() += z * y[r];
  }
  Eigen::FullPivLU<Eigen::Matrix4d> lu(xtx);
  lu.setThreshold(1e-12);
  if (lu.rank() < 4) throw DegenerateError(kModule, "singular OLS design (constant covariate or a missing arm)");
  const Eigen::Vector4d b = lu.solve(xty);
  return {b(0), b(1), b(2), b(3)};
}

std::vector<double> ols_interaction_cate(const PanelDataset& ds) {
  if (ds.n_covariates() != 1) throw ShapeError(kModule, "the interaction model needs exactly one covariate");
  const auto x = ds.covariates().column(0);
  std::vector<std::size_t> rows(ds.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto b = ols_interaction(x, ds.treatment(), ds.outcome(), rows);
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b.treatment + b.interaction * x[i];
  return out;
}

std::vector<MonteCarloCell> run_monte_carlo(const MonteCarloConfig& cfg, ExecPolicy exec) {
  if (cfg.reps < 1) throw ConfigError(kModule, "reps must be at least 1");
  if (cfg.replicates < 1) throw ConfigError(kModule, "bootstrap replicates must be at least 1");
  std::vector<MonteCarloCell> cells;
  for (DgpKind kind : cfg.dgps) {
    if (kind != DgpKind::Dgp1 && kind != DgpKind::Dgp2)
      throw ConfigError(kModule, "the Monte Carlo harness runs dgp1 and dgp2 only");
    for (std::size_t n : cfg.sizes) {
      const std::string label = "monte-carlo/" + to_string(kind) + "/" + std::to_string(n);
      struct Rep {
        DominanceResult result;
      };
      std::vector<Rep> reps(cfg.reps);
      parallel_for(cfg.reps, exec, [&](std::size_t r) {
        DgpConfig dc;
        dc.kind = kind;
        dc.n = n;
        dc.beta = cfg.beta;
        dc.gamma = cfg.gamma;
        dc.noise_sd = cfg.noise_sd;
        dc.p_treat = cfg.p_treat;
        dc.seed = derive_seed(cfg.seed, label, r);
        const SimulatedData sim = generate(dc);
        const auto x = sim.ds.covariates().column(0);
        const auto d = sim.ds.treatment();
        const auto y = sim.ds.outcome();
        const std::vector<double> cates = ols_interaction_cate(sim.ds);
        DominanceAccumulator acc(cates, cfg.grid, cfg.ties);
        const ClusterIndex index(sim.ds.cluster());
        const BootstrapPlan plan{cfg.replicates, derive_seed(dc.seed, "monte-carlo-bootstrap"), true, cfg.grid, cfg.ties};
        std::vector<double> cb;
        for (std::size_t b = 0; b < plan.replicates; ++b) {
          const Resample draw = draw_replicate(index, plan, b);
          try {
            const auto coef = ols_interaction(x, d, y, draw.rows);
            cb.resize(draw.rows.size());
            for (std::size_t j = 0; j < draw.rows.size(); ++j) cb[j] = coef.treatment + coef.interaction * x[draw.rows[j]];
            acc.add(cb);
          } catch (const DegenerateError&) {
            acc.drop();
          }
        }
        reps[r].result = acc.result(true);
      });
      MonteCarloCell cell;
      cell.dgp = kind;
      cell.n = n;
      cell.reps = cfg.reps;
      std::size_t counts[4] = {0, 0, 0, 0};
      for (const auto& rep : reps) {
        const auto& res = rep.result;
        counts[0] += res.p_plus_recentered < cfg.level;
        counts[1] += res.p_minus_recentered < cfg.level;
        counts[2] += res.p_plus_uncentered < cfg.level;
        counts[3] += res.p_minus_uncentered < cfg.level;
        cell.dropped_replicates += res.dropped;
      }
      const double total = static_cast<double>(cfg.reps);
      cell.reject_plus_recentered = static_cast<double>(counts[0]) / total;
      cell.reject_minus_recentered = static_cast<double>(counts[1]) / total;
      cell.reject_plus_uncentered = static_cast<double>(counts[2]) / total;
      cell.reject_minus_uncentered = static_cast<double>(counts[3]) / total;
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace hte
