#include "hte/pipeline.hpp"

#include <sstream>

#include "hte/error.hpp"
#include "hte/rng.hpp"

namespace hte {
namespace {

constexpr const char* kModule = "pipeline";

Matrix feature_matrix(const PanelDataset& ds, const CovariateSet& cs, bool period_feature,
                      std::vector<std::string>& names) {
  Matrix x = select_covariates(ds, cs);
  names.clear();
  for (std::size_t j : cs.column_indices) names.push_back(ds.covariate_names()[j]);
  if (period_feature) {
    std::vector<double> period(ds.period().begin(), ds.period().end());
    x = x.with_column(period);
    names.push_back("period");
  }
  return x;
}

std::vector<double> average(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = 0.5 * (a[i] + b[i]);
  return out;
}

ScoreVector restrict(const ScoreVector& s, const std::vector<std::size_t>& rows) {
  ScoreVector out;
  out.kind = s.kind;
  for (std::size_t r : rows) {
    out.values.push_back(s.values[r]);
    out.clusters.push_back(s.clusters[r]);
  }
  return out;
}

}  // namespace

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::LocalConstant: return "local-constant";
    case Estimator::Tree: return "tree";
    case Estimator::Forest: return "forest";
  }
  return "unknown";
}

Estimator parse_estimator(const std::string& text) {
  for (Estimator e : {Estimator::LocalConstant, Estimator::Tree, Estimator::Forest})
    if (to_string(e) == text) return e;
  throw ConfigError(kModule, "unknown estimator '" + text + "' (expected local-constant, tree or forest)");
}

PipelineResult estimate_cates(const PanelDataset& ds, const PipelineConfig& cfg, std::uint64_t seed,
                              ExecPolicy exec) {
  if (ds.empty()) throw InsufficientDataError(kModule, "empty dataset");
  PipelineResult out;
  out.cates.estimator = to_string(cfg.estimator);

  if (cfg.estimator == Estimator::LocalConstant) {
    PartitionSpec spec;
    spec.by_period = cfg.stratify_by_period;
    if (cfg.stratify_column) {
      spec.stratify_column = ds.covariate_index(*cfg.stratify_column);
      if (!spec.stratify_column) throw ConfigError(kModule, "unknown stratification column '" + *cfg.stratify_column + "'");
    }
    const auto model = fit_local_constant(ds, spec);
    out.cates.values = model.predict(ds);
    out.cates.covariate_set = cfg.stratify_column.value_or("none");
    std::ostringstream s;
    s << "local-constant model, " << model.groups().size() << " groups\n";
    for (const auto& g : model.groups())
      s << "  stratum " << g.stratum << " period " << g.period << ": control mean " << format_double(g.gamma)
        << ", effect " << format_double(g.delta) << " (treated " << g.n_treated << ", control " << g.n_control
        << ")\n";
    out.model_summary = s.str();
    return out;
  }

  const CovariateSet cs = resolve_covariate_set(ds, cfg.covariate_set, cfg.covariate_sets);
  out.cates.covariate_set = cs.name;
  std::vector<std::string> names;
  const Matrix x = feature_matrix(ds, cs, cfg.period_feature, names);

  std::vector<int> fold(ds.size(), 1);
  if (cfg.score == ScoreKind::Orthogonal) {
    NuisanceConfig nc = cfg.nuisance;
    nc.forest.seed = derive_seed(seed, "nuisance");
    out.nuisance = cross_fit_nuisances(ds, cs, nc, exec);
    out.score = orthogonal_score(ds, *out.nuisance);
    fold = out.nuisance->fold;
  } else {
    out.score = unadjusted_score(ds, cfg.p_marginal);
  }
  const ScoreVector& score = *out.score;
  std::vector<std::size_t> rows_of[2];
  for (std::size_t i = 0; i < ds.size(); ++i) rows_of[fold[i]].push_back(i);
  const bool split = cfg.score == ScoreKind::Orthogonal;

  std::ostringstream s;
  if (cfg.estimator == Estimator::Forest) {
    const auto fit_on = [&](const std::vector<std::size_t>& rows, int f) {
      ForestConfig fc = cfg.forest;
      fc.seed = derive_seed(seed, "cate-forest", static_cast<std::uint64_t>(f));
      return fit_cate_forest(x.select_rows(rows), restrict(score, rows), fc, exec);
    };
    if (split) {
      const auto f0 = fit_on(rows_of[0], 0);
      const auto f1 = fit_on(rows_of[1], 1);
      out.cates.values = average(predict_cate(f0, x, exec), predict_cate(f1, x, exec));
      s << "forest of " << f0.trees.size() << " honest trees per cross-fitting fold, min leaf " << cfg.forest.min_leaf
        << ", averaged over both folds\n";
    } else {
      std::vector<std::size_t> all(ds.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      const auto f = fit_on(all, 0);
      out.cates.values = predict_cate(f, x, exec);
      s << "forest of " << f.trees.size() << " honest trees, min leaf " << cfg.forest.min_leaf << "\n";
    }
    s << "features:";
    for (const auto& n : names) s << ' ' << n;
    s << '\n';
  } else {
    std::vector<std::size_t> rows = rows_of[1];
    if (!split) {
      rows.resize(ds.size());
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    }
    CateTreeConfig tc = cfg.tree;
    tc.seed = derive_seed(seed, "cate-tree");
    const auto fit = fit_cate_tree(x.select_rows(rows), restrict(score, rows), tc, exec);
    out.cates.values = predict_cate(fit.tree, x);
    s << "honest tree, " << fit.tree.n_leaves() << " leaves, min leaf "
      << (fit.selected_min_leaf == 0 ? std::string("root-only") : std::to_string(fit.selected_min_leaf)) << "\n";
    for (const auto& p : fit.cv)
      s << "  cv min leaf " << (p.min_leaf == 0 ? std::string("root-only") : std::to_string(p.min_leaf)) << ": mse "
        << format_double(p.mse) << '\n';
    s << fit.tree.to_text(names);
  }
  out.model_summary = s.str();
  return out;
}

RefitFn pipeline_refit(const PipelineConfig& cfg) {
  return [cfg](const PanelDataset& sample, std::span<const std::size_t>, std::uint64_t seed) {
    return estimate_cates(sample, cfg, seed, ExecPolicy::serial()).cates.values;
  };
}

}  // namespace hte
