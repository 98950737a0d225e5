#include "hte/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "hte/csv.hpp"
#include "hte/error.hpp"
#include "hte/inference.hpp"
#include "hte/rng.hpp"
#include "hte/stats.hpp"

namespace hte {
namespace {

constexpr const char* kModule = "nuisance";

struct FittedModel {
  std::vector<double> predictions;  // aligned with the prediction rows
  NuisanceModelAudit audit;
};

FittedModel fit_and_predict(const Matrix& x, std::span<const double> target, std::span<const int> clusters,
                            const std::vector<std::size_t>& train_rows, const std::vector<std::size_t>& predict_rows,
                            const NuisanceConfig& config, const std::string& name, int fold, ExecPolicy exec) {
  FittedModel out;
  out.audit.target = name;
  out.audit.trained_on_fold = fold;
  std::set<int> seen;
  std::vector<double> y;
  std::vector<int> c;
  for (std::size_t r : train_rows) {
    seen.insert(clusters[r]);
    y.push_back(target[r]);
    c.push_back(clusters[r]);
  }
  out.audit.training_clusters.assign(seen.begin(), seen.end());
  if (train_rows.empty()) throw InsufficientDataError(kModule, "no training rows for " + name);

  if (seen.size() < 4) {
    out.audit.constant = true;
    out.predictions.assign(predict_rows.size(), stats::mean(y));
    return out;
  }
  ForestConfig fc = config.forest;
  fc.seed = derive_seed(config.forest.seed, "nuisance-" + name, static_cast<std::uint64_t>(fold));
  const auto forest = fit_regression_forest(x.select_rows(train_rows), y, c, fc, exec);
  out.predictions = predict_forest(forest, x.select_rows(predict_rows), exec);
  return out;
}

}  // namespace

void NuisanceConfig::validate() const {
  forest.validate();
  if (!(clip >= 0.0 && clip < 0.5)) throw ConfigError(kModule, "clip must lie in [0, 0.5)");
  if (max_fold_attempts < 1) throw ConfigError(kModule, "max_fold_attempts must be at least 1");
  if (min_clusters_per_arm < 1) throw ConfigError(kModule, "min_clusters_per_arm must be at least 1");
}

NuisanceFit cross_fit_nuisances(const PanelDataset& ds, const CovariateSet& cs, const NuisanceConfig& config,
                                ExecPolicy exec) {
  config.validate();
  if (ds.empty()) throw InsufficientDataError(kModule, "empty dataset");
  const Matrix x = select_covariates(ds, cs);
  const ClusterIndex index(ds.cluster());
  const std::size_t k = index.n_clusters();
  std::vector<int> arm(k);
  for (std::size_t c = 0; c < k; ++c) arm[c] = ds.treatment()[index.rows(c).front()];

  std::vector<int> cluster_fold;
  int attempts = 0;
  for (int a = 0; a < config.max_fold_attempts && cluster_fold.empty(); ++a) {
    ++attempts;
    Rng rng = make_stream(config.forest.seed, "nuisance-folds", static_cast<std::uint64_t>(a));
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, k - 1);
      std::swap(order[i], order[pick(rng)]);
    }
    std::vector<int> fold(k, 1);
    for (std::size_t i = 0; i < (k + 1) / 2; ++i) fold[order[i]] = 0;
    std::size_t counts[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t c = 0; c < k; ++c) ++counts[fold[c]][arm[c]];
    bool ok = true;
    for (auto& f : counts)
      for (std::size_t n : f) ok = ok && n >= config.min_clusters_per_arm;
    if (ok) cluster_fold = std::move(fold);
  }
  if (cluster_fold.empty())
    throw InsufficientDataError(kModule, "no fold split with " + std::to_string(config.min_clusters_per_arm) +
                                             " clusters of each arm in both folds after " +
                                             std::to_string(attempts) + " attempts");

  NuisanceFit nf;
  nf.fold_attempts = attempts;
  nf.fold.assign(ds.size(), 0);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t r : index.rows(c)) nf.fold[r] = cluster_fold[c];
  nf.mu1.assign(ds.size(), 0.0);
  nf.mu0.assign(ds.size(), 0.0);
  nf.p.assign(ds.size(), 0.0);

  std::vector<double> d(ds.treatment().begin(), ds.treatment().end());
  for (int f = 0; f < 2; ++f) {
    std::vector<std::size_t> treated, control, all, target_rows;
    for (std::size_t r = 0; r < ds.size(); ++r) {
      if (nf.fold[r] == f) {
        all.push_back(r);
        (ds.treatment()[r] ? treated : control).push_back(r);
      } else {
        target_rows.push_back(r);
      }
    }
    const auto write = [&](std::vector<double>& dest, FittedModel&& m) {
      for (std::size_t j = 0; j < target_rows.size(); ++j) dest[target_rows[j]] = m.predictions[j];
      nf.models.push_back(std::move(m.audit));
    };
    write(nf.mu1, fit_and_predict(x, ds.outcome(), ds.cluster(), treated, target_rows, config, "mu1", f, exec));
    write(nf.mu0, fit_and_predict(x, ds.outcome(), ds.cluster(), control, target_rows, config, "mu0", f, exec));
    write(nf.p, fit_and_predict(x, d, ds.cluster(), all, target_rows, config, "p", f, exec));
  }
  for (double& p : nf.p) {
    const double clipped = std::clamp(p, config.clip, 1.0 - config.clip);
    nf.clipped += clipped != p;
    p = clipped;
  }
  return nf;
}

void write_nuisance_csv(const PanelDataset& ds, const NuisanceFit& nf, std::ostream& out) {
  if (nf.size() != ds.size()) throw ShapeError(kModule, "nuisance fit is not aligned with the dataset");
  out << "individual_id,period,mu1_hat,mu0_hat,p_hat,fold\n";
  for (std::size_t i = 0; i < ds.size(); ++i)
    out << csv::csv_escape(ds.individual_key(i)) << ',' << ds.period()[i] << ',' << format_double(nf.mu1[i]) << ','
        << format_double(nf.mu0[i]) << ',' << format_double(nf.p[i]) << ',' << nf.fold[i] << '\n';
}

NuisanceFit read_nuisance_csv(const PanelDataset& ds, std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(kModule, "nuisance file has no header");
  const auto header = csv::split_csv_line(line);
  const std::vector<std::string> expected{"individual_id", "period", "mu1_hat", "mu0_hat", "p_hat", "fold"};
  std::vector<std::size_t> col;
  for (const auto& name : expected) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError(kModule, "missing column '" + name + "'");
    col.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  NuisanceFit nf;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split_csv_line(line);
    if (fields.size() != header.size()) throw ValidationError(kModule, "row " + std::to_string(row + 1) + ": wrong field count");
    if (row >= ds.size()) throw ShapeError(kModule, "nuisance file has more rows than the dataset");
    if (fields[col[0]] != ds.individual_key(row) || fields[col[1]] != std::to_string(ds.period()[row]))
      throw ValidationError(kModule, "row " + std::to_string(row + 1) + ": does not match dataset row (individual " +
                                         std::string(ds.individual_key(row)) + ")");
    double v[4];
    for (int j = 0; j < 4; ++j) {
      const auto parsed = csv::parse_double(fields[col[static_cast<std::size_t>(j) + 2]]);
      if (!parsed || !std::isfinite(*parsed))
        throw ValidationError(kModule, "row " + std::to_string(row + 1) + ": non-numeric value");
      v[j] = *parsed;
    }
    if (!(v[2] > 0.0 && v[2] < 1.0)) throw ValidationError(kModule, "row " + std::to_string(row + 1) + ": p_hat outside (0, 1)");
    nf.mu1.push_back(v[0]);
    nf.mu0.push_back(v[1]);
    nf.p.push_back(v[2]);
    nf.fold.push_back(static_cast<int>(v[3]));
    ++row;
  }
  if (row != ds.size()) throw ShapeError(kModule, "nuisance file has fewer rows than the dataset");
  return nf;
}

}  // namespace hte
