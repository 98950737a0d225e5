#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hte/data.hpp"
#include "hte/forest.hpp"
#include "hte/parallel.hpp"

namespace hte {

struct NuisanceConfig {
  ForestConfig forest;
  // p_hat is clipped to [clip, 1 - clip].
  double clip = 0.01;
  int max_fold_attempts = 10;
  // Fold splits are redrawn until each fold holds this many clusters of
  // each arm.
  std::size_t min_clusters_per_arm = 2;

  void validate() const;
};

// Training record of one of the six cross-fitted models.
struct NuisanceModelAudit {
  std::string target;  // "mu1", "mu0" or "p"
  int trained_on_fold = 0;
  std::vector<int> training_clusters;  // ascending
  // Too few clusters for a forest: the model predicts its training mean.
  bool constant = false;
};

struct NuisanceFit {
  std::vector<double> mu1;
  std::vector<double> mu0;
  std::vector<double> p;
  std::vector<int> fold;  // 0 or 1 per row; predicted by models of the other fold
  std::vector<NuisanceModelAudit> models;
  int fold_attempts = 0;
  std::size_t clipped = 0;

  std::size_t size() const noexcept { return mu1.size(); }
};

// Two-fold cross-fitting by cluster. Models trained on one fold predict the
// rows of the other, then the folds swap roles, so no row is predicted by a
// model that saw its cluster.
NuisanceFit cross_fit_nuisances(const PanelDataset& ds, const CovariateSet& cs, const NuisanceConfig& config,
                                ExecPolicy exec = {});

// Columns individual_id, period, mu1_hat, mu0_hat, p_hat, fold.
void write_nuisance_csv(const PanelDataset& ds, const NuisanceFit& nf, std::ostream& out);
// Reads a nuisance file written for `ds`; rows must match ds row by row.
NuisanceFit read_nuisance_csv(const PanelDataset& ds, std::istream& in);

}  // namespace hte
