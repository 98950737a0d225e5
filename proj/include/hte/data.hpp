#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hte/matrix.hpp"

namespace hte {

// One panel row as seen through a PanelDataset.
struct ObservationView {
  std::string_view individual_id;
  int period = 0;
  int treatment = 0;
  double outcome = 0.0;
  std::span<const double> covariates;
};

// Row indices with multiplicity, as produced by a clustered bootstrap draw.
struct Resample {
  std::vector<std::size_t> rows;
  // Dense cluster index of every draw, in draw order.
  std::vector<int> drawn_clusters;
  // rows[draw_offsets[k] .. draw_offsets[k + 1]) belong to draw k.
  std::vector<std::size_t> draw_offsets{0};
};

// Clustered panel of (individual, period, treatment, outcome, covariates),
// stored column-wise. Immutable once built.
//
// Every row carries two dense labels: `individual` (unique per person in
// this dataset, so (individual, period) is a key) and `cluster` (the unit of
// randomisation and resampling). They coincide for loaded data; a bootstrap
// resample gives each drawn copy a fresh individual but keeps the original
// cluster, so fold and honesty splits never separate copies of one person.
class PanelDataset {
 public:
  PanelDataset() = default;

  // Builds and validates a dataset. `cluster_keys[c]` is the external id of
  // dense cluster c. Throws ValidationError when an invariant is violated.
  static PanelDataset from_columns(std::vector<std::string> cluster_keys, std::vector<int> cluster,
                                   std::vector<int> individual, std::vector<int> period,
                                   std::vector<int> treatment, std::vector<double> outcome,
                                   Matrix covariates, std::vector<std::string> covariate_names);

  std::size_t size() const noexcept { return outcome_.size(); }
  bool empty() const noexcept { return outcome_.empty(); }
  std::size_t n_individuals() const noexcept { return n_individuals_; }
  std::size_t n_clusters() const noexcept { return keys_ ? keys_->size() : 0; }
  std::size_t n_periods() const noexcept { return n_periods_; }
  std::size_t n_covariates() const noexcept { return covariates_.cols(); }

  std::span<const int> cluster() const noexcept { return cluster_; }
  std::span<const int> individual() const noexcept { return individual_; }
  std::span<const int> period() const noexcept { return period_; }
  std::span<const int> treatment() const noexcept { return treatment_; }
  std::span<const double> outcome() const noexcept { return outcome_; }
  const Matrix& covariates() const noexcept { return covariates_; }
  const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }

  std::string_view cluster_key(int cluster) const { return (*keys_)[static_cast<std::size_t>(cluster)]; }
  std::string_view individual_key(std::size_t row) const { return cluster_key(cluster_[row]); }
  ObservationView observation(std::size_t row) const;

  // Column index of a covariate by name.
  std::optional<std::size_t> covariate_index(std::string_view name) const;

  // Dataset made of the given rows, in order, with multiplicity. Each
  // (cluster, draw) pair becomes a new individual; clusters keep their keys.
  PanelDataset resample(const Resample& draw) const;

  // Dataset made of the given rows with individuals kept as they are. Rows
  // must be distinct.
  PanelDataset subset(std::span<const std::size_t> rows) const;

 private:
  void finish_counts();

  std::shared_ptr<const std::vector<std::string>> keys_;
  std::vector<int> cluster_;
  std::vector<int> individual_;
  std::vector<int> period_;
  std::vector<int> treatment_;
  std::vector<double> outcome_;
  Matrix covariates_;
  std::vector<std::string> covariate_names_;
  std::size_t n_individuals_ = 0;
  std::size_t n_periods_ = 0;
};

// Maps the logical columns onto CSV header names.
struct CsvSchema {
  std::string id = "id";
  std::string period = "period";
  std::string treatment = "d";
  std::string outcome = "y";
  // Covariate columns in order; empty means every remaining column.
  std::vector<std::string> covariates;
  // Individuals removed before validation (explicit outlier handling).
  std::vector<std::string> drop_individuals;
};

// Reads a panel from CSV. Empty covariate cells are imputed with 0 and a
// `<name>_missing` indicator column is appended for every covariate that has
// at least one empty cell. Row order is preserved.
PanelDataset load_panel_csv(const std::string& path, const CsvSchema& schema = {});
PanelDataset read_panel_csv(std::istream& in, const CsvSchema& schema = {});

// Writes id, period, d, y and all covariates with shortest round-trip
// formatting, so reading the file back reproduces every value bit for bit.
void write_panel_csv(const PanelDataset& ds, std::ostream& out);
void write_panel_csv(const PanelDataset& ds, const std::string& path);

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

// A named list of covariate columns.
struct CovariateSet {
  std::string name;
  std::vector<std::size_t> column_indices;

  static CovariateSet all(std::size_t n_covariates);
  // Throws ConfigError on out-of-range or duplicate indices.
  void validate(std::size_t n_covariates) const;
};

// Named covariate-set definitions ("baseline", "decent", "kitchen-sink").
// "all" always resolves to every column, and "kitchen-sink" falls back to
// every column when it is not defined.
using CovariateSetDefinitions = std::map<std::string, std::vector<std::string>>;
CovariateSet resolve_covariate_set(const PanelDataset& ds, std::string_view name,
                                   const CovariateSetDefinitions& definitions);

// Column subset of the covariate matrix, row order preserved.
Matrix select_covariates(const PanelDataset& ds, const CovariateSet& cs);

enum class Arm { All, Treated, Control };

struct OutcomeBand {
  enum class Kind { Any, Zero, PositiveBelow, AtOrAbove };
  Kind kind = Kind::Any;
  double threshold = 0.0;
};

// Subsample definition: treatment arm plus a band on the outcome or on a
// covariate column.
struct SubgroupFilter {
  Arm arm = Arm::All;
  OutcomeBand band;
  // Covariate column the band applies to; empty means the outcome.
  std::optional<std::size_t> band_column;

  // Throws ConfigError when a band needs a threshold that is not finite and
  // positive.
  void validate() const;
  std::string label() const;
};

// Parses "arm[:band[:threshold]]" with arm in {all, treated, control} and band
// in {any, zero, positive-below, at-or-above}; an optional "@column" suffix
// moves the band from the outcome to a covariate.
SubgroupFilter parse_subgroup(std::string_view text, const PanelDataset* ds = nullptr);

// Ascending indices of rows satisfying the filter.
std::vector<std::size_t> apply_filter(const PanelDataset& ds, const SubgroupFilter& f);

// |mean(a) - mean(b)| / sqrt((var(a) + var(b)) / 2) * 100 with population
// variances. Returns 0 for two constant samples with equal means and throws
// DegenerateError when both are constant but differ.
double standardized_difference(std::span<const double> a, std::span<const double> b);

struct BalanceRow {
  std::string variable;
  double mean_treated = 0.0;
  double sd_treated = 0.0;
  double mean_control = 0.0;
  double sd_control = 0.0;
  double std_difference = 0.0;
};

// Outcome and covariate means by arm with standardized differences.
std::vector<BalanceRow> balance_table(const PanelDataset& ds);

}  // namespace hte
