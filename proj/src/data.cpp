#include "hte/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "hte/csv.hpp"
#include "hte/error.hpp"
#include "hte/stats.hpp"

namespace hte {
namespace {

constexpr const char* kModule = "data";

using csv::csv_escape;
using csv::parse_double;
using csv::split_csv_line;

}  // namespace

PanelDataset PanelDataset::from_columns(std::vector<std::string> cluster_keys, std::vector<int> cluster,
                                        std::vector<int> individual, std::vector<int> period,
                                        std::vector<int> treatment, std::vector<double> outcome,
                                        Matrix covariates, std::vector<std::string> covariate_names) {
  const std::size_t n = outcome.size();
  if (cluster.size() != n || individual.size() != n || period.size() != n || treatment.size() != n ||
      covariates.rows() != n)
    throw ShapeError(kModule, "column lengths differ");
  if (covariate_names.size() != covariates.cols())
    throw ShapeError(kModule, "covariate names do not match covariate width");

  PanelDataset ds;
  ds.keys_ = std::make_shared<const std::vector<std::string>>(std::move(cluster_keys));
  const int n_keys = static_cast<int>(ds.keys_->size());

  std::unordered_map<int, int> treatment_of_individual;
  std::unordered_map<int, int> cluster_of_individual;
  std::set<std::pair<int, int>> seen;
  std::set<int> periods;
  for (std::size_t i = 0; i < n; ++i) {
    if (cluster[i] < 0 || cluster[i] >= n_keys)
      throw ValidationError(kModule, "row " + std::to_string(i) + ": cluster index out of range");
    if (treatment[i] != 0 && treatment[i] != 1)
      throw ValidationError(kModule, "row " + std::to_string(i) + ": treatment must be 0 or 1");
    if (!std::isfinite(outcome[i]))
      throw ValidationError(kModule, "row " + std::to_string(i) + ": outcome is not finite");
    for (double v : covariates.row(i))
      if (!std::isfinite(v))
        throw ValidationError(kModule, "row " + std::to_string(i) + ": covariate is not finite");
    const auto key_name = [&] { return (*ds.keys_)[static_cast<std::size_t>(cluster[i])]; };
    auto [it, inserted] = treatment_of_individual.emplace(individual[i], treatment[i]);
    if (!inserted && it->second != treatment[i])
      throw ValidationError(kModule, "individual " + key_name() + ": treatment varies across periods");
    auto [cit, cinserted] = cluster_of_individual.emplace(individual[i], cluster[i]);
    if (!cinserted && cit->second != cluster[i])
      throw ValidationError(kModule, "individual " + key_name() + ": rows belong to different clusters");
    if (!seen.emplace(individual[i], period[i]).second)
      throw ValidationError(kModule, "individual " + key_name() + ": duplicate period " +
                                         std::to_string(period[i]));
    periods.insert(period[i]);
  }

  ds.cluster_ = std::move(cluster);
  ds.individual_ = std::move(individual);
  ds.period_ = std::move(period);
  ds.treatment_ = std::move(treatment);
  ds.outcome_ = std::move(outcome);
  ds.covariates_ = std::move(covariates);
  ds.covariate_names_ = std::move(covariate_names);
  ds.n_individuals_ = treatment_of_individual.size();
  ds.n_periods_ = periods.size();
  return ds;
}

ObservationView PanelDataset::observation(std::size_t row) const {
  return {individual_key(row), period_[row], treatment_[row], outcome_[row], covariates_.row(row)};
}

std::optional<std::size_t> PanelDataset::covariate_index(std::string_view name) const {
  for (std::size_t j = 0; j < covariate_names_.size(); ++j)
    if (covariate_names_[j] == name) return j;
  return std::nullopt;
}

void PanelDataset::finish_counts() {
  std::set<int> individuals(individual_.begin(), individual_.end());
  std::set<int> periods(period_.begin(), period_.end());
  n_individuals_ = individuals.size();
  n_periods_ = periods.size();
}

PanelDataset PanelDataset::resample(const Resample& draw) const {
  PanelDataset out;
  out.keys_ = keys_;
  const std::size_t n = draw.rows.size();
  out.cluster_.resize(n);
  out.individual_.resize(n);
  out.period_.resize(n);
  out.treatment_.resize(n);
  out.outcome_.resize(n);
  out.covariates_ = covariates_.select_rows(draw.rows);
  out.covariate_names_ = covariate_names_;

  int next_individual = 0;
  std::unordered_map<int, int> local;
  for (std::size_t k = 0; k + 1 < draw.draw_offsets.size(); ++k) {
    local.clear();
    for (std::size_t i = draw.draw_offsets[k]; i < draw.draw_offsets[k + 1]; ++i) {
      const std::size_t r = draw.rows[i];
      auto it = local.find(individual_[r]);
      if (it == local.end()) it = local.emplace(individual_[r], next_individual++).first;
      out.cluster_[i] = cluster_[r];
      out.individual_[i] = it->second;
      out.period_[i] = period_[r];
      out.treatment_[i] = treatment_[r];
      out.outcome_[i] = outcome_[r];
    }
  }
  out.finish_counts();
  return out;
}

PanelDataset PanelDataset::subset(std::span<const std::size_t> rows) const {
  PanelDataset out;
  out.keys_ = keys_;
  const std::size_t n = rows.size();
  out.cluster_.resize(n);
  out.individual_.resize(n);
  out.period_.resize(n);
  out.treatment_.resize(n);
  out.outcome_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = rows[i];
    out.cluster_[i] = cluster_[r];
    out.individual_[i] = individual_[r];
    out.period_[i] = period_[r];
    out.treatment_[i] = treatment_[r];
    out.outcome_[i] = outcome_[r];
  }
  out.covariates_ = covariates_.select_rows(rows);
  out.covariate_names_ = covariate_names_;
  out.finish_counts();
  return out;
}

PanelDataset read_panel_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(kModule, "empty dataset: no header row");
  const auto header = split_csv_line(line);
  const auto find_column = [&](const std::string& name) -> std::size_t {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return j;
    throw SchemaError(kModule, "missing column '" + name + "'");
  };
  const std::size_t id_col = find_column(schema.id);
  const std::size_t period_col = find_column(schema.period);
  const std::size_t d_col = find_column(schema.treatment);
  const std::size_t y_col = find_column(schema.outcome);

  std::vector<std::size_t> cov_cols;
  std::vector<std::string> cov_names;
  if (schema.covariates.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == id_col || j == period_col || j == d_col || j == y_col) continue;
      cov_cols.push_back(j);
      cov_names.push_back(header[j]);
    }
  } else {
    for (const auto& name : schema.covariates) {
      cov_cols.push_back(find_column(name));
      cov_names.push_back(name);
    }
  }
  const std::set<std::string> dropped(schema.drop_individuals.begin(), schema.drop_individuals.end());

  std::vector<std::string> keys;
  std::unordered_map<std::string, int> key_index;
  std::vector<int> cluster, period, treatment;
  std::vector<double> outcome, values;
  std::vector<char> missing;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ValidationError(kModule, "row " + std::to_string(row) + ": expected " +
                                         std::to_string(header.size()) + " fields, found " +
                                         std::to_string(fields.size()));
    const std::string& id = fields[id_col];
    if (dropped.count(id)) continue;
    const auto where = [&] { return "row " + std::to_string(row) + ": "; };

    const auto p = parse_double(fields[period_col]);
    if (!p || *p != std::floor(*p)) throw ValidationError(kModule, where() + "period must be an integer");
    const auto d = parse_double(fields[d_col]);
    if (!d || (*d != 0.0 && *d != 1.0)) throw ValidationError(kModule, where() + "treatment must be 0 or 1");
    const auto y = parse_double(fields[y_col]);
    if (!y || !std::isfinite(*y)) throw ValidationError(kModule, where() + "outcome must be a finite number");

    auto [it, inserted] = key_index.emplace(id, static_cast<int>(keys.size()));
    if (inserted) keys.push_back(id);
    cluster.push_back(it->second);
    period.push_back(static_cast<int>(*p));
    treatment.push_back(static_cast<int>(*d));
    outcome.push_back(*y);
    for (std::size_t j : cov_cols) {
      if (fields[j].empty()) {
        values.push_back(0.0);
        missing.push_back(1);
        continue;
      }
      const auto v = parse_double(fields[j]);
      if (!v || !std::isfinite(*v))
        throw ValidationError(kModule, where() + "covariate '" + header[j] + "' is not a finite number");
      values.push_back(*v);
      missing.push_back(0);
    }
  }
  const std::size_t n = outcome.size();
  if (n == 0) throw ValidationError(kModule, "empty dataset: no data rows");

  const std::size_t k = cov_cols.size();
  std::vector<std::size_t> flagged;
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i)
      if (missing[i * k + j]) {
        flagged.push_back(j);
        break;
      }
  Matrix covariates(n, k + flagged.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) covariates(i, j) = values[i * k + j];
    for (std::size_t f = 0; f < flagged.size(); ++f) covariates(i, k + f) = missing[i * k + flagged[f]];
  }
  for (std::size_t j : flagged) cov_names.push_back(cov_names[j] + "_missing");

  std::vector<int> individual = cluster;
  return PanelDataset::from_columns(std::move(keys), std::move(cluster), std::move(individual), std::move(period),
                                    std::move(treatment), std::move(outcome), std::move(covariates),
                                    std::move(cov_names));
}

PanelDataset load_panel_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError(kModule, "cannot open '" + path + "'");
  return read_panel_csv(in, schema);
}

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

void write_panel_csv(const PanelDataset& ds, std::ostream& out) {
  out << "id,period,d,y";
  for (const auto& name : ds.covariate_names()) out << ',' << csv_escape(name);
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << csv_escape(ds.individual_key(i)) << ',' << ds.period()[i] << ',' << ds.treatment()[i] << ','
        << format_double(ds.outcome()[i]);
    for (double v : ds.covariates().row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_panel_csv(const PanelDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError(kModule, "cannot write '" + path + "'");
  write_panel_csv(ds, out);
}

CovariateSet CovariateSet::all(std::size_t n_covariates) {
  CovariateSet cs{"all", {}};
  for (std::size_t j = 0; j < n_covariates; ++j) cs.column_indices.push_back(j);
  return cs;
}

void CovariateSet::validate(std::size_t n_covariates) const {
  std::set<std::size_t> seen;
  for (std::size_t j : column_indices) {
    if (j >= n_covariates)
      throw ConfigError(kModule, "covariate set '" + name + "': column " + std::to_string(j) + " out of range");
    if (!seen.insert(j).second)
      throw ConfigError(kModule, "covariate set '" + name + "': duplicate column " + std::to_string(j));
  }
}

CovariateSet resolve_covariate_set(const PanelDataset& ds, std::string_view name,
                                   const CovariateSetDefinitions& definitions) {
  const auto it = definitions.find(std::string(name));
  if (name == "all" || (it == definitions.end() && name == "kitchen-sink")) {
    auto cs = CovariateSet::all(ds.n_covariates());
    cs.name = std::string(name);
    return cs;
  }
  if (it == definitions.end()) throw ConfigError(kModule, "covariate set '" + std::string(name) + "' is not defined");
  CovariateSet cs{std::string(name), {}};
  for (const auto& column : it->second) {
    const auto j = ds.covariate_index(column);
    if (!j) throw SchemaError(kModule, "covariate set '" + cs.name + "': unknown column '" + column + "'");
    cs.column_indices.push_back(*j);
  }
  cs.validate(ds.n_covariates());
  return cs;
}

Matrix select_covariates(const PanelDataset& ds, const CovariateSet& cs) {
  cs.validate(ds.n_covariates());
  return ds.covariates().select_columns(cs.column_indices);
}

void SubgroupFilter::validate() const {
  if (band.kind == OutcomeBand::Kind::PositiveBelow || band.kind == OutcomeBand::Kind::AtOrAbove) {
    if (!std::isfinite(band.threshold) || band.threshold <= 0.0)
      throw ConfigError(kModule, "subgroup band threshold must be finite and positive");
  }
}

std::string SubgroupFilter::label() const {
  std::string out;
  switch (arm) {
    case Arm::All: out = "all"; break;
    case Arm::Treated: out = "treated"; break;
    case Arm::Control: out = "control"; break;
  }
  switch (band.kind) {
    case OutcomeBand::Kind::Any: break;
    case OutcomeBand::Kind::Zero: out += ":zero"; break;
    case OutcomeBand::Kind::PositiveBelow: out += ":positive-below:" + format_double(band.threshold); break;
    case OutcomeBand::Kind::AtOrAbove: out += ":at-or-above:" + format_double(band.threshold); break;
  }
  if (band_column) out += "@" + std::to_string(*band_column);
  return out;
}

SubgroupFilter parse_subgroup(std::string_view text, const PanelDataset* ds) {
  SubgroupFilter f;
  std::string spec(text);
  if (const auto at = spec.find('@'); at != std::string::npos) {
    const std::string column = spec.substr(at + 1);
    spec = spec.substr(0, at);
    std::optional<std::size_t> index;
    if (ds) index = ds->covariate_index(column);
    if (!index) {
      std::size_t parsed = 0;
      auto [ptr, ec] = std::from_chars(column.data(), column.data() + column.size(), parsed);
      if (ec != std::errc() || ptr != column.data() + column.size())
        throw ConfigError(kModule, "subgroup '" + std::string(text) + "': unknown band column '" + column + "'");
      index = parsed;
    }
    if (ds && *index >= ds->n_covariates())
      throw ConfigError(kModule, "subgroup '" + std::string(text) + "': band column out of range");
    f.band_column = index;
  }
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.empty() || parts.size() > 3) throw ConfigError(kModule, "malformed subgroup '" + std::string(text) + "'");

  if (parts[0] == "all") f.arm = Arm::All;
  else if (parts[0] == "treated") f.arm = Arm::Treated;
  else if (parts[0] == "control") f.arm = Arm::Control;
  else throw ConfigError(kModule, "subgroup '" + std::string(text) + "': unknown arm '" + parts[0] + "'");

  const std::string band = parts.size() > 1 ? parts[1] : "any";
  const bool needs_threshold = band == "positive-below" || band == "at-or-above";
  if (band == "any") f.band.kind = OutcomeBand::Kind::Any;
  else if (band == "zero") f.band.kind = OutcomeBand::Kind::Zero;
  else if (band == "positive-below") f.band.kind = OutcomeBand::Kind::PositiveBelow;
  else if (band == "at-or-above") f.band.kind = OutcomeBand::Kind::AtOrAbove;
  else throw ConfigError(kModule, "subgroup '" + std::string(text) + "': unknown band '" + band + "'");

  if (needs_threshold) {
    if (parts.size() != 3) throw ConfigError(kModule, "subgroup '" + std::string(text) + "': band needs a threshold");
    const auto t = parse_double(parts[2]);
    if (!t) throw ConfigError(kModule, "subgroup '" + std::string(text) + "': bad threshold");
    f.band.threshold = *t;
  } else if (parts.size() == 3) {
    throw ConfigError(kModule, "subgroup '" + std::string(text) + "': band takes no threshold");
  }
  f.validate();
  return f;
}

std::vector<std::size_t> apply_filter(const PanelDataset& ds, const SubgroupFilter& f) {
  f.validate();
  if (f.band_column && *f.band_column >= ds.n_covariates())
    throw ConfigError(kModule, "subgroup band column out of range");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int d = ds.treatment()[i];
    if ((f.arm == Arm::Treated && d != 1) || (f.arm == Arm::Control && d != 0)) continue;
    const double v = f.band_column ? ds.covariates()(i, *f.band_column) : ds.outcome()[i];
    bool keep = true;
    switch (f.band.kind) {
      case OutcomeBand::Kind::Any: break;
      case OutcomeBand::Kind::Zero: keep = v == 0.0; break;
      case OutcomeBand::Kind::PositiveBelow: keep = v > 0.0 && v < f.band.threshold; break;
      case OutcomeBand::Kind::AtOrAbove: keep = v >= f.band.threshold; break;
    }
    if (keep) out.push_back(i);
  }
  return out;
}

double standardized_difference(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DegenerateError(kModule, "standardized difference needs two non-empty samples");
  const double ma = stats::mean(a);
  const double mb = stats::mean(b);
  const double pooled = 0.5 * (stats::population_variance(a) + stats::population_variance(b));
  if (pooled == 0.0) {
    if (ma == mb) return 0.0;
    throw DegenerateError(kModule, "standardized difference undefined: both samples constant with different means");
  }
  return std::abs(ma - mb) / std::sqrt(pooled) * 100.0;
}

std::vector<BalanceRow> balance_table(const PanelDataset& ds) {
  const auto row_for = [&](const std::string& name, const std::vector<double>& column) {
    std::vector<double> treated, control;
    for (std::size_t i = 0; i < ds.size(); ++i) (ds.treatment()[i] ? treated : control).push_back(column[i]);
    BalanceRow r;
    r.variable = name;
    if (!treated.empty()) {
      r.mean_treated = stats::mean(treated);
      r.sd_treated = std::sqrt(stats::population_variance(treated));
    }
    if (!control.empty()) {
      r.mean_control = stats::mean(control);
      r.sd_control = std::sqrt(stats::population_variance(control));
    }
    try {
      r.std_difference = standardized_difference(treated, control);
    } catch (const DegenerateError&) {
      r.std_difference = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
  };
  std::vector<BalanceRow> rows;
  rows.push_back(row_for("outcome", std::vector<double>(ds.outcome().begin(), ds.outcome().end())));
  for (std::size_t j = 0; j < ds.n_covariates(); ++j) rows.push_back(row_for(ds.covariate_names()[j], ds.covariates().column(j)));
  return rows;
}

}  // namespace hte
