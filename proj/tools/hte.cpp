// Command-line front end: simulate, fit, test, qte-compare, report, score.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "hte/cate.hpp"
#include "hte/csv.hpp"
#include "hte/data.hpp"
#include "hte/error.hpp"
#include "hte/inference.hpp"
#include "hte/nuisance.hpp"
#include "hte/pipeline.hpp"
#include "hte/qte.hpp"
#include "hte/report.hpp"
#include "hte/score.hpp"
#include "hte/sim.hpp"

namespace fs = std::filesystem;
using namespace hte;

namespace {

struct Global {
  int workers = 1;
  std::string out;
};

struct DataOptions {
  std::string path;
  std::string id = "id";
  std::string period = "period";
  std::string treatment = "d";
  std::string outcome = "y";
  std::vector<std::string> covariates;
  std::vector<std::string> drop;

  PanelDataset load() const {
    CsvSchema schema;
    schema.id = id;
    schema.period = period;
    schema.treatment = treatment;
    schema.outcome = outcome;
    schema.covariates = covariates;
    schema.drop_individuals = drop;
    return load_panel_csv(path, schema);
  }
};

struct ModelOptions {
  std::string estimator = "forest";
  std::string covariates = "all";
  std::vector<std::string> set_definitions;
  std::string score = "orthogonal";
  std::size_t trees = 1000;
  std::size_t nuisance_trees = 0;
  std::size_t min_leaf = 0;
  double subsample = 0.5;
  double feature_fraction = 2.0 / 3.0;
  double clip = 0.01;
  bool period_feature = false;
  std::string stratify;
  std::uint64_t seed = 1;

  PipelineConfig config() const {
    PipelineConfig c;
    c.estimator = parse_estimator(estimator);
    if (score == "orthogonal") c.score = ScoreKind::Orthogonal;
    else if (score == "unadjusted") c.score = ScoreKind::Unadjusted;
    else throw ConfigError("cli", "unknown score '" + score + "' (expected orthogonal or unadjusted)");
    c.covariate_set = covariates;
    for (const auto& def : set_definitions) {
      const auto eq = def.find('=');
      if (eq == std::string::npos) throw ConfigError("cli", "covariate set definition needs NAME=col1,col2: " + def);
      std::vector<std::string> cols;
      std::stringstream ss(def.substr(eq + 1));
      for (std::string col; std::getline(ss, col, ',');)
        if (!col.empty()) cols.push_back(col);
      c.covariate_sets[def.substr(0, eq)] = cols;
    }
    c.period_feature = period_feature;
    c.forest.trees = trees;
    c.forest.subsample_fraction = subsample;
    c.forest.feature_fraction = feature_fraction;
    if (min_leaf > 0) {
      c.forest.min_leaf = min_leaf;
      c.tree.fixed_min_leaf = min_leaf;
    }
    c.nuisance.forest = c.forest;
    c.nuisance.forest.min_leaf = 10;
    c.nuisance.forest.trees = nuisance_trees > 0 ? nuisance_trees : trees;
    c.nuisance.clip = clip;
    if (!stratify.empty()) c.stratify_column = stratify;
    return c;
  }
};

void add_data_options(CLI::App* app, DataOptions& d) {
  app->add_option("--data", d.path, "Panel CSV file")->required();
  app->add_option("--id-col", d.id, "Individual id column")->capture_default_str();
  app->add_option("--period-col", d.period, "Period column")->capture_default_str();
  app->add_option("--treatment-col", d.treatment, "Treatment column")->capture_default_str();
  app->add_option("--outcome-col", d.outcome, "Outcome column")->capture_default_str();
  app->add_option("--covariate-cols", d.covariates, "Covariate columns (default: all remaining)")->delimiter(',');
  app->add_option("--drop", d.drop, "Individuals removed before estimation")->delimiter(',');
}

void add_model_options(CLI::App* app, ModelOptions& m) {
  app->add_option("--estimator", m.estimator, "local-constant, tree or forest")
      ->check(CLI::IsMember({"local-constant", "tree", "forest"}))
      ->capture_default_str();
  app->add_option("--covariates", m.covariates, "Covariate set name")->capture_default_str();
  app->add_option("--covariate-set", m.set_definitions, "Define a covariate set as NAME=col1,col2");
  app->add_option("--score", m.score, "orthogonal or unadjusted")
      ->check(CLI::IsMember({"orthogonal", "unadjusted"}))
      ->capture_default_str();
  app->add_option("--trees", m.trees, "Trees per forest")->capture_default_str();
  app->add_option("--nuisance-trees", m.nuisance_trees, "Trees per nuisance forest (default: --trees)");
  app->add_option("--min-leaf", m.min_leaf, "Minimum leaf size (tree: skips cross-validation)");
  app->add_option("--subsample-fraction", m.subsample, "Share of individuals per tree")->capture_default_str();
  app->add_option("--feature-fraction", m.feature_fraction, "Share of covariates per tree")->capture_default_str();
  app->add_option("--clip", m.clip, "Propensity clipping bound")->capture_default_str();
  app->add_flag("--period-feature", m.period_feature, "Use the period as a feature");
  app->add_option("--stratify", m.stratify, "Local-constant strata column");
  app->add_option("--seed", m.seed, "Master seed")->capture_default_str();
}

fs::path output_dir(const Global& g) {
  std::string dir = g.out;
  if (dir.empty()) {
    const char* env = std::getenv("HTE_OUT_DIR");
    dir = env && *env ? env : "out";
  }
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cli", "cannot write '" + path.string() + "'");
  out << text;
}

void write_manifest(const fs::path& dir, const CLI::App* sub) {
  std::ostringstream m;
  m << "command=" << sub->get_name() << '\n' << sub->config_to_str(true, false);
  write_text(dir / "manifest.ini", m.str());
}

std::string cates_csv(const PanelDataset& ds, const std::vector<double>& cates) {
  std::ostringstream out;
  out << "individual_id,period,cate\n";
  for (std::size_t i = 0; i < ds.size(); ++i)
    out << ds.individual_key(i) << ',' << ds.period()[i] << ',' << format_double(cates[i]) << '\n';
  return out.str();
}

void write_table(const fs::path& dir, const std::string& stem, const ReportTable& t) {
  write_text(dir / (stem + ".csv"), render_report(t, ReportFormat::Csv));
  write_text(dir / (stem + ".md"), render_report(t, ReportFormat::Markdown));
}

void warn(const std::string& text) {
  if (!text.empty()) std::cerr << "warning: " << text << '\n';
}

SupGrid parse_grid(const std::string& s) { return s == "sample" ? SupGrid::SamplePoints : SupGrid::Exact; }
Ties parse_ties(const std::string& s) {
  if (s == "weak") return Ties::Weak;
  return s == "weak-minus" ? Ties::WeakMinus : Ties::Strict;
}

std::vector<double> parse_taus(const std::string& spec) {
  if (spec.empty()) return default_taus();
  std::vector<double> taus;
  if (spec.find(':') != std::string::npos) {
    std::stringstream ss(spec);
    std::string a, b, c;
    std::getline(ss, a, ':');
    std::getline(ss, b, ':');
    std::getline(ss, c, ':');
    const double lo = std::stod(a), hi = std::stod(b), step = std::stod(c);
    if (!(step > 0.0)) throw ConfigError("cli", "tau step must be positive");
    for (int k = 0;; ++k) {
      const double t = lo + k * step;
      if (t > hi + 1e-9) break;
      taus.push_back(t);
    }
  } else {
    std::stringstream ss(spec);
    for (std::string t; std::getline(ss, t, ',');) taus.push_back(std::stod(t));
  }
  return taus;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::string dgp = "dgp1";
  std::size_t n = 1000;
  std::size_t reps = 0;
  std::size_t B = 499;
  std::vector<std::size_t> sizes;
  std::string grid = "exact";
  std::string ties = "strict";
  double beta = 1.0;
  double gamma = 1.0;
  double noise_sd = 4.0;
  double p_treat = 0.5;
  double effect_sd = 0.0;
  std::uint64_t seed = 1;
};

int run_simulate(const Global& g, const SimulateOptions& o, const CLI::App* sub) {
  const fs::path dir = output_dir(g);
  const ExecPolicy exec{g.workers};
  if (o.reps == 0) {
    DgpConfig c;
    c.kind = parse_dgp_kind(o.dgp);
    c.n = o.n;
    c.beta = o.beta;
    c.gamma = o.gamma;
    c.noise_sd = o.noise_sd;
    c.p_treat = o.p_treat;
    c.shift.effect_sd = o.effect_sd;
    c.seed = o.seed;
    const auto sim = generate(c);
    std::ofstream data(dir / "data.csv", std::ios::binary);
    write_panel_csv(sim.ds, data);
    std::ostringstream truth;
    truth << "individual_id,period,true_cate,y0,y1\n";
    for (std::size_t i = 0; i < sim.ds.size(); ++i)
      truth << sim.ds.individual_key(i) << ',' << sim.ds.period()[i] << ',' << format_double(sim.truth.true_cate[i])
            << ',' << format_double(sim.truth.y0[i]) << ',' << format_double(sim.truth.y1[i]) << '\n';
    write_text(dir / "truth.csv", truth.str());
  } else {
    MonteCarloConfig mc;
    mc.dgps.clear();
    std::istringstream names(o.dgp);
    for (std::string name; std::getline(names, name, ',');) mc.dgps.push_back(parse_dgp_kind(name));
    mc.sizes = o.sizes.empty() ? std::vector<std::size_t>{o.n} : o.sizes;
    mc.reps = o.reps;
    mc.replicates = o.B;
    mc.beta = o.beta;
    mc.gamma = o.gamma;
    mc.noise_sd = o.noise_sd;
    mc.p_treat = o.p_treat;
    mc.grid = parse_grid(o.grid);
    mc.ties = parse_ties(o.ties);
    mc.seed = o.seed;
    const auto cells = run_monte_carlo(mc, exec);
    ReportTable t;
    t.title = "Rejection rates at the 5% level";
    t.corner = "Hypothesis";
    for (const char* variant : {"uncentered", "re-centered"})
      for (std::size_t n : mc.sizes) t.columns.push_back("N=" + std::to_string(n) + " " + variant);
    for (int hypothesis = 0; hypothesis < 2; ++hypothesis)
      for (DgpKind kind : mc.dgps) {
        ReportRow row{(hypothesis ? "H0- " : "H0+ ") + to_string(kind), {}};
        for (int centered = 0; centered < 2; ++centered)
          for (const auto& c : cells) {
            if (c.dgp != kind) continue;
            const double rate = hypothesis ? (centered ? c.reject_minus_recentered : c.reject_minus_uncentered)
                                           : (centered ? c.reject_plus_recentered : c.reject_plus_uncentered);
            row.cells.push_back(format_fixed(rate, 3));
          }
        t.rows.push_back(row);
      }
    t.footnote = std::to_string(o.reps) + " Monte Carlo repetitions, " + std::to_string(o.B) +
                 " bootstrap replicates each, OLS refitted on every bootstrap sample, " + o.ties +
                 " exceedance count.";
    write_table(dir, "monte_carlo", t);
  }
  write_manifest(dir, sub);
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitOptions {
  DataOptions data;
  ModelOptions model;
  std::string curve_running;
  std::string curve_subgroup = "all";
  double curve_cap = 0.0;
  std::size_t curve_B = 0;
};

int run_fit(const Global& g, const FitOptions& o, const CLI::App* sub) {
  const fs::path dir = output_dir(g);
  const ExecPolicy exec{g.workers};
  const PanelDataset ds = o.data.load();
  const PipelineConfig cfg = o.model.config();
  const auto result = estimate_cates(ds, cfg, o.model.seed, exec);
  write_text(dir / "cates.csv", cates_csv(ds, result.cates.values));
  write_text(dir / "model.txt", result.model_summary);
  if (result.nuisance) {
    std::ostringstream n;
    write_nuisance_csv(ds, *result.nuisance, n);
    write_text(dir / "nuisance.csv", n.str());
  }
  if (!o.curve_running.empty()) {
    const auto col = ds.covariate_index(o.curve_running);
    if (!col) throw ConfigError("cli", "unknown running variable '" + o.curve_running + "'");
    const auto running = ds.covariates().column(*col);
    const auto idx = apply_filter(ds, parse_subgroup(o.curve_subgroup, &ds));
    SmoothConfig sc;
    if (o.curve_cap > 0.0) sc.cap = o.curve_cap;
    if (o.curve_B > 0) sc.band = BootstrapPlan{o.curve_B, derive_seed(o.model.seed, "curve-band"), true, SupGrid::Exact};
    const auto curve = smooth_cates(result.cates.values, running, idx, sc, ds.cluster(), exec);
    std::ostringstream c;
    c << "running,effect,ci_low,ci_high\n";
    for (std::size_t j = 0; j < curve.grid.size(); ++j)
      c << format_double(curve.grid[j]) << ',' << format_double(curve.effect[j]) << ','
        << format_double(curve.ci_low[j]) << ',' << format_double(curve.ci_high[j]) << '\n';
    write_text(dir / "curve.csv", c.str());
  }
  write_manifest(dir, sub);
  return 0;
}

// ---------------------------------------------------------------- test

struct TestOptions {
  DataOptions data;
  ModelOptions model;
  std::vector<std::string> subgroups{"all"};
  std::string hypothesis = "both";
  std::size_t B = 1999;
  std::string recenter = "on";
  std::string refit = "full";
  std::string grid = "exact";
  std::string ties = "strict";
};

int run_test(const Global& g, const TestOptions& o, const CLI::App* sub) {
  const fs::path dir = output_dir(g);
  const ExecPolicy exec{g.workers};
  const PanelDataset ds = o.data.load();
  const PipelineConfig cfg = o.model.config();
  const auto result = estimate_cates(ds, cfg, o.model.seed, exec);
  const auto& cates = result.cates.values;
  std::vector<std::vector<std::size_t>> groups;
  for (const auto& s : o.subgroups) groups.push_back(apply_filter(ds, parse_subgroup(s, &ds)));
  const BootstrapPlan plan{o.B, derive_seed(o.model.seed, "dominance-test"), o.recenter == "on", parse_grid(o.grid),
                           parse_ties(o.ties)};
  const RefitFn refit = o.refit == "fixed" ? fixed_model_refit(cates) : pipeline_refit(cfg);
  const auto results = dominance_battery(cates, refit, ds, groups, plan, exec);

  ReportTable t;
  t.title = "Sign shares and dominance tests (" + result.cates.estimator + ")";
  t.corner = "";
  t.columns = o.subgroups;
  ReportRow pos{"Positive CATEs", {}}, neg{"Negative CATEs", {}}, pp{"p-value H0+", {}}, pm{"p-value H0-", {}},
      obs{"Observations", {}};
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const auto shares = sign_shares(cates, groups[k]);
    pos.cells.push_back(format_share(shares.pct_positive));
    neg.cells.push_back(format_share(shares.pct_negative));
    pp.cells.push_back(format_p(results[k].p_plus));
    pm.cells.push_back(format_p(results[k].p_minus));
    obs.cells.push_back(std::to_string(groups[k].size()));
    warn(results[k].warning);
  }
  t.rows = {pos, neg};
  if (o.hypothesis != "h-minus") t.rows.push_back(pp);
  if (o.hypothesis != "h-plus") t.rows.push_back(pm);
  t.rows.push_back(obs);
  t.footnote = "Exact zero CATEs count as positive. " + std::to_string(o.B) + " clustered bootstrap replicates (" +
               (o.recenter == "on" ? "re-centered" : "uncentered") + ", " + o.refit + " refit).";
  write_table(dir, "test_results", t);
  write_text(dir / "cates.csv", cates_csv(ds, cates));
  write_manifest(dir, sub);
  return 0;
}

// ---------------------------------------------------------------- qte-compare

struct QteOptions {
  DataOptions data;
  ModelOptions model;
  std::string taus;
  std::size_t B = 499;
  std::string refit = "full";
  std::string recenter = "on";
};

int run_qte(const Global& g, const QteOptions& o, const CLI::App* sub) {
  const fs::path dir = output_dir(g);
  const ExecPolicy exec{g.workers};
  const PanelDataset ds = o.data.load();
  const PipelineConfig cfg = o.model.config();
  const auto taus = parse_taus(o.taus);
  const auto curve = qte(ds, taus);
  const auto band = qte_band(ds, taus, BootstrapPlan{o.B, derive_seed(o.model.seed, "qte-band")}, exec);
  std::ostringstream q;
  q << "tau,q1,q0,qte,ci_low,ci_high\n";
  for (std::size_t j = 0; j < taus.size(); ++j)
    q << format_double(taus[j]) << ',' << format_double(curve.q1[j]) << ',' << format_double(curve.q0[j]) << ','
      << format_double(curve.qte[j]) << ',' << format_double(band[j].low) << ',' << format_double(band[j].high)
      << '\n';
  write_text(dir / "qte.csv", q.str());

  const auto result = estimate_cates(ds, cfg, o.model.seed, exec);
  const auto& cates = result.cates.values;
  const RefitFn refit = o.refit == "fixed" ? fixed_model_refit(cates) : pipeline_refit(cfg);
  const BootstrapPlan plan{o.B, derive_seed(o.model.seed, "ks-test"), o.recenter == "on"};
  const auto ks = ks_nesting_test(ds, cates, refit, plan, exec);
  warn(ks.warning);
  ReportTable t;
  t.title = "Nesting tests of CATE-implied and actual positive outcome distributions (" + result.cates.estimator + ")";
  t.corner = "";
  t.columns = {"Y(1)", "Y(0)", "Joint"};
  t.rows = {{"KS statistic", {format_fixed(ks.ks_treated, 3), format_fixed(ks.ks_control, 3), format_fixed(ks.ks_joint, 3)}},
            {"p-value", {format_p(ks.p_treated), format_p(ks.p_control), format_p(ks.p_joint)}}};
  t.footnote = std::to_string(ks.replicates) + " clustered bootstrap replicates (" + o.refit + " refit).";
  write_table(dir, "ks", t);
  write_text(dir / "cates.csv", cates_csv(ds, cates));
  write_manifest(dir, sub);
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportOptions {
  std::string data;
  std::string table;
  DataOptions schema;
};

int run_report(const Global& g, const ReportOptions& o, const CLI::App* sub) {
  const fs::path dir = output_dir(g);
  if (o.data.empty() && o.table.empty()) throw ConfigError("cli", "report needs --data or --table");
  if (!o.data.empty()) {
    DataOptions d = o.schema;
    d.path = o.data;
    const auto rows = balance_table(d.load());
    ReportTable t;
    t.title = "Balance by treatment arm";
    t.corner = "Variable";
    t.columns = {"Mean (treated)", "SD (treated)", "Mean (control)", "SD (control)", "Std. diff."};
    for (const auto& r : rows)
      t.rows.push_back({r.variable,
                        {format_fixed(r.mean_treated, 2), format_fixed(r.sd_treated, 2), format_fixed(r.mean_control, 2),
                         format_fixed(r.sd_control, 2), format_fixed(r.std_difference, 2)}});
    t.footnote = "Standardized differences in percent, population standard deviations.";
    write_table(dir, "balance", t);
  }
  if (!o.table.empty()) {
    std::ifstream in(o.table);
    if (!in) throw SchemaError("cli", "cannot open '" + o.table + "'");
    ReportTable t;
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("cli", "empty table '" + o.table + "'");
    auto header = csv::split_csv_line(line);
    t.corner = header.front();
    t.columns.assign(header.begin() + 1, header.end());
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto cells = csv::split_csv_line(line);
      ReportRow r{cells.front(), {cells.begin() + 1, cells.end()}};
      t.rows.push_back(std::move(r));
    }
    const std::string stem = fs::path(o.table).stem().string();
    const std::string md = render_report(t, ReportFormat::Markdown);
    write_text(dir / (stem + ".md"), md);
    std::cout << md;
  }
  write_manifest(dir, sub);
  return 0;
}

// ---------------------------------------------------------------- score

struct ScoreOptions {
  DataOptions data;
  ModelOptions model;
  std::string nuisance;
  std::string kind = "orthogonal";
  double p_marginal = 0.0;
  std::size_t B = 1999;
};

int run_score(const Global& g, const ScoreOptions& o, const CLI::App* sub) {
  const fs::path dir = output_dir(g);
  const ExecPolicy exec{g.workers};
  const PanelDataset ds = o.data.load();
  ScoreVector sv;
  if (o.kind == "unadjusted") {
    sv = unadjusted_score(ds, o.p_marginal > 0.0 ? std::optional<double>(o.p_marginal) : std::nullopt);
  } else {
    NuisanceFit nf;
    if (!o.nuisance.empty()) {
      std::ifstream in(o.nuisance);
      if (!in) throw SchemaError("cli", "cannot open '" + o.nuisance + "'");
      nf = read_nuisance_csv(ds, in);
    } else {
      const PipelineConfig cfg = o.model.config();
      NuisanceConfig nc = cfg.nuisance;
      nc.forest.seed = derive_seed(o.model.seed, "nuisance");
      nf = cross_fit_nuisances(ds, resolve_covariate_set(ds, cfg.covariate_set, cfg.covariate_sets), nc, exec);
      std::ostringstream n;
      write_nuisance_csv(ds, nf, n);
      write_text(dir / "nuisance.csv", n.str());
    }
    sv = orthogonal_score(ds, nf);
  }
  std::ostringstream s;
  s << "individual_id,period,score\n";
  for (std::size_t i = 0; i < ds.size(); ++i)
    s << ds.individual_key(i) << ',' << ds.period()[i] << ',' << format_double(sv.values[i]) << '\n';
  write_text(dir / "score.csv", s.str());
  const auto a = ate(sv, BootstrapPlan{o.B, derive_seed(o.model.seed, "ate")}, exec);
  write_text(dir / "ate.csv", "estimate,ci_low,ci_high\n" + format_double(a.estimate) + ',' + format_double(a.ci_low) +
                                  ',' + format_double(a.ci_high) + '\n');
  write_manifest(dir, sub);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional average treatment effect estimation and sign tests"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI file; [command] sections set that command's options, flags win");
  Global g;
  app.add_option("--workers", g.workers, "Worker threads (results do not depend on it)")->capture_default_str();
  app.add_option("--out", g.out, "Output directory (default: $HTE_OUT_DIR or ./out)");

  SimulateOptions so;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset or run the Monte Carlo harness");
  sim->add_option("--dgp", so.dgp, "dgp1, dgp2, kink or shift; the Monte Carlo takes a comma list of dgp1, dgp2")->capture_default_str();
  sim->add_option("--n", so.n, "Individuals")->capture_default_str();
  sim->add_option("--reps", so.reps, "Monte Carlo repetitions (0 writes one dataset)")->capture_default_str();
  sim->add_option("--B", so.B, "Bootstrap replicates per repetition")->capture_default_str();
  sim->add_option("--sizes", so.sizes, "Sample sizes for the Monte Carlo (default: --n)")->delimiter(',');
  sim->add_option("--sup-grid", so.grid, "exact or sample supremum grid")
      ->check(CLI::IsMember({"exact", "sample"}))
      ->capture_default_str();
  sim->add_option("--ties", so.ties, "strict (D_b > D), weak (D_b >= D), or weak-minus (weak for H0- only)")
      ->check(CLI::IsMember({"strict", "weak", "weak-minus"}))
      ->capture_default_str();
  sim->add_option("--beta", so.beta)->capture_default_str();
  sim->add_option("--gamma", so.gamma)->capture_default_str();
  sim->add_option("--noise-sd", so.noise_sd)->capture_default_str();
  sim->add_option("--p-treat", so.p_treat)->capture_default_str();
  sim->add_option("--effect-sd", so.effect_sd, "Idiosyncratic effect sd (shift)")->capture_default_str();
  sim->add_option("--seed", so.seed)->capture_default_str();
  sim->callback([&] { std::exit(run_simulate(g, so, sim)); });

  FitOptions fo;
  auto* fit = app.add_subcommand("fit", "Estimate CATEs");
  add_data_options(fit, fo.data);
  add_model_options(fit, fo.model);
  fit->add_option("--curve-running", fo.curve_running, "Covariate for a smoothed effect curve");
  fit->add_option("--curve-subgroup", fo.curve_subgroup, "Rows entering the curve")->capture_default_str();
  fit->add_option("--curve-cap", fo.curve_cap, "Upper end of the curve grid");
  fit->add_option("--curve-B", fo.curve_B, "Bootstrap replicates for the curve band (0: none)")->capture_default_str();
  fit->callback([&] { std::exit(run_fit(g, fo, fit)); });

  TestOptions to;
  auto* test = app.add_subcommand("test", "Sign shares and dominance tests per subgroup");
  add_data_options(test, to.data);
  add_model_options(test, to.model);
  test->add_option("--subgroup", to.subgroups, "arm[:band[:threshold]][@column], repeatable")->capture_default_str();
  test->add_option("--hypothesis", to.hypothesis, "h-plus, h-minus or both")
      ->check(CLI::IsMember({"h-plus", "h-minus", "both"}))
      ->capture_default_str();
  test->add_option("--B", to.B, "Bootstrap replicates")->capture_default_str();
  test->add_option("--recenter", to.recenter, "on or off")->check(CLI::IsMember({"on", "off"}))->capture_default_str();
  test->add_option("--refit", to.refit, "full or fixed")->check(CLI::IsMember({"full", "fixed"}))->capture_default_str();
  test->add_option("--sup-grid", to.grid, "exact or sample")->check(CLI::IsMember({"exact", "sample"}))->capture_default_str();
  test->add_option("--ties", to.ties, "strict (D_b > D), weak (D_b >= D), or weak-minus (weak for H0- only)")
      ->check(CLI::IsMember({"strict", "weak", "weak-minus"}))
      ->capture_default_str();
  test->callback([&] { std::exit(run_test(g, to, test)); });

  QteOptions qo;
  auto* qc = app.add_subcommand("qte-compare", "Quantile treatment effects and nesting tests");
  add_data_options(qc, qo.data);
  add_model_options(qc, qo.model);
  qc->add_option("--taus", qo.taus, "lo:hi:step or a comma list (default 0.05:0.95:0.05)");
  qc->add_option("--B", qo.B, "Bootstrap replicates")->capture_default_str();
  qc->add_option("--refit", qo.refit, "full or fixed")->check(CLI::IsMember({"full", "fixed"}))->capture_default_str();
  qc->add_option("--recenter", qo.recenter, "on or off")->check(CLI::IsMember({"on", "off"}))->capture_default_str();
  qc->callback([&] { std::exit(run_qte(g, qo, qc)); });

  ReportOptions ro;
  auto* rep = app.add_subcommand("report", "Balance table or markdown rendering of a result table");
  rep->add_option("--data", ro.data, "Panel CSV for a balance table");
  rep->add_option("--table", ro.table, "Result CSV to render as markdown");
  rep->add_option("--id-col", ro.schema.id)->capture_default_str();
  rep->add_option("--period-col", ro.schema.period)->capture_default_str();
  rep->add_option("--treatment-col", ro.schema.treatment)->capture_default_str();
  rep->add_option("--outcome-col", ro.schema.outcome)->capture_default_str();
  rep->callback([&] { std::exit(run_report(g, ro, rep)); });

  ScoreOptions sco;
  auto* sc = app.add_subcommand("score", "Per-row scores and the average treatment effect");
  add_data_options(sc, sco.data);
  add_model_options(sc, sco.model);
  sc->add_option("--nuisance", sco.nuisance, "Nuisance CSV (default: cross-fit now)");
  sc->add_option("--kind", sco.kind, "orthogonal or unadjusted")
      ->check(CLI::IsMember({"orthogonal", "unadjusted"}))
      ->capture_default_str();
  sc->add_option("--p-marginal", sco.p_marginal, "Treatment probability for the unadjusted score");
  sc->add_option("--B", sco.B, "Bootstrap replicates for the interval")->capture_default_str();
  sc->callback([&] { std::exit(run_score(g, sco, sc)); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const hte::Error& e) {
    std::string stage = "?";
    for (const auto* s : app.get_subcommands()) stage = s->get_name();
    std::string message = e.what();
    if (message.rfind(e.module() + ": ", 0) == 0) message.erase(0, e.module().size() + 2);
    std::cerr << "error [" << e.module() << "] " << stage << ": " << message << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
