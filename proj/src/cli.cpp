#include "parcmi/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "parcmi/analysis.hpp"
#include "parcmi/io.hpp"
#include "parcmi/simlab.hpp"

namespace parcmi::cli {

using nlohmann::json;

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Unsupported: return kUsage;
    case ErrorKind::Data:
    case ErrorKind::Dimension:
    case ErrorKind::Domain: return kData;
    default: return kNumeric;
  }
}

namespace {

const Family kPositiveCandidates[] = {Family::Exponential, Family::Weibull, Family::LogNormal,
                                   Family::LogLogistic, Family::PiecewiseExponential};

struct Options {
  std::string input;
  std::string outcome;
  std::string observed = "w";
  std::string event = "delta";
  std::vector<std::string> covariates;
  std::string family;
  std::string strategy;
  std::size_t B = 1;
  std::uint64_t seed = 0;
  std::string criterion = "aic";
  std::size_t workers = 0;
  std::string output;
  std::string format;
  std::string flavor = "bootstrap";
  double confidence = 0.95;
  std::size_t pwe_intervals = 10;
  double tol = 1e-8;
  int max_iter = 100;
  // simulate
  std::string preset;
  std::string design;
  std::size_t n = 1000;
  double censor_rate = 0.7;
  std::size_t replicates = 1000;
  std::vector<std::string> candidates;
};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string env_name(const std::string& flag) {
  std::string s = "PARCMI_";
  for (char c : flag) s.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(c)));
  return s;
}

/// Output sink: --output file when given, otherwise the command's stdout.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) fail(ErrorKind::Config, "cannot open output file '" + path + "'");
      os_ = file_.get();
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) fail(ErrorKind::Config, "cannot open output file '" + path + "'");
  f << text;
}

FitOptions fit_options(const Options& o) {
  FitOptions f;
  f.tol = o.tol;
  f.max_iter = o.max_iter;
  f.pwe_intervals = o.pwe_intervals;
  return f;
}

std::vector<Family> parse_families(const std::string& spec) {
  if (spec.empty() || lower(spec) == "all")
    return {std::begin(kPositiveCandidates), std::end(kPositiveCandidates)};
  std::vector<Family> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(family_from_string(item));
  if (out.empty()) fail(ErrorKind::Config, "no family given");
  return out;
}

Criterion parse_criterion(const std::string& s) {
  const auto c = lower(s);
  if (c == "aic") return Criterion::AIC;
  if (c == "bic") return Criterion::BIC;
  fail(ErrorKind::Config, "criterion must be aic or bic");
}

ColumnMapping mapping(const Options& o) {
  return {o.outcome, o.observed, o.event, o.covariates};
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

// ---- fit ----------------------------------------------------------------------

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
  const CsvTable table = read_csv_file(o.input);
  ColumnMapping m = mapping(o);
  m.outcome.clear();  // the outcome is not needed to fit the imputation model
  const Dataset data = dataset_from_table(table, m);
  const auto families = parse_families(o.family);
  const Criterion crit = parse_criterion(o.criterion);
  const ModelSelection sel = select_model(families, data.censored_sample(), crit, fit_options(o));
  for (const auto& [f, why] : sel.failures) err << "warning: " << to_string(f) << ": " << why << '\n';

  Sink sink(o.output, out);
  const std::string format = o.format.empty() ? "text" : lower(o.format);
  if (format == "json") {
    json j;
    j["criterion"] = lower(o.criterion);
    j["models"] = json::array();
    for (const auto& mdl : sel.ranked) j["models"].push_back(to_json(mdl));
    j["failures"] = json::array();
    for (const auto& [f, why] : sel.failures)
      j["failures"].push_back({{"family", std::string(to_string(f))}, {"error", why}});
    *sink << j.dump(2) << '\n';
  } else if (format == "csv") {
    *sink << "family,k,loglik,aic,bic,converged\n";
    for (const auto& mdl : sel.ranked)
      *sink << to_string(mdl.spec.family) << ',' << mdl.k << ',' << format_double(mdl.loglik)
            << ',' << format_double(mdl.aic) << ',' << format_double(mdl.bic) << ','
            << (mdl.converged ? 1 : 0) << '\n';
  } else if (format == "text") {
    *sink << std::left << std::setw(14) << "family" << std::right << std::setw(4) << "k"
          << std::setw(16) << "logLik" << std::setw(16) << "AIC" << std::setw(16) << "BIC" << '\n';
    for (const auto& mdl : sel.ranked)
      *sink << std::left << std::setw(14) << to_string(mdl.spec.family) << std::right
            << std::setw(4) << mdl.k << std::setw(16) << fmt(mdl.loglik, 3) << std::setw(16)
            << fmt(mdl.aic, 3) << std::setw(16) << fmt(mdl.bic, 3) << '\n';
  } else {
    fail(ErrorKind::Config, "fit: --format must be text, csv or json");
  }
  return kOk;
}

// ---- impute / analyze -----------------------------------------------------------

std::vector<ImputedDataset> run_imputation(const Options& o, const Dataset& data) {
  const Family family = o.family.empty() ? Family::LogNormal : family_from_string(o.family);
  ImputeOptions io;
  io.fit = fit_options(o);
  io.condmean.strategy =
      o.strategy.empty() ? default_strategy(family) : strategy_from_string(o.strategy);
  MIConfig cfg;
  cfg.B = o.B;
  cfg.seed = o.seed;
  cfg.bootstrap = o.B > 1;
  cfg.flavor = mi_flavor_from_string(lower(o.flavor));
  cfg.workers = o.workers;
  return impute_multiple(data, family, io, cfg);
}

int cmd_impute(const Options& o, std::ostream& out) {
  const CsvTable table = read_csv_file(o.input);
  const ColumnMapping m = mapping(o);
  const Dataset data = dataset_from_table(table, m);
  const auto imputations = run_imputation(o, data);
  Sink sink(o.output, out);
  write_csv(*sink, imputed_to_table(table, m, imputations));
  return kOk;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  if (o.outcome.empty()) fail(ErrorKind::Config, "analyze: --outcome is required");
  const CsvTable table = read_csv_file(o.input);
  const Dataset data = dataset_from_table(table, mapping(o));
  const auto imputations = run_imputation(o, data);
  std::vector<OlsFit> fits;
  for (const auto& imp : imputations) fits.push_back(ols(imp));
  const PooledFit pooled = pool(fits, o.confidence);

  Sink sink(o.output, out);
  const std::string format = o.format.empty() ? "json" : lower(o.format);
  if (format == "json") {
    *sink << to_json(pooled).dump(2) << '\n';
  } else if (format == "csv") {
    *sink << "name,estimate,se,ci_lower,ci_upper\n";
    for (std::size_t i = 0; i < pooled.names.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      *sink << pooled.names[i] << ',' << format_double(pooled.beta_bar[k]) << ','
            << format_double(pooled.se[k]) << ',' << format_double(pooled.ci_lower[k]) << ','
            << format_double(pooled.ci_upper[k]) << '\n';
    }
  } else {
    fail(ErrorKind::Config, "analyze: --format must be json or csv");
  }
  return kOk;
}

// ---- simulate -------------------------------------------------------------------

struct Cell {
  std::string label;
  SimDesign design;
  std::vector<Family> candidates;  // non-empty: model-selection study
};

std::vector<Cell> preset_cells(const std::string& name) {
  std::vector<Cell> cells;
  SimDesign base;
  const std::string p = lower(name);
  if (p == "smoke") {
    base.n = 200;
    base.replicates = 2;
    cells.push_back({"smoke", base, {}});
  } else if (p == "table1") {
    for (double q : {0.2, 0.7})
      for (std::size_t n : {500, 1000, 2500}) {
        SimDesign d = base;
        d.censor_rate = q;
        d.n = n;
        cells.push_back({std::string(q < 0.5 ? "light" : "heavy") + "_n" + std::to_string(n), d, {}});
      }
  } else if (p == "table2") {
    for (std::size_t B : {1, 5, 10, 20, 40}) {
      SimDesign d = base;
      d.B = B;
      cells.push_back({"B" + std::to_string(B), d, {}});
    }
  } else if (p == "table3") {
    for (Family f : kPositiveCandidates) {
      SimDesign d = base;
      d.family_fit = f;
      cells.push_back({std::string(to_string(f)), d, {}});
    }
  } else if (p == "selection") {
    cells.push_back({"selection", base, {std::begin(kPositiveCandidates), std::end(kPositiveCandidates)}});
  } else if (p == "runtime") {
    for (Strategy s : kAllStrategies) {
      SimDesign d = base;
      d.n = 2500;
      d.replicates = 20;
      d.strategy = s;
      cells.push_back({std::string(to_string(s)), d, {}});
    }
  } else {
    fail(ErrorKind::Config, "unknown preset '" + name +
                                "' (expected smoke, table1, table2, table3, selection, runtime)");
  }
  return cells;
}

Cell cell_from_json(json j, const std::string& fallback_label) {
  Cell c;
  c.label = fallback_label;
  if (j.contains("label")) {
    c.label = j["label"].get<std::string>();
    j.erase("label");
  }
  if (j.contains("candidates")) {
    for (const auto& f : j["candidates"]) c.candidates.push_back(family_from_string(f.get<std::string>()));
    j.erase("candidates");
  }
  c.design = sim_design_from_json(j);
  return c;
}

std::vector<Cell> design_file_cells(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open design file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("design file is not valid JSON: ") + e.what());
  }
  std::vector<Cell> cells;
  if (j.contains("cells")) {
    std::size_t k = 0;
    for (const auto& cj : j["cells"]) cells.push_back(cell_from_json(cj, "cell" + std::to_string(++k)));
  } else {
    cells.push_back(cell_from_json(j, "cell"));
  }
  return cells;
}

int cmd_simulate(const Options& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  if (!o.preset.empty() && !o.design.empty())
    fail(ErrorKind::Config, "simulate: use either --preset or --design, not both");
  std::vector<Cell> cells;
  if (!o.preset.empty()) cells = preset_cells(o.preset);
  else if (!o.design.empty()) cells = design_file_cells(o.design);
  else cells.push_back({"cell", SimDesign{}, {}});

  auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };
  auto env_given = [&](const char* name) {
    return !sub.get_option(name)->get_envname().empty() &&
           std::getenv(sub.get_option(name)->get_envname().c_str()) != nullptr;
  };
  auto set = [&](const char* name) { return given(name) || env_given(name); };
  for (Cell& c : cells) {
    SimDesign& d = c.design;
    if (set("--n")) d.n = o.n;
    if (set("--censor-rate")) d.censor_rate = o.censor_rate;
    if (set("--B")) d.B = o.B;
    if (set("--replicates")) d.replicates = o.replicates;
    if (set("--family")) d.family_fit = family_from_string(o.family);
    if (set("--strategy")) d.strategy = strategy_from_string(o.strategy);
    if (set("--seed")) d.seed = o.seed;
    if (set("--flavor")) d.flavor = mi_flavor_from_string(lower(o.flavor));
    if (set("--confidence")) d.confidence = o.confidence;
    if (set("--candidates")) {
      c.candidates.clear();
      for (const auto& f : o.candidates) c.candidates.push_back(family_from_string(f));
    }
    d.workers = o.workers;
    d.fit = fit_options(o);
    d.validate();
  }

  const std::string format = o.format.empty() ? "csv" : lower(o.format);
  if (format != "csv" && format != "json") fail(ErrorKind::Config, "simulate: --format must be csv or json");
  std::ostringstream summary_csv, selection_csv;
  json summary_json = json::array();
  bool have_cells = false, have_selection = false;
  for (const Cell& c : cells) {
    if (!c.candidates.empty()) {
      const SelectionResult r = run_selection_study(c.design, c.candidates);
      if (!have_selection) selection_csv << "label,family,aic_first,bic_first,used,excluded\n";
      have_selection = true;
      for (std::size_t i = 0; i < r.candidates.size(); ++i)
        selection_csv << c.label << ',' << to_string(r.candidates[i]) << ','
                      << format_double(r.aic_first[i]) << ',' << format_double(r.bic_first[i])
                      << ',' << r.used << ',' << r.excluded << '\n';
      json jr = to_json(r);
      jr["label"] = c.label;
      jr["design"] = to_json(c.design);
      summary_json.push_back(jr);
      for (const auto& e : r.errors) err << "warning: " << c.label << ": " << e << '\n';
      continue;
    }
    const SimResult r = run_cell(c.design);
    if (!have_cells) summary_csv << summary_csv_header() << '\n';
    have_cells = true;
    summary_csv << summary_csv_row(c.label, r) << '\n';
    json jr = to_json(r);
    jr["label"] = c.label;
    summary_json.push_back(jr);
    if (r.excluded > 0)
      err << "warning: " << c.label << ": " << r.excluded << " replicate(s) excluded\n";
    if (!o.output.empty()) write_file(o.output + "_" + c.label + "_replicates.csv", replicates_csv(r));
  }

  if (!o.output.empty()) {
    if (have_cells) write_file(o.output + "_summary.csv", summary_csv.str());
    if (have_selection) write_file(o.output + "_selection.csv", selection_csv.str());
    write_file(o.output + "_summary.json", summary_json.dump(2) + "\n");
  }
  if (format == "json") {
    out << summary_json.dump(2) << '\n';
  } else {
    out << summary_csv.str();
    if (have_cells && have_selection) out << '\n';
    out << selection_csv.str();
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Parametric conditional mean imputation for a censored covariate", "parcmi"};
  app.require_subcommand(1);

  auto add_columns = [&](CLI::App* s, bool with_outcome) {
    s->add_option("--input,-i", o.input, "input CSV file")->required();
    if (with_outcome) s->add_option("--outcome", o.outcome, "outcome column");
    s->add_option("--observed", o.observed, "observed (possibly censored) covariate column")
        ->capture_default_str();
    s->add_option("--event", o.event, "event indicator column (1 = uncensored)")
        ->capture_default_str();
    s->add_option("--covariates", o.covariates, "fully observed covariate columns")->delimiter(',');
  };
  auto add_fit = [&](CLI::App* s) {
    s->add_option("--pwe-intervals", o.pwe_intervals, "piecewise exponential intervals J")
        ->capture_default_str();
    s->add_option("--tol", o.tol, "score-norm convergence tolerance")->capture_default_str();
    s->add_option("--max-iter", o.max_iter, "Newton iteration cap")->capture_default_str();
  };
  auto add_mi = [&](CLI::App* s) {
    s->add_option("--strategy", o.strategy, "analytic | stab-mean | stab-nomean | integral");
    s->add_option("--B", o.B, "number of imputations")->capture_default_str();
    s->add_option("--seed", o.seed, "random seed")->capture_default_str();
    s->add_option("--flavor", o.flavor, "bootstrap | parametric | resample")->capture_default_str();
    s->add_option("--workers", o.workers, "worker threads (0 = all cores)")->capture_default_str();
  };

  CLI::App* fit = app.add_subcommand("fit", "fit imputation model(s) and rank by AIC/BIC");
  add_columns(fit, false);
  fit->add_option("--family", o.family, "family, comma list, or 'all'");
  fit->add_option("--criterion", o.criterion, "aic | bic")->capture_default_str();
  fit->add_option("--output,-o", o.output, "output file (default stdout)");
  fit->add_option("--format", o.format, "text | csv | json");
  add_fit(fit);

  CLI::App* imp = app.add_subcommand("impute", "write B imputed datasets stacked in one CSV");
  add_columns(imp, true);
  imp->add_option("--family", o.family, "imputation model family (default lognormal)");
  imp->add_option("--output,-o", o.output, "output file (default stdout)");
  add_mi(imp);
  add_fit(imp);

  CLI::App* ana = app.add_subcommand("analyze", "impute, fit OLS per imputation, pool by Rubin's rules");
  add_columns(ana, true);
  ana->add_option("--family", o.family, "imputation model family (default lognormal)");
  ana->add_option("--confidence", o.confidence, "confidence level")->capture_default_str();
  ana->add_option("--output,-o", o.output, "output file (default stdout)");
  ana->add_option("--format", o.format, "json | csv");
  add_mi(ana);
  add_fit(ana);

  CLI::App* sim = app.add_subcommand("simulate", "run simulation cells or a model-selection study");
  sim->add_option("--preset", o.preset, "smoke | table1 | table2 | table3 | selection | runtime");
  sim->add_option("--design", o.design, "design JSON file");
  sim->add_option("--n", o.n, "sample size");
  sim->add_option("--censor-rate", o.censor_rate, "exponential censoring rate q");
  sim->add_option("--replicates", o.replicates, "replicates per cell");
  sim->add_option("--family", o.family, "imputation model family");
  sim->add_option("--candidates", o.candidates, "families for a selection study")->delimiter(',');
  sim->add_option("--confidence", o.confidence, "confidence level");
  sim->add_option("--output,-o", o.output, "output prefix for summary/replicate files");
  sim->add_option("--format", o.format, "csv | json (stdout)");
  add_mi(sim);
  add_fit(sim);

  for (CLI::App* s : {fit, imp, ana, sim})
    for (CLI::Option* opt : s->get_options())
      if (!opt->get_lnames().empty() && opt->get_lnames().front() != "help")
        opt->envname(env_name(opt->get_lnames().front()));

  std::vector<std::string> argv_store{"parcmi"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(o, out, err);
    if (imp->parsed()) return cmd_impute(o, out);
    if (ana->parsed()) return cmd_analyze(o, out);
    if (sim->parsed()) return cmd_simulate(o, *sim, out, err);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kUsage;
}

}  // namespace parcmi::cli
