#include "parcmi/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include "parcmi/error.hpp"

namespace parcmi {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  fail(ErrorKind::Config, "column '" + std::string(name) + "' not found in the input header");
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (!have_header) {
      std::string_view hv = line;
      if (hv.size() >= 3 && hv.substr(0, 3) == "\xEF\xBB\xBF") hv.remove_prefix(3);  // UTF-8 BOM
      t.header = split(hv);
      std::set<std::string> seen;
      for (const auto& h : t.header)
        if (!seen.insert(h).second) fail(ErrorKind::Data, "duplicate column '" + h + "' in header");
      have_header = true;
      continue;
    }
    auto cells = split(line);
    if (cells.size() != t.header.size())
      fail(ErrorKind::Data, "line " + std::to_string(lineno) + ": expected " +
                                std::to_string(t.header.size()) + " fields, found " +
                                std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) fail(ErrorKind::Data, "CSV input is empty (a header row is required)");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open input file '" + path + "'");
  return read_csv(in);
}

void write_csv(std::ostream& out, const CsvTable& table) {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) out << (j ? "," : "") << cells[j];
    out << '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view cell) {
  cell = trim(cell);
  std::string_view body = cell;
  if (!body.empty() && body.front() == '+') body.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(body.data(), body.data() + body.size(), v);
  if (body.empty() || res.ec != std::errc() || res.ptr != body.data() + body.size())
    fail(ErrorKind::Data, "'" + std::string(cell) + "' is not a number");
  return v;
}

Dataset dataset_from_table(const CsvTable& table, const ColumnMapping& mapping) {
  const std::size_t jw = table.column(mapping.observed);
  const std::size_t jd = table.column(mapping.event);
  const bool has_y = !mapping.outcome.empty();
  const std::size_t jy = has_y ? table.column(mapping.outcome) : 0;
  std::vector<std::size_t> jz;
  for (const auto& c : mapping.covariates) jz.push_back(table.column(c));

  Dataset d;
  d.outcome_name = has_y ? mapping.outcome : "y";
  d.observed_name = mapping.observed;
  d.event_name = mapping.event;
  d.covariate_names = mapping.covariates;
  std::vector<double> z(jz.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = "line " + std::to_string(table.line_numbers[i]);
    auto num = [&](std::size_t j, const std::string& col) {
      try {
        const double v = parse_double(row[j]);
        if (!std::isfinite(v)) fail(ErrorKind::Data, "value must be finite");
        return v;
      } catch (const Error& e) {
        fail(ErrorKind::Data, where + ", column '" + col + "': " + e.what());
      }
    };
    const double y = has_y ? num(jy, mapping.outcome) : 0.0;
    const double w = num(jw, mapping.observed);
    const double dv = num(jd, mapping.event);
    if (dv != 0.0 && dv != 1.0)
      fail(ErrorKind::Data, where + ", column '" + mapping.event + "': event indicator must be 0 or 1, got '" +
                                row[jd] + "'");
    for (std::size_t k = 0; k < jz.size(); ++k) z[k] = num(jz[k], mapping.covariates[k]);
    d.add_row(y, w, static_cast<int>(dv), z);
  }
  return d;
}

CsvTable dataset_to_table(const Dataset& data) {
  CsvTable t;
  t.header = {data.outcome_name, data.observed_name, data.event_name};
  t.header.insert(t.header.end(), data.covariate_names.begin(), data.covariate_names.end());
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<std::string> row{format_double(data.y[i]), format_double(data.w[i]),
                                 std::to_string(data.delta[i])};
    for (double v : data.covariates(i)) row.push_back(format_double(v));
    t.rows.push_back(std::move(row));
    t.line_numbers.push_back(i + 2);
  }
  return t;
}

CsvTable imputed_to_table(const CsvTable& source, const ColumnMapping& mapping,
                          std::span<const ImputedDataset> imputations) {
  const std::size_t jw = source.column(mapping.observed);
  CsvTable t;
  t.header = source.header;
  t.header.emplace_back("imputed");
  t.header.emplace_back("imputation_id");
  for (std::size_t b = 0; b < imputations.size(); ++b) {
    const ImputedDataset& imp = imputations[b];
    for (std::size_t i = 0; i < imp.data.size(); ++i) {
      const std::size_t src = imp.source_rows.empty() ? i : imp.source_rows[i];
      if (src >= source.rows.size())
        fail(ErrorKind::Dimension, "imputed dataset does not match the source table");
      std::vector<std::string> row = source.rows[src];
      if (imp.imputed[i]) row[jw] = format_double(imp.data.w[i]);
      row.push_back(imp.imputed[i] ? "1" : "0");
      row.push_back(std::to_string(b + 1));
      t.rows.push_back(std::move(row));
      t.line_numbers.push_back(t.rows.size() + 1);
    }
  }
  return t;
}

// ---- JSON -------------------------------------------------------------------

json to_json(const FamilySpec& spec) {
  json j;
  j["family"] = std::string(to_string(spec.family));
  j["shape"] = spec.shape ? json(*spec.shape) : json(nullptr);
  j["coefficients"] = spec.coefficients;
  j["cutpoints"] = spec.cutpoints;
  j["baseline_log_rates"] = spec.baseline_log_rates;
  j["link"] = spec.link == Link::Aft ? "aft" : "ph";
  return j;
}

FamilySpec family_spec_from_json(const json& j) {
  try {
    FamilySpec s;
    s.family = family_from_string(j.at("family").get<std::string>());
    if (j.contains("shape") && !j["shape"].is_null()) s.shape = j["shape"].get<double>();
    if (j.contains("coefficients")) s.coefficients = j["coefficients"].get<std::vector<double>>();
    if (j.contains("cutpoints")) s.cutpoints = j["cutpoints"].get<std::vector<double>>();
    if (j.contains("baseline_log_rates"))
      s.baseline_log_rates = j["baseline_log_rates"].get<std::vector<double>>();
    if (j.contains("link")) {
      const auto link = j["link"].get<std::string>();
      if (link == "aft") s.link = Link::Aft;
      else if (link == "ph") s.link = Link::ProportionalHazards;
      else fail(ErrorKind::Config, "link must be 'aft' or 'ph'");
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("invalid family spec JSON: ") + e.what());
  }
}

json to_json(const FittedImputationModel& m) {
  json j = to_json(m.spec);
  j["loglik"] = m.loglik;
  j["k"] = m.k;
  j["n"] = m.n;
  j["aic"] = m.aic;
  j["bic"] = m.bic;
  j["converged"] = m.converged;
  j["iterations"] = m.iterations;
  j["score_norm"] = m.score_norm;
  json params = json::array();
  const bool have_cov = m.covariance.size() > 0;
  for (std::size_t i = 0; i < m.parameter_names.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    params.push_back({{"name", m.parameter_names[i]},
                      {"estimate", m.theta[ii]},
                      {"se", have_cov ? json(std::sqrt(m.covariance(ii, ii))) : json(nullptr)}});
  }
  j["parameters"] = params;
  return j;
}

json to_json(const OlsFit& fit, double confidence) {
  const OlsFit fits[1] = {fit};
  json j = to_json(pool(fits, confidence));
  j["sigma2"] = fit.sigma2;
  j["n"] = fit.n;
  j["p"] = fit.p;
  return j;
}

json to_json(const PooledFit& fit) {
  json coef = json::array();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    coef.push_back({{"name", fit.names[i]},
                    {"estimate", fit.beta_bar[ii]},
                    {"se", fit.se[ii]},
                    {"ci_lower", fit.ci_lower[ii]},
                    {"ci_upper", fit.ci_upper[ii]},
                    {"within", fit.within[ii]},
                    {"between", fit.between[ii]},
                    {"df", std::isfinite(fit.df[ii]) ? json(fit.df[ii]) : json("inf")}});
  }
  return {{"coef", coef}, {"B", fit.B}, {"confidence", fit.confidence}};
}

json to_json(const MethodSummary& s) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"used", s.used},         {"bias", s.bias},
          {"pct_bias", s.pct_bias}, {"ese", opt(s.ese)},
          {"ase", s.ase},           {"cp", s.cp},
          {"re", opt(s.re)},        {"runtime_mean", s.runtime_mean},
          {"runtime_median", s.runtime_median}};
}

json to_json(const SimDesign& d) {
  return {{"n", d.n},
          {"censor_rate", d.censor_rate},
          {"B", d.B},
          {"replicates", d.replicates},
          {"x_model", to_json(d.x_model)},
          {"family_fit", std::string(to_string(d.family_fit))},
          {"strategy", std::string(to_string(d.strategy))},
          {"seed", d.seed},
          {"workers", d.workers},
          {"flavor", std::string(to_string(d.flavor))},
          {"confidence", d.confidence},
          {"outcome_beta", d.outcome_beta},
          {"fit", {{"tol", d.fit.tol}, {"max_iter", d.fit.max_iter},
                   {"pwe_intervals", d.fit.pwe_intervals}}}};
}

json to_json(const SimResult& r) {
  return {{"design", to_json(r.design)},
          {"excluded", r.excluded},
          {"censoring_fraction", r.censoring_fraction},
          {"full_cohort", to_json(r.full)},
          {"method", to_json(r.method)}};
}

json to_json(const SelectionResult& r) {
  json rows = json::array();
  for (std::size_t i = 0; i < r.candidates.size(); ++i)
    rows.push_back({{"family", std::string(to_string(r.candidates[i]))},
                    {"aic_first", r.aic_first[i]},
                    {"bic_first", r.bic_first[i]}});
  return {{"candidates", rows}, {"used", r.used}, {"excluded", r.excluded}, {"errors", r.errors}};
}

SimDesign sim_design_from_json(const json& j, SimDesign d) {
  if (!j.is_object()) fail(ErrorKind::Config, "design must be a JSON object");
  static const std::set<std::string> known = {
      "n", "censor_rate", "B", "replicates", "x_model", "family_fit", "strategy", "seed",
      "workers", "flavor", "confidence", "outcome_beta", "fit"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) fail(ErrorKind::Config, "unknown design key '" + key + "'");
  try {
    if (j.contains("n")) d.n = j["n"].get<std::size_t>();
    if (j.contains("censor_rate")) d.censor_rate = j["censor_rate"].get<double>();
    if (j.contains("B")) d.B = j["B"].get<std::size_t>();
    if (j.contains("replicates")) d.replicates = j["replicates"].get<std::size_t>();
    if (j.contains("x_model")) d.x_model = family_spec_from_json(j["x_model"]);
    if (j.contains("family_fit")) d.family_fit = family_from_string(j["family_fit"].get<std::string>());
    if (j.contains("strategy")) d.strategy = strategy_from_string(j["strategy"].get<std::string>());
    if (j.contains("seed")) d.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) d.workers = j["workers"].get<std::size_t>();
    if (j.contains("flavor")) d.flavor = mi_flavor_from_string(j["flavor"].get<std::string>());
    if (j.contains("confidence")) d.confidence = j["confidence"].get<double>();
    if (j.contains("outcome_beta")) d.outcome_beta = j["outcome_beta"].get<std::vector<double>>();
    if (j.contains("fit")) {
      const auto& f = j["fit"];
      if (f.contains("tol")) d.fit.tol = f["tol"].get<double>();
      if (f.contains("max_iter")) d.fit.max_iter = f["max_iter"].get<int>();
      if (f.contains("pwe_intervals")) d.fit.pwe_intervals = f["pwe_intervals"].get<std::size_t>();
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("invalid design JSON: ") + e.what());
  }
  d.validate();
  return d;
}

}  // namespace parcmi
