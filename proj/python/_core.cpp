#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "parcmi/analysis.hpp"
#include "parcmi/error.hpp"
#include "parcmi/condmean.hpp"
#include "parcmi/io.hpp"
#include "parcmi/simlab.hpp"

namespace py = pybind11;
using namespace parcmi;

namespace {

Dataset make_dataset(const std::vector<double>& y, const std::vector<double>& w,
                     const std::vector<int>& delta, const Eigen::MatrixXd& z) {
  if (w.size() != delta.size() || (!y.empty() && y.size() != w.size()) ||
      (z.size() > 0 && static_cast<std::size_t>(z.rows()) != w.size()))
    throw Error(ErrorKind::Dimension, "y, w, delta and z must have the same number of rows");
  Dataset d;
  const auto q = static_cast<std::size_t>(z.size() > 0 ? z.cols() : 0);
  for (std::size_t j = 0; j < q; ++j) d.covariate_names.push_back("z" + std::to_string(j + 1));
  std::vector<double> row(q);
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < q; ++j) row[j] = z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    d.add_row(y.empty() ? 0.0 : y[i], w[i], delta[i], row);
  }
  return d;
}

CondMeanOptions cm_options(Family family, const std::optional<std::string>& strategy) {
  CondMeanOptions o = default_options(family);
  if (strategy) o.strategy = strategy_from_string(*strategy);
  return o;
}

std::string dump(const nlohmann::json& j) { return j.dump(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Parametric conditional mean imputation for a censored covariate";

  static py::exception<Error> error(m, "ParcmiError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::enum_<Family>(m, "Family")
      .value("Exponential", Family::Exponential)
      .value("Weibull", Family::Weibull)
      .value("LogNormal", Family::LogNormal)
      .value("LogLogistic", Family::LogLogistic)
      .value("PiecewiseExponential", Family::PiecewiseExponential)
      .value("Gaussian", Family::Gaussian)
      .value("Logistic", Family::Logistic);

  py::enum_<Strategy>(m, "Strategy")
      .value("Analytic", Strategy::Analytic)
      .value("StabilizedWithMean", Strategy::StabilizedWithMean)
      .value("StabilizedNoMean", Strategy::StabilizedNoMean)
      .value("OriginalIntegral", Strategy::OriginalIntegral);

  py::class_<FamilySpec>(m, "FamilySpec")
      .def(py::init([](const std::string& family, std::optional<double> shape,
                       std::vector<double> coefficients, std::vector<double> cutpoints,
                       std::vector<double> baseline_log_rates) {
             FamilySpec s;
             s.family = family_from_string(family);
             s.shape = shape;
             s.coefficients = std::move(coefficients);
             s.cutpoints = std::move(cutpoints);
             s.baseline_log_rates = std::move(baseline_log_rates);
             s.validate();
             return s;
           }),
           py::arg("family"), py::arg("shape") = py::none(),
           py::arg("coefficients") = std::vector<double>{0.0},
           py::arg("cutpoints") = std::vector<double>{},
           py::arg("baseline_log_rates") = std::vector<double>{})
      .def_property_readonly("family", [](const FamilySpec& s) { return std::string(to_string(s.family)); })
      .def_readonly("shape", &FamilySpec::shape)
      .def_readonly("coefficients", &FamilySpec::coefficients)
      .def_readonly("cutpoints", &FamilySpec::cutpoints)
      .def_readonly("baseline_log_rates", &FamilySpec::baseline_log_rates)
      .def("to_json", [](const FamilySpec& s) { return dump(to_json(s)); });

  py::class_<FittedImputationModel>(m, "FittedModel")
      .def_readonly("spec", &FittedImputationModel::spec)
      .def_readonly("loglik", &FittedImputationModel::loglik)
      .def_readonly("k", &FittedImputationModel::k)
      .def_readonly("n", &FittedImputationModel::n)
      .def_readonly("aic", &FittedImputationModel::aic)
      .def_readonly("bic", &FittedImputationModel::bic)
      .def_readonly("converged", &FittedImputationModel::converged)
      .def_readonly("iterations", &FittedImputationModel::iterations)
      .def_readonly("score_norm", &FittedImputationModel::score_norm)
      .def_readonly("theta", &FittedImputationModel::theta)
      .def_readonly("covariance", &FittedImputationModel::covariance)
      .def_readonly("parameter_names", &FittedImputationModel::parameter_names)
      .def("to_json", [](const FittedImputationModel& f) { return dump(to_json(f)); });

  m.def(
      "fit",
      [](const std::string& family, const std::vector<double>& w, const std::vector<int>& delta,
         const Eigen::MatrixXd& z, double tol, int max_iter, std::size_t pwe_intervals) {
        FitOptions o;
        o.tol = tol;
        o.max_iter = max_iter;
        o.pwe_intervals = pwe_intervals;
        py::gil_scoped_release release;
        return fit(family_from_string(family), make_dataset({}, w, delta, z).censored_sample(), o);
      },
      py::arg("family"), py::arg("w"), py::arg("delta"), py::arg("z") = Eigen::MatrixXd(),
      py::arg("tol") = 1e-8, py::arg("max_iter") = 100, py::arg("pwe_intervals") = 10,
      "Maximum-likelihood fit of the imputation model for W = min(X, C) given Z.");

  m.def(
      "cm_right",
      [](const FamilySpec& spec, const std::vector<double>& z, double w,
         std::optional<std::string> strategy) {
        return cm_right(resolve(spec, z), w, cm_options(spec.family, strategy));
      },
      py::arg("spec"), py::arg("z"), py::arg("w"), py::arg("strategy") = py::none(),
      "E(X | X > w, Z = z).");

  m.def(
      "cm_interval",
      [](const FamilySpec& spec, const std::vector<double>& z, double l, double u) {
        return cm_interval(resolve(spec, z), l, u);
      },
      py::arg("spec"), py::arg("z"), py::arg("l"), py::arg("u"), "E(X | l < X <= u, Z = z).");

  m.def("cm_weibull_analytic", &cm_weibull_analytic, py::arg("alpha"), py::arg("lam"), py::arg("w"));
  m.def("cm_lognormal_analytic", &cm_lognormal_analytic, py::arg("mu"), py::arg("sigma"), py::arg("w"));
  m.def("cm_loglogistic_analytic", &cm_loglogistic_analytic, py::arg("alpha"), py::arg("lam"),
        py::arg("w"));

  m.def(
      "impute",
      [](const std::vector<double>& w, const std::vector<int>& delta, const Eigen::MatrixXd& z,
         const std::string& family, std::optional<std::string> strategy, std::size_t B,
         std::uint64_t seed, const std::string& flavor) {
        const Family fam = family_from_string(family);
        ImputeOptions io;
        io.condmean = cm_options(fam, strategy);
        MIConfig cfg;
        cfg.B = B;
        cfg.seed = seed;
        cfg.bootstrap = B > 1;
        cfg.flavor = mi_flavor_from_string(flavor);
        if (cfg.flavor == MIFlavor::ResampleAnalysis)
          throw Error(ErrorKind::Config, "impute() returns imputations of the given rows; use analyze() for resample");
        std::vector<std::vector<double>> out;
        py::gil_scoped_release release;
        for (auto& imp : impute_multiple(make_dataset({}, w, delta, z), fam, io, cfg))
          out.push_back(std::move(imp.data.w));
        return out;
      },
      py::arg("w"), py::arg("delta"), py::arg("z") = Eigen::MatrixXd(),
      py::arg("family") = "lognormal", py::arg("strategy") = py::none(), py::arg("B") = 1,
      py::arg("seed") = 0, py::arg("flavor") = "bootstrap",
      "B imputed copies of w (censored entries replaced by conditional means).");

  m.def(
      "analyze_json",
      [](const std::vector<double>& y, const std::vector<double>& w, const std::vector<int>& delta,
         const Eigen::MatrixXd& z, const std::string& family, std::optional<std::string> strategy,
         std::size_t B, std::uint64_t seed, const std::string& flavor, double confidence) {
        const Family fam = family_from_string(family);
        ImputeOptions io;
        io.condmean = cm_options(fam, strategy);
        MIConfig cfg;
        cfg.B = B;
        cfg.seed = seed;
        cfg.bootstrap = B > 1;
        cfg.flavor = mi_flavor_from_string(flavor);
        py::gil_scoped_release release;
        std::vector<OlsFit> fits;
        for (const auto& imp : impute_multiple(make_dataset(y, w, delta, z), fam, io, cfg))
          fits.push_back(ols(imp));
        return dump(to_json(pool(fits, confidence)));
      },
      py::arg("y"), py::arg("w"), py::arg("delta"), py::arg("z") = Eigen::MatrixXd(),
      py::arg("family") = "lognormal", py::arg("strategy") = py::none(), py::arg("B") = 1,
      py::arg("seed") = 0, py::arg("flavor") = "bootstrap", py::arg("confidence") = 0.95);

  m.def(
      "generate_replicate",
      [](const std::string& design_json, std::size_t index) {
        const SimDesign d = sim_design_from_json(nlohmann::json::parse(design_json));
        Replicate r = generate_replicate(d, index);
        return py::make_tuple(r.data.y, r.data.w, r.data.delta, r.data.z, r.x);
      },
      py::arg("design_json") = "{}", py::arg("index") = 0,
      "(y, w, delta, z, x) for one simulated replicate.");

  m.def(
      "run_cell_json",
      [](const std::string& design_json) {
        const SimDesign d = sim_design_from_json(nlohmann::json::parse(design_json));
        py::gil_scoped_release release;
        return dump(to_json(run_cell(d)));
      },
      py::arg("design_json"));
}
