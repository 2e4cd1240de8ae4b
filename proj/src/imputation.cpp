#include "parcmi/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "parcmi/error.hpp"
#include "parcmi/parallel.hpp"
#include "parcmi/rng.hpp"
#include "parcmi/specfun.hpp"

namespace parcmi {

void Dataset::add_row(double yi, double wi, int di, std::span<const double> zi) {
  if (zi.size() != covariate_count())
    fail(ErrorKind::Dimension, "Dataset::add_row: expected " + std::to_string(covariate_count()) +
                                   " covariates, got " + std::to_string(zi.size()));
  y.push_back(yi);
  w.push_back(wi);
  delta.push_back(di);
  z.insert(z.end(), zi.begin(), zi.end());
}

std::size_t Dataset::censored_count() const {
  return static_cast<std::size_t>(std::count(delta.begin(), delta.end(), 0));
}

void Dataset::validate() const {
  const std::size_t n = y.size();
  if (w.size() != n || delta.size() != n || z.size() != n * covariate_count())
    fail(ErrorKind::Data, "dataset columns have inconsistent lengths");
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = [i] { return " (row " + std::to_string(i) + ")"; };
    if (!std::isfinite(y[i])) fail(ErrorKind::Data, "non-finite outcome" + row());
    if (!std::isfinite(w[i])) fail(ErrorKind::Data, "non-finite observed value" + row());
    if (delta[i] != 0 && delta[i] != 1) fail(ErrorKind::Data, "event indicator not in {0,1}" + row());
    for (double v : covariates(i))
      if (!std::isfinite(v)) fail(ErrorKind::Data, "non-finite covariate" + row());
  }
}

CensoredSample Dataset::censored_sample() const {
  CensoredSample out(covariate_count());
  for (std::size_t i = 0; i < size(); ++i) out.add(w[i], delta[i], covariates(i));
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.outcome_name = outcome_name;
  out.observed_name = observed_name;
  out.event_name = event_name;
  out.covariate_names = covariate_names;
  for (std::size_t r : rows) out.add_row(y.at(r), w.at(r), delta.at(r), covariates(r));
  return out;
}

ImputedDataset impute_with_model(const Dataset& data,
                                 std::shared_ptr<const FittedImputationModel> model,
                                 const CondMeanOptions& condmean) {
  ImputedDataset out;
  out.data = data;
  out.original_w = data.w;
  out.imputed.assign(data.size(), false);
  out.strategy = condmean.strategy;
  if (model) out.family = model->spec.family;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.delta[i] == 1) continue;
    if (!model) fail(ErrorKind::Config, "censored rows present but no imputation model");
    try {
      const SubjectParams params = resolve(model->spec, data.covariates(i));
      out.data.w[i] = cm_right(params, data.w[i], condmean);
    } catch (const Error& e) {
      fail(e.kind(), "row " + std::to_string(i) + ": " + e.what());
    }
    out.imputed[i] = true;
  }
  out.model = std::move(model);
  return out;
}

ImputedDataset impute_single(const Dataset& data, Family family, const ImputeOptions& options) {
  data.validate();
  std::shared_ptr<const FittedImputationModel> model;
  if (data.censored_count() > 0)
    model = std::make_shared<FittedImputationModel>(fit(family, data.censored_sample(), options.fit));
  ImputedDataset out = impute_with_model(data, std::move(model), options.condmean);
  out.family = family;
  return out;
}

std::string_view to_string(MIFlavor f) noexcept {
  switch (f) {
    case MIFlavor::RowBootstrap: return "bootstrap";
    case MIFlavor::ParametricDraw: return "parametric";
    case MIFlavor::ResampleAnalysis: return "resample";
  }
  return "?";
}

MIFlavor mi_flavor_from_string(std::string_view name) {
  if (name == "bootstrap") return MIFlavor::RowBootstrap;
  if (name == "parametric") return MIFlavor::ParametricDraw;
  if (name == "resample") return MIFlavor::ResampleAnalysis;
  fail(ErrorKind::Config, "unknown multiple-imputation flavor '" + std::string(name) +
                              "' (expected bootstrap, parametric or resample)");
}

void MIConfig::validate() const {
  if (B < 1) fail(ErrorKind::Config, "number of imputations B must be >= 1");
  if (max_redraws < 0) fail(ErrorKind::Config, "max_redraws must be >= 0");
}

namespace {

FittedImputationModel parametric_draw(const FittedImputationModel& base, Rng& rng) {
  if (base.covariance.size() == 0)
    fail(ErrorKind::Singular, "fitted model has no covariance for parametric draws");
  Eigen::LLT<Eigen::MatrixXd> llt(base.covariance);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::Singular, "parameter covariance is not positive definite");
  Eigen::VectorXd eps(base.theta.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = specfun::normal_quantile(uniform01(rng));
  FittedImputationModel out = base;
  out.theta = base.theta + llt.matrixL() * eps;
  out.spec = from_unconstrained(base.spec, out.theta);
  return out;
}

std::vector<std::size_t> resample_rows(std::size_t n, Rng& rng) {
  std::vector<std::size_t> rows(n);
  for (auto& r : rows)
    r = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
  return rows;
}

}  // namespace

std::vector<ImputedDataset> impute_multiple(const Dataset& data, Family family,
                                            const ImputeOptions& options, const MIConfig& cfg) {
  cfg.validate();
  data.validate();
  std::vector<ImputedDataset> out(cfg.B);

  if (!cfg.bootstrap || data.censored_count() == 0) {
    const ImputedDataset single = impute_single(data, family, options);
    std::fill(out.begin(), out.end(), single);
    return out;
  }

  std::shared_ptr<const FittedImputationModel> base;
  if (cfg.flavor == MIFlavor::ParametricDraw)
    base = std::make_shared<FittedImputationModel>(fit(family, data.censored_sample(), options.fit));

  parallel_for(cfg.B, cfg.workers, [&](std::size_t b) {
    Rng rng = derive_stream(cfg.seed, b);
    std::optional<Error> last;
    for (int attempt = 0; attempt <= cfg.max_redraws; ++attempt) {
      try {
        std::shared_ptr<const FittedImputationModel> model;
        if (cfg.flavor == MIFlavor::ResampleAnalysis) {
          const auto rows = resample_rows(data.size(), rng);
          const Dataset resample = data.subset(rows);
          auto m = fit(family, resample.censored_sample(), options.fit);
          if (!m.converged)
            fail(ErrorKind::Convergence, "bootstrap fit did not converge (score norm " +
                                             std::to_string(m.score_norm) + ")");
          out[b] = impute_with_model(resample, std::make_shared<FittedImputationModel>(std::move(m)),
                                     options.condmean);
          out[b].family = family;
          out[b].source_rows = rows;
          return;
        }
        if (cfg.flavor == MIFlavor::ParametricDraw) {
          model = std::make_shared<FittedImputationModel>(parametric_draw(*base, rng));
        } else {
          const auto rows = resample_rows(data.size(), rng);
          auto m = fit(family, data.subset(rows).censored_sample(), options.fit);
          if (!m.converged)
            fail(ErrorKind::Convergence, "bootstrap fit did not converge (score norm " +
                                             std::to_string(m.score_norm) + ")");
          model = std::make_shared<FittedImputationModel>(std::move(m));
        }
        out[b] = impute_with_model(data, std::move(model), options.condmean);
        out[b].family = family;
        return;
      } catch (const Error& e) {
        last = e;
      }
    }
    fail(last->kind(), "imputation " + std::to_string(b) + " failed after " +
                           std::to_string(cfg.max_redraws + 1) + " attempts; last error: " +
                           last->what());
  });
  return out;
}

}  // namespace parcmi
