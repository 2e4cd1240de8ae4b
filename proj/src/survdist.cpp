#include "parcmi/survdist.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "parcmi/error.hpp"
#include "parcmi/specfun.hpp"

namespace parcmi {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double softplus(double v) {  // log(1 + e^v)
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

double sigmoid(double v) {
  return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

void check_x(double x) {
  if (std::isnan(x)) fail(ErrorKind::Domain, "survival functions: NaN argument");
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

// ---- log survival ---------------------------------------------------------

double log_surv(const dist::Exponential& d, double x) { return x <= 0 ? 0.0 : -d.rate * x; }
double log_surv(const dist::Weibull& d, double x) {
  return x <= 0 ? 0.0 : -d.rate * std::pow(x, d.shape);
}
double log_surv(const dist::LogNormal& d, double x) {
  if (x <= 0) return 0.0;
  return specfun::log_normal_sf((std::log(x) - d.mu) / d.sigma);
}
double log_surv(const dist::LogLogistic& d, double x) {
  if (x <= 0) return 0.0;
  return -softplus(d.shape * std::log(x / d.scale));
}
double log_surv(const dist::PiecewiseExponential& d, double x) {
  if (x <= 0) return 0.0;
  double h = 0.0;
  const std::size_t J = d.rates.size();
  for (std::size_t j = 0; j < J; ++j) {
    const double lo = d.cutpoints[j];
    if (x <= lo) break;
    const double hi = (j + 1 < J) ? d.cutpoints[j + 1] : kInf;
    h += d.rates[j] * (std::min(x, hi) - lo);
  }
  return -h;
}
double log_surv(const dist::Gaussian& d, double x) {
  return specfun::log_normal_sf((x - d.mu) / d.sigma);
}
double log_surv(const dist::Logistic& d, double x) { return -softplus((x - d.mu) / d.sigma); }

// ---- log density ----------------------------------------------------------

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double log_dens(const dist::Exponential& d, double x) {
  return x < 0 ? -kInf : std::log(d.rate) - d.rate * x;
}
double log_dens(const dist::Weibull& d, double x) {
  if (x < 0) return -kInf;
  if (x == 0) return d.shape < 1 ? kInf : (d.shape == 1 ? std::log(d.rate) : -kInf);
  return std::log(d.shape * d.rate) + (d.shape - 1.0) * std::log(x) -
         d.rate * std::pow(x, d.shape);
}
double log_dens(const dist::LogNormal& d, double x) {
  if (x <= 0) return -kInf;
  const double z = (std::log(x) - d.mu) / d.sigma;
  return -0.5 * z * z - std::log(d.sigma * x) - kLogSqrt2Pi;
}
double log_dens(const dist::LogLogistic& d, double x) {
  if (x < 0) return -kInf;
  if (x == 0) return d.shape < 1 ? kInf : (d.shape == 1 ? -std::log(d.scale) : -kInf);
  const double lr = std::log(x / d.scale);
  return std::log(d.shape / d.scale) + (d.shape - 1.0) * lr - 2.0 * softplus(d.shape * lr);
}
double log_dens(const dist::PiecewiseExponential& d, double x) {
  if (x < 0) return -kInf;
  return std::log(d.rates[d.interval_of(x)]) + log_surv(d, x);
}
double log_dens(const dist::Gaussian& d, double x) {
  const double z = (x - d.mu) / d.sigma;
  return -0.5 * z * z - std::log(d.sigma) - kLogSqrt2Pi;
}
double log_dens(const dist::Logistic& d, double x) {
  const double z = (x - d.mu) / d.sigma;
  return -std::fabs(z) - 2.0 * std::log1p(std::exp(-std::fabs(z))) - std::log(d.sigma);
}

// ---- hazard -----------------------------------------------------------------

double haz(const dist::Exponential& d, double x) { return x < 0 ? 0.0 : d.rate; }
double haz(const dist::Weibull& d, double x) {
  if (x < 0) return 0.0;
  if (x == 0) return d.shape < 1 ? kInf : (d.shape == 1 ? d.rate : 0.0);
  return d.shape * d.rate * std::pow(x, d.shape - 1.0);
}
double haz(const dist::LogNormal& d, double x) {
  if (x <= 0) return 0.0;
  return std::exp(log_dens(d, x) - log_surv(d, x));
}
double haz(const dist::LogLogistic& d, double x) {
  if (x < 0) return 0.0;
  if (x == 0) return d.shape < 1 ? kInf : (d.shape == 1 ? 1.0 / d.scale : 0.0);
  return d.shape / x * sigmoid(d.shape * std::log(x / d.scale));
}
double haz(const dist::PiecewiseExponential& d, double x) {
  return x < 0 ? 0.0 : d.rates[d.interval_of(x)];
}
double haz(const dist::Gaussian& d, double x) {
  return std::exp(log_dens(d, x) - log_surv(d, x));
}
double haz(const dist::Logistic& d, double x) { return sigmoid((x - d.mu) / d.sigma) / d.sigma; }

// ---- mean -----------------------------------------------------------------

double mean_of(const dist::Exponential& d) { return 1.0 / d.rate; }
double mean_of(const dist::Weibull& d) {
  return std::exp(-std::log(d.rate) / d.shape + specfun::log_gamma(1.0 + 1.0 / d.shape));
}
double mean_of(const dist::LogNormal& d) { return std::exp(d.mu + 0.5 * d.sigma * d.sigma); }
double mean_of(const dist::LogLogistic& d) {
  if (d.shape <= 1.0) return kInf;
  const double b = std::numbers::pi / d.shape;
  return d.scale * b / std::sin(b);
}
double mean_of(const dist::PiecewiseExponential& d) {
  double total = 0.0;
  double s_lo = 1.0;
  const std::size_t J = d.rates.size();
  for (std::size_t j = 0; j < J; ++j) {
    const double s_hi = (j + 1 < J) ? std::exp(log_surv(d, d.cutpoints[j + 1])) : 0.0;
    total += (s_lo - s_hi) / d.rates[j];
    s_lo = s_hi;
  }
  return total;
}
double mean_of(const dist::Gaussian& d) { return d.mu; }
double mean_of(const dist::Logistic& d) { return d.mu; }

// ---- quantile ---------------------------------------------------------------

double quant(const dist::Exponential& d, double u) { return -std::log1p(-u) / d.rate; }
double quant(const dist::Weibull& d, double u) {
  return std::pow(-std::log1p(-u) / d.rate, 1.0 / d.shape);
}
double quant(const dist::LogNormal& d, double u) {
  return std::exp(d.mu + d.sigma * specfun::normal_quantile(u));
}
double quant(const dist::LogLogistic& d, double u) {
  return d.scale * std::exp((std::log(u) - std::log1p(-u)) / d.shape);
}
double quant(const dist::PiecewiseExponential& d, double u) {
  const double target = -std::log1p(-u);
  double h = 0.0;
  const std::size_t J = d.rates.size();
  for (std::size_t j = 0; j < J; ++j) {
    const double lo = d.cutpoints[j];
    if (j + 1 == J) return lo + (target - h) / d.rates[j];
    const double width = d.cutpoints[j + 1] - lo;
    const double next = h + d.rates[j] * width;
    if (target < next) return lo + (target - h) / d.rates[j];
    h = next;
  }
  return d.cutpoints.back();
}
double quant(const dist::Gaussian& d, double u) {
  return d.mu + d.sigma * specfun::normal_quantile(u);
}
double quant(const dist::Logistic& d, double u) {
  return d.mu + d.sigma * (std::log(u) - std::log1p(-u));
}

double linear_predictor(const FamilySpec& spec, std::span<const double> z) {
  if (z.size() != spec.covariate_count())
    fail(ErrorKind::Dimension, "resolve: expected " + std::to_string(spec.covariate_count()) +
                                   " covariates, got " + std::to_string(z.size()));
  double eta = spec.coefficients[0];
  for (std::size_t j = 0; j < z.size(); ++j) eta += spec.coefficients[j + 1] * z[j];
  return eta;
}

std::string lower(std::string_view s) {
  std::string out;
  for (char c : s)
    if (c != '-' && c != '_' && c != ' ')
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

}  // namespace

std::string_view to_string(Family family) noexcept {
  switch (family) {
    case Family::Exponential: return "exponential";
    case Family::Weibull: return "weibull";
    case Family::LogNormal: return "lognormal";
    case Family::LogLogistic: return "loglogistic";
    case Family::PiecewiseExponential: return "pwe";
    case Family::Gaussian: return "gaussian";
    case Family::Logistic: return "logistic";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  const std::string key = lower(name);
  if (key == "exponential" || key == "exp") return Family::Exponential;
  if (key == "weibull") return Family::Weibull;
  if (key == "lognormal") return Family::LogNormal;
  if (key == "loglogistic") return Family::LogLogistic;
  if (key == "pwe" || key == "piecewiseexponential" || key == "pch")
    return Family::PiecewiseExponential;
  if (key == "gaussian" || key == "normal") return Family::Gaussian;
  if (key == "logistic") return Family::Logistic;
  fail(ErrorKind::Config, "unknown family '" + std::string(name) + "'");
}

bool positive_support(Family family) noexcept {
  return family != Family::Gaussian && family != Family::Logistic;
}

void FamilySpec::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::Config, "FamilySpec: " + what); };
  if (coefficients.empty()) bad("coefficients must include an intercept");
  for (double c : coefficients)
    if (!std::isfinite(c)) bad("non-finite coefficient");
  switch (family) {
    case Family::Exponential:
      break;
    case Family::Weibull:
    case Family::LogNormal:
    case Family::LogLogistic:
    case Family::Gaussian:
    case Family::Logistic:
      if (!shape || !positive(*shape)) bad("shape/scale must be present and > 0");
      break;
    case Family::PiecewiseExponential: {
      if (cutpoints.empty()) bad("piecewise exponential needs at least one interval");
      if (cutpoints.size() != baseline_log_rates.size())
        bad("cutpoints and baseline_log_rates must have equal length");
      if (cutpoints.front() != 0.0) bad("first cutpoint must be 0");
      for (std::size_t j = 1; j < cutpoints.size(); ++j)
        if (!(cutpoints[j] > cutpoints[j - 1]) || !std::isfinite(cutpoints[j]))
          bad("cutpoints must be finite and strictly increasing");
      for (double b : baseline_log_rates)
        if (!std::isfinite(b)) bad("non-finite baseline log rate");
      break;
    }
  }
}

FamilySpec to_proportional_hazards(const FamilySpec& spec) {
  if (spec.link == Link::ProportionalHazards) return spec;
  if (spec.family != Family::Exponential && spec.family != Family::Weibull) return spec;
  FamilySpec out = spec;
  const double alpha = spec.family == Family::Weibull ? *spec.shape : 1.0;
  for (double& c : out.coefficients) c *= -alpha;
  out.link = Link::ProportionalHazards;
  return out;
}

FamilySpec to_aft(const FamilySpec& spec) {
  if (spec.link == Link::Aft) return spec;
  if (spec.family != Family::Exponential && spec.family != Family::Weibull) return spec;
  FamilySpec out = spec;
  const double alpha = spec.family == Family::Weibull ? *spec.shape : 1.0;
  for (double& c : out.coefficients) c /= -alpha;
  out.link = Link::Aft;
  return out;
}

std::size_t dist::PiecewiseExponential::interval_of(double x) const {
  // Last j with cutpoints[j] <= x.
  const auto it = std::upper_bound(cutpoints.begin(), cutpoints.end(), x);
  if (it == cutpoints.begin()) return 0;
  return static_cast<std::size_t>(it - cutpoints.begin()) - 1;
}

Family family_of(const SubjectParams& params) noexcept {
  return static_cast<Family>(params.index());
}

void validate(const SubjectParams& params) {
  auto need = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::Domain, std::string("invalid subject parameters: ") + what);
  };
  std::visit(overloaded{
                 [&](const dist::Exponential& d) { need(positive(d.rate), "rate must be > 0"); },
                 [&](const dist::Weibull& d) {
                   need(positive(d.rate) && positive(d.shape), "shape, rate must be > 0");
                 },
                 [&](const dist::LogNormal& d) {
                   need(std::isfinite(d.mu) && positive(d.sigma), "sigma must be > 0");
                 },
                 [&](const dist::LogLogistic& d) {
                   need(positive(d.shape) && positive(d.scale), "shape, scale must be > 0");
                 },
                 [&](const dist::PiecewiseExponential& d) {
                   need(!d.rates.empty() && d.rates.size() == d.cutpoints.size(),
                        "rates and cutpoints must be non-empty and equal length");
                   need(d.cutpoints.front() == 0.0, "first cutpoint must be 0");
                   for (std::size_t j = 1; j < d.cutpoints.size(); ++j)
                     need(d.cutpoints[j] > d.cutpoints[j - 1], "cutpoints must increase");
                   for (double r : d.rates) need(positive(r), "rates must be > 0");
                 },
                 [&](const dist::Gaussian& d) {
                   need(std::isfinite(d.mu) && positive(d.sigma), "sigma must be > 0");
                 },
                 [&](const dist::Logistic& d) {
                   need(std::isfinite(d.mu) && positive(d.sigma), "sigma must be > 0");
                 }},
             params);
}

SubjectParams resolve(const FamilySpec& spec, std::span<const double> z) {
  const double eta = linear_predictor(spec, z);
  const bool ph = spec.link == Link::ProportionalHazards;
  SubjectParams out;
  switch (spec.family) {
    case Family::Exponential:
      out = dist::Exponential{std::exp(ph ? eta : -eta)};
      break;
    case Family::Weibull: {
      const double alpha = spec.shape.value_or(1.0);
      out = dist::Weibull{alpha, std::exp(ph ? eta : -alpha * eta)};
      break;
    }
    case Family::LogNormal:
      out = dist::LogNormal{eta, spec.shape.value_or(1.0)};
      break;
    case Family::LogLogistic:
      out = dist::LogLogistic{spec.shape.value_or(1.0), std::exp(eta)};
      break;
    case Family::PiecewiseExponential: {
      dist::PiecewiseExponential pwe{spec.cutpoints, {}};
      pwe.rates.reserve(spec.baseline_log_rates.size());
      for (double b : spec.baseline_log_rates) pwe.rates.push_back(std::exp(b + eta));
      out = std::move(pwe);
      break;
    }
    case Family::Gaussian:
      out = dist::Gaussian{eta, spec.shape.value_or(1.0)};
      break;
    case Family::Logistic:
      out = dist::Logistic{eta, spec.shape.value_or(1.0)};
      break;
  }
  validate(out);
  return out;
}

double log_survival(const SubjectParams& params, double x) {
  check_x(x);
  return std::visit([x](const auto& d) { return log_surv(d, x); }, params);
}

double survival(const SubjectParams& params, double x) { return std::exp(log_survival(params, x)); }

double cum_hazard(const SubjectParams& params, double x) { return -log_survival(params, x); }

double log_density(const SubjectParams& params, double x) {
  check_x(x);
  return std::visit([x](const auto& d) { return log_dens(d, x); }, params);
}

double density(const SubjectParams& params, double x) { return std::exp(log_density(params, x)); }

double hazard(const SubjectParams& params, double x) {
  check_x(x);
  return std::visit([x](const auto& d) { return haz(d, x); }, params);
}

double mean(const SubjectParams& params) {
  return std::visit([](const auto& d) { return mean_of(d); }, params);
}

double quantile(const SubjectParams& params, double u) {
  if (!(u > 0.0 && u < 1.0)) fail(ErrorKind::Domain, "quantile: u must lie in (0, 1)");
  return std::visit([u](const auto& d) { return quant(d, u); }, params);
}

double sample(const SubjectParams& params, Rng& rng) { return quantile(params, uniform01(rng)); }

}  // namespace parcmi
