#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "parcmi/rng.hpp"

namespace parcmi {

enum class Family {
  Exponential,
  Weibull,
  LogNormal,
  LogLogistic,
  PiecewiseExponential,
  Gaussian,
  Logistic
};

inline constexpr Family kAllFamilies[] = {
    Family::Exponential,          Family::Weibull,  Family::LogNormal,
    Family::LogLogistic,          Family::PiecewiseExponential,
    Family::Gaussian,             Family::Logistic};

std::string_view to_string(Family family) noexcept;

/// Accepts the canonical names ("exponential", "weibull", "lognormal",
/// "loglogistic", "pwe", "gaussian", "logistic") plus common spellings.
Family family_from_string(std::string_view name);

/// True for families supported on [0, inf).
bool positive_support(Family family) noexcept;

/// How covariates enter the rate of the exponential and Weibull families.
///   Aft: log X = eta + s * eps, shape alpha = 1/s, rate = exp(-alpha * eta)
///   ProportionalHazards: rate = exp(eta)
/// Log-normal, log-logistic, Gaussian and logistic always use the location
/// (AFT) form; piecewise exponential always uses the proportional-hazards form.
enum class Link { Aft, ProportionalHazards };

/// Population-level model: family, shared shape, regression coefficients.
///
/// Coefficients are (intercept, slope_1, ..., slope_q). The linear predictor
/// eta = coefficients . (1, z) maps to subject parameters as
///   exponential      rate   = exp(-eta)                (Aft)
///   weibull          rate   = exp(-shape * eta)        (Aft)
///   lognormal        mu     = eta, sigma = shape
///   loglogistic      scale  = exp(eta), alpha = shape
///   gaussian/logistic location = eta, scale = shape
///   pwe              rate_j = exp(baseline_log_rates_j + eta)
/// For pwe the intercept is conventionally 0 (it is absorbed by the baseline).
struct FamilySpec {
  Family family = Family::Exponential;
  std::optional<double> shape;
  std::vector<double> coefficients{0.0};
  std::vector<double> cutpoints;           // pwe: 0 = tau_0 < ... < tau_{J-1}
  std::vector<double> baseline_log_rates;  // pwe: J values
  Link link = Link::Aft;

  std::size_t covariate_count() const { return coefficients.size() - 1; }
  /// Throws Error{Config} when an invariant does not hold.
  void validate() const;
};

/// Re-express an Aft exponential/Weibull spec in proportional-hazards
/// coefficients (and back). Other families are returned unchanged.
FamilySpec to_proportional_hazards(const FamilySpec& spec);
FamilySpec to_aft(const FamilySpec& spec);

namespace dist {

struct Exponential {
  double rate;
};

/// S(x) = exp(-rate * x^shape).
struct Weibull {
  double shape;
  double rate;
};

struct LogNormal {
  double mu;
  double sigma;
};

/// S(x) = 1 / (1 + (x / scale)^shape).
struct LogLogistic {
  double shape;
  double scale;
};

/// Constant hazard rates[j] on [cutpoints[j], cutpoints[j+1]), the last
/// interval open-ended. Intervals are closed on the left.
struct PiecewiseExponential {
  std::vector<double> cutpoints;
  std::vector<double> rates;
  /// Index j of the interval containing x (right-continuous convention).
  std::size_t interval_of(double x) const;
};

struct Gaussian {
  double mu;
  double sigma;
};

/// S(x) = 1 / (1 + exp((x - mu) / sigma)).
struct Logistic {
  double mu;
  double sigma;
};

}  // namespace dist

using SubjectParams =
    std::variant<dist::Exponential, dist::Weibull, dist::LogNormal, dist::LogLogistic,
                 dist::PiecewiseExponential, dist::Gaussian, dist::Logistic>;

Family family_of(const SubjectParams& params) noexcept;

/// Throws Error{Domain} when a rate/scale parameter is not strictly positive.
void validate(const SubjectParams& params);

/// Subject-specific parameters for covariate vector z.
SubjectParams resolve(const FamilySpec& spec, std::span<const double> z);

// Point functions. Positive-support families treat x < 0 as below the
// support (S = 1, f = h = H = 0).
double survival(const SubjectParams& params, double x);
double log_survival(const SubjectParams& params, double x);
double cum_hazard(const SubjectParams& params, double x);
double density(const SubjectParams& params, double x);
double log_density(const SubjectParams& params, double x);
double hazard(const SubjectParams& params, double x);

/// Unconditional mean; +inf for log-logistic with shape <= 1.
double mean(const SubjectParams& params);

/// Inverse CDF at u in (0, 1).
double quantile(const SubjectParams& params, double u);

/// Inverse-CDF draw.
double sample(const SubjectParams& params, Rng& rng);

}  // namespace parcmi
