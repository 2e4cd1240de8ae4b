#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "parcmi/survdist.hpp"

namespace parcmi {

enum class Censoring { Exact, Right, Interval };

/// One censored value: exact (lower == upper), right censored at lower
/// (upper = +inf) or interval censored in (lower, upper].
struct Observation {
  double lower = 0.0;
  double upper = 0.0;
  Censoring kind = Censoring::Exact;
};

/// Observed (possibly censored) values of X with fully observed covariates Z.
class CensoredSample {
 public:
  explicit CensoredSample(std::size_t covariate_count = 0) : q_(covariate_count) {}

  /// delta = 1: exact observation w; delta = 0: right censored at w.
  void add(double w, int delta, std::span<const double> z);
  void add_interval(double lower, double upper, std::span<const double> z);

  std::size_t size() const { return obs_.size(); }
  std::size_t covariate_count() const { return q_; }
  std::size_t event_count() const;
  bool has_interval_rows() const;

  const Observation& observation(std::size_t i) const { return obs_[i]; }
  std::span<const double> covariates(std::size_t i) const {
    return {z_.data() + i * q_, q_};
  }

  /// Rows in the given order (duplicates allowed), e.g. a bootstrap resample.
  CensoredSample subset(std::span<const std::size_t> rows) const;

 private:
  void push(Observation o, std::span<const double> z);

  std::size_t q_;
  std::vector<Observation> obs_;
  std::vector<double> z_;  // row-major n x q
};

struct FitOptions {
  double tol = 1e-8;  // on the Euclidean norm of the score
  int max_iter = 100;
  std::optional<FamilySpec> init;
  std::size_t pwe_intervals = 10;     // J when cutpoints are derived from data
  std::vector<double> pwe_cutpoints;  // explicit cutpoints override (starts at 0)
};

struct FittedImputationModel {
  FamilySpec spec;
  double loglik = 0.0;
  std::size_t k = 0;
  std::size_t n = 0;
  double aic = 0.0;
  double bic = 0.0;
  bool converged = false;
  int iterations = 0;
  double score_norm = 0.0;
  /// Unconstrained parameters and their observed-information covariance.
  Eigen::VectorXd theta;
  Eigen::MatrixXd covariance;
  std::vector<std::string> parameter_names;

  /// Observed-information standard errors of theta.
  Eigen::VectorXd standard_errors() const;
};

/// Sum of log f over exact rows, log S over right-censored rows and
/// log{S(L) - S(U)} over interval rows. Returns -inf (never NaN) when a
/// censored row has zero probability under spec.
double log_likelihood(const FamilySpec& spec, const CensoredSample& data);

/// Unconstrained parameter vector theta for spec:
///   exponential               (beta)
///   weibull, loglogistic      (beta, log(1/shape))  -- AFT scale
///   lognormal, gaussian, logistic (beta, log(sigma))
///   pwe                       (baseline_log_rates, slopes)
Eigen::VectorXd to_unconstrained(const FamilySpec& spec);

/// Inverse of to_unconstrained; layout supplies family, covariate count and
/// (for pwe) cutpoints.
FamilySpec from_unconstrained(const FamilySpec& layout, const Eigen::VectorXd& theta);

struct LikelihoodDerivatives {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Log-likelihood with analytic score and Hessian with respect to theta.
LikelihoodDerivatives log_likelihood_derivatives(const FamilySpec& spec,
                                                 const CensoredSample& data);

/// Cutpoints 0, q_{1/J}, ..., q_{(J-1)/J} of the exact (uncensored) values,
/// duplicates removed.
std::vector<double> default_pwe_cutpoints(const CensoredSample& data, std::size_t intervals);

/// Maximum-likelihood fit. Non-convergence is reported through
/// `converged = false`; an all-censored sample or a singular information
/// matrix at the optimum throws.
FittedImputationModel fit(Family family, const CensoredSample& data,
                          const FitOptions& options = {});

/// (AIC, BIC) = (2k - 2 loglik, k ln n - 2 loglik).
std::pair<double, double> information_criteria(double loglik, std::size_t k, std::size_t n);
std::pair<double, double> information_criteria(const FittedImputationModel& model);

enum class Criterion { AIC, BIC };

struct ModelSelection {
  std::vector<FittedImputationModel> ranked;               // best first
  std::vector<std::pair<Family, std::string>> failures;  // did not fit / converge
};

/// Fits every candidate and ranks by the criterion (ties: fewer parameters,
/// then family order). Throws when no candidate converges.
ModelSelection select_model(std::span<const Family> candidates, const CensoredSample& data,
                            Criterion criterion, const FitOptions& options = {});

}  // namespace parcmi
