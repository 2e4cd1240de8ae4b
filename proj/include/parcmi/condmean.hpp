#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "parcmi/quadrature.hpp"
#include "parcmi/survdist.hpp"

namespace parcmi {

enum class Strategy { Analytic, StabilizedWithMean, StabilizedNoMean, OriginalIntegral };

inline constexpr Strategy kAllStrategies[] = {Strategy::Analytic, Strategy::StabilizedWithMean,
                                              Strategy::StabilizedNoMean,
                                              Strategy::OriginalIntegral};

/// "analytic", "stab-mean", "stab-nomean", "integral".
std::string_view to_string(Strategy s) noexcept;
Strategy strategy_from_string(std::string_view name);

/// Analytic where a closed form exists, StabilizedWithMean otherwise.
Strategy default_strategy(Family family) noexcept;

struct CondMeanOptions {
  Strategy strategy = Strategy::Analytic;
  quadrature::Controls quad{};
  std::size_t grid = 10000;  // K for the log-scale sum, >= 100
  double tail_eps = 1e-12;   // minimum S(w) (or interval mass)

  void validate() const;
};

/// Options with the family's default strategy.
CondMeanOptions default_options(Family family);

/// E(X | X > w) for one subject. Throws DeepTail when S(w) <= tail_eps,
/// NonexistentMean for log-logistic shape <= 1, Unsupported for Analytic on a
/// family without a closed form, Convergence when quadrature fails.
double cm_right(const SubjectParams& params, double w, const CondMeanOptions& options);
double cm_right(const SubjectParams& params, double w);

/// E(X | l < X <= u); u = +inf reduces to cm_right with the same options.
/// Finite u always uses adaptive quadrature.
double cm_interval(const SubjectParams& params, double l, double u,
                   const CondMeanOptions& options);
double cm_interval(const SubjectParams& params, double l, double u);

// Closed forms. Weibull uses S(x) = exp(-lambda x^alpha); log-logistic uses
// S(x) = 1 / (1 + (x / lambda)^alpha).
double cm_exponential_analytic(double rate, double w);
double cm_weibull_analytic(double alpha, double lambda, double w);
double cm_lognormal_analytic(double mu, double sigma, double w);
double cm_loglogistic_analytic(double alpha, double lambda, double w);
double cm_pwe_analytic(std::span<const double> rates, std::span<const double> cutpoints, double w);

/// w + {E(X) - int_0^w S} / S(w) (real-support families anchor the finite
/// integral far in the left tail instead of at 0).
double cm_stabilized_with_mean(const SubjectParams& params, double w,
                               const quadrature::Controls& quad = {});

/// w + sum_k exp(q(t_k) + log(c_k dt_k)) with q(t) = -[H(w + (1-t)/t) - H(w)] - 2 log t,
/// summed with log_sum_exp. Nodes t_k = exp(1 - K/k), k = 1..K, so the spacing is
/// at most 1/K and shrinks geometrically towards t = 0; dt_k = t_k / (s_k^2 K) with
/// s_k = k/K, trapezoid weights c_k (1, ..., 1, 1/2).
double cm_stabilized_no_mean(const SubjectParams& params, double w, std::size_t grid = 10000);

/// Adaptive Gauss-Kronrod on the same t-substitution over (0, 1].
double cm_original_integral(const SubjectParams& params, double w,
                            const quadrature::Controls& quad = {});

}  // namespace parcmi
