#pragma once

#include <span>

namespace parcmi::specfun {

// All functions throw parcmi::Error{ErrorKind::Domain} on arguments outside
// their domain (including NaN). None of them returns NaN.

/// ln Gamma(a) for a > 0.
double log_gamma(double a);

/// ln B(a, b) for a, b > 0.
double log_beta(double a, double b);

/// Regularized lower incomplete gamma P(a, t) = gamma(a, t) / Gamma(a).
double lower_incomplete_gamma_regularized(double a, double t);

/// Regularized upper incomplete gamma Q(a, t) = Gamma(a, t) / Gamma(a),
/// i.e. the survival function of a Gamma(a, 1) variable at t.
/// Series for t < a + 1, Lentz continued fraction otherwise.
double upper_incomplete_gamma_regularized(double a, double t);

/// ln Q(a, t); finite far into the tail where Q itself underflows.
double log_upper_incomplete_gamma_regularized(double a, double t);

/// Standard normal CDF.
double normal_cdf(double x);

/// ln(1 - Phi(z)), accurate for large positive z (continued fraction for the
/// Mills ratio beyond z = 5).
double log_normal_sf(double z);

/// ln Phi(z).
double log_normal_cdf(double z);

/// Standard normal density.
double normal_pdf(double x);

/// Inverse of the standard normal CDF for p in (0, 1).
double normal_quantile(double p);

/// Regularized incomplete beta I_t(a, b), the Beta(a, b) CDF at t.
double regularized_incomplete_beta(double t, double a, double b);

/// Student t CDF with df > 0 degrees of freedom.
double student_t_cdf(double t, double df);

/// Student t quantile; df = +inf gives the normal quantile.
double student_t_quantile(double p, double df);

/// log(sum_k exp(terms_k)) evaluated as M + log(sum_k exp(terms_k - M)).
double log_sum_exp(std::span<const double> terms);

}  // namespace parcmi::specfun
