#include "parcmi/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "parcmi/error.hpp"

namespace parcmi::specfun {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 100000;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* fn, const std::string& what) {
  if (!ok) fail(ErrorKind::Domain, std::string(fn) + ": " + what);
}

double lanczos_log_gamma(double a) {
  // g = 7, n = 9; valid for a >= 0.5.
  static constexpr std::array<double, 9> p = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  const double z = a - 1.0;
  double x = p[0];
  for (int i = 1; i < 9; ++i) x += p[i] / (z + i);
  const double t = z + 7.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(x);
}

double stirling_log_gamma(double a) {
  const double inv = 1.0 / a;
  const double inv2 = inv * inv;
  // Bernoulli-number series, truncated after the a^-13 term.
  const double series =
      inv * (1.0 / 12.0 +
             inv2 * (-1.0 / 360.0 +
                     inv2 * (1.0 / 1260.0 +
                             inv2 * (-1.0 / 1680.0 +
                                     inv2 * (1.0 / 1188.0 +
                                             inv2 * (-691.0 / 360360.0 +
                                                     inv2 * (1.0 / 156.0)))))));
  return (a - 0.5) * std::log(a) - a + 0.5 * std::log(2.0 * std::numbers::pi) +
         series;
}

// Series for P(a, t); returns sum such that P = sum * exp(-t + a ln t - lgamma a).
double gamma_series(double a, double t) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= t / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) return sum;
  }
  fail(ErrorKind::Convergence, "incomplete gamma series did not converge");
}

// Lentz continued fraction; Q = h * exp(-t + a ln t - lgamma a).
double gamma_continued_fraction(double a, double t) {
  double b = t + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  fail(ErrorKind::Convergence, "incomplete gamma continued fraction did not converge");
}

double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  fail(ErrorKind::Convergence, "incomplete beta continued fraction did not converge");
}

// Mills ratio R(z) = (1 - Phi(z)) / phi(z) for z >= 5 via Laplace's fraction.
double mills_ratio(double z) {
  double b = z;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = i;
    d = 1.0 / (z + an * d);
    c = z + an / c;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  fail(ErrorKind::Convergence, "Mills ratio continued fraction did not converge");
}

double student_t_pdf(double t, double df) {
  const double logc = log_gamma(0.5 * (df + 1.0)) - log_gamma(0.5 * df) -
                      0.5 * std::log(df * std::numbers::pi);
  return std::exp(logc - 0.5 * (df + 1.0) * std::log1p(t * t / df));
}

}  // namespace

double log_gamma(double a) {
  require(a > 0.0 && std::isfinite(a), "log_gamma", "requires finite a > 0");
  if (a < 0.5) return lanczos_log_gamma(a + 1.0) - std::log(a);
  if (a < 10.0) return lanczos_log_gamma(a);
  return stirling_log_gamma(a);
}

double log_beta(double a, double b) {
  require(a > 0.0 && b > 0.0, "log_beta", "requires a, b > 0");
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double lower_incomplete_gamma_regularized(double a, double t) {
  return 1.0 - upper_incomplete_gamma_regularized(a, t);
}

double upper_incomplete_gamma_regularized(double a, double t) {
  require(a > 0.0 && std::isfinite(a), "upper_incomplete_gamma", "requires a > 0");
  require(t >= 0.0, "upper_incomplete_gamma", "requires t >= 0");
  if (t == 0.0) return 1.0;
  if (std::isinf(t)) return 0.0;
  const double front = -t + a * std::log(t) - log_gamma(a);
  if (t < a + 1.0) {
    const double p = gamma_series(a, t) * std::exp(front);
    return std::clamp(1.0 - p, 0.0, 1.0);
  }
  return std::clamp(gamma_continued_fraction(a, t) * std::exp(front), 0.0, 1.0);
}

double log_upper_incomplete_gamma_regularized(double a, double t) {
  require(a > 0.0 && std::isfinite(a), "log_upper_incomplete_gamma", "requires a > 0");
  require(t >= 0.0, "log_upper_incomplete_gamma", "requires t >= 0");
  if (t == 0.0) return 0.0;
  if (std::isinf(t)) return -kInf;
  const double front = -t + a * std::log(t) - log_gamma(a);
  if (t < a + 1.0) {
    const double p = gamma_series(a, t) * std::exp(front);
    return std::log1p(-std::min(p, 1.0));
  }
  return front + std::log(gamma_continued_fraction(a, t));
}

double normal_cdf(double x) {
  require(!std::isnan(x), "normal_cdf", "NaN argument");
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_pdf(double x) {
  require(!std::isnan(x), "normal_pdf", "NaN argument");
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double log_normal_sf(double z) {
  require(!std::isnan(z), "log_normal_sf", "NaN argument");
  if (z < 5.0) return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
  if (std::isinf(z)) return -kInf;
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log(mills_ratio(z));
}

double log_normal_cdf(double z) { return log_normal_sf(-z); }

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal_quantile", "requires p in (0, 1)");
  // Acklam's rational approximation followed by one Halley refinement.
  static constexpr std::array<double, 6> a = {
      -3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b = {
      -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr std::array<double, 6> c = {
      -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d = {
      7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement; the residual Phi(x) - p is taken from whichever tail
  // keeps it well conditioned.
  for (int it = 0; it < 2; ++it) {
    const double e = (x <= 0.0) ? 0.5 * std::erfc(-x / std::numbers::sqrt2) - p
                                : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + x * u / 2.0);
  }
  return x;
}

double regularized_incomplete_beta(double t, double a, double b) {
  require(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b),
          "regularized_incomplete_beta", "requires a, b > 0");
  require(t >= 0.0 && t <= 1.0, "regularized_incomplete_beta", "requires t in [0, 1]");
  if (t == 0.0) return 0.0;
  if (t == 1.0) return 1.0;
  const double front =
      std::exp(a * std::log(t) + b * std::log1p(-t) - log_beta(a, b));
  if (t < (a + 1.0) / (a + b + 2.0)) {
    return std::clamp(front * beta_continued_fraction(a, b, t) / a, 0.0, 1.0);
  }
  return std::clamp(1.0 - front * beta_continued_fraction(b, a, 1.0 - t) / b, 0.0, 1.0);
}

double student_t_cdf(double t, double df) {
  require(!std::isnan(t), "student_t_cdf", "NaN argument");
  require(df > 0.0, "student_t_cdf", "requires df > 0");
  if (std::isinf(df)) return normal_cdf(t);
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(x, 0.5 * df, 0.5);
  return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df) {
  require(p > 0.0 && p < 1.0, "student_t_quantile", "requires p in (0, 1)");
  require(df > 0.0, "student_t_quantile", "requires df > 0");
  if (std::isinf(df) || df > 1e10) return normal_quantile(p);
  if (p < 0.5) return -student_t_quantile(1.0 - p, df);
  if (p == 0.5) return 0.0;
  double lo = 0.0;
  double hi = std::max(1.0, normal_quantile(p));
  while (student_t_cdf(hi, df) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) fail(ErrorKind::Convergence, "student_t_quantile: bracket overflow");
  }
  // Safeguarded Newton inside the bracket.
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 200; ++i) {
    const double f = student_t_cdf(x, df) - p;
    if (f > 0.0) hi = x; else lo = x;
    double next = x - f / student_t_pdf(x, df);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-15 * std::max(1.0, std::fabs(x))) return next;
    x = next;
  }
  return x;
}

double log_sum_exp(std::span<const double> terms) {
  require(!terms.empty(), "log_sum_exp", "empty sequence");
  double m = -kInf;
  for (double v : terms) {
    require(!std::isnan(v), "log_sum_exp", "NaN term");
    m = std::max(m, v);
  }
  if (std::isinf(m)) return m;
  double sum = 0.0;
  for (double v : terms) sum += std::exp(v - m);
  return m + std::log(sum);
}

}  // namespace parcmi::specfun
