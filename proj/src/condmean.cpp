#include "parcmi/condmean.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "parcmi/error.hpp"
#include "parcmi/specfun.hpp"

namespace parcmi {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double softplus(double v) {
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

void require_finite(double w, const char* what) {
  if (std::isnan(w)) fail(ErrorKind::Domain, std::string(what) + ": NaN censoring value");
}

void check_mean_exists(const SubjectParams& params) {
  if (const auto* ll = std::get_if<dist::LogLogistic>(&params); ll && ll->shape <= 1.0)
    fail(ErrorKind::NonexistentMean,
         "log-logistic mean does not exist for shape <= 1 (shape = " + std::to_string(ll->shape) +
             ")");
}

// Cutpoints above x mapped through t = 1 / (1 + tau - x).
std::vector<double> mapped_breaks(const SubjectParams& params, double x) {
  std::vector<double> out;
  if (const auto* pw = std::get_if<dist::PiecewiseExponential>(&params)) {
    for (double tau : pw->cutpoints)
      if (tau > x) out.push_back(1.0 / (1.0 + (tau - x)));
    std::sort(out.begin(), out.end());
  }
  return out;
}

double integrate_or_throw(const std::function<double(double)>& f, double a, double b,
                          const quadrature::Controls& quad, std::span<const double> breaks,
                          const char* what) {
  const quadrature::Result r = quadrature::integrate(f, a, b, quad, breaks);
  if (!r.converged || !std::isfinite(r.value))
    fail(ErrorKind::Convergence, std::string(what) + ": adaptive quadrature did not reach tolerance"
                                                     " (estimated error " +
                                     std::to_string(r.abs_error) + ")");
  return r.value;
}

// Mean residual life by direct quadrature of S(x)/S(w) over the t-substitution.
double mrl_integral(const SubjectParams& params, double w, const quadrature::Controls& quad) {
  const double lsw = log_survival(params, w);
  auto integrand = [&](double t) {
    if (t <= 0.0) return 0.0;
    const double x = w + (1.0 - t) / t;
    const double v = std::exp(log_survival(params, x) - lsw - 2.0 * std::log(t));
    return std::isfinite(v) ? v : 0.0;
  };
  const auto breaks = mapped_breaks(params, w);
  return integrate_or_throw(integrand, 0.0, 1.0, quad, breaks, "conditional mean");
}

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double tail_checked_log_survival(const SubjectParams& params, double w, double eps) {
  const double ls = log_survival(params, w);
  if (!(ls > std::log(eps)))
    fail(ErrorKind::DeepTail, "deep-tail censoring: S(" + g6(w) + ") = exp(" + g6(ls) +
                                  ") is below the threshold " + g6(eps));
  return ls;
}

double analytic(const SubjectParams& params, double w) {
  struct Visitor {
    double w;
    double operator()(const dist::Exponential& d) const { return cm_exponential_analytic(d.rate, w); }
    double operator()(const dist::Weibull& d) const {
      return cm_weibull_analytic(d.shape, d.rate, w);
    }
    double operator()(const dist::LogNormal& d) const {
      return cm_lognormal_analytic(d.mu, d.sigma, w);
    }
    double operator()(const dist::LogLogistic& d) const {
      return cm_loglogistic_analytic(d.shape, d.scale, w);
    }
    double operator()(const dist::PiecewiseExponential& d) const {
      return cm_pwe_analytic(d.rates, d.cutpoints, w);
    }
    double operator()(const dist::Gaussian&) const { return unsupported("gaussian"); }
    double operator()(const dist::Logistic&) const { return unsupported("logistic"); }
    static double unsupported(const char* name) {
      fail(ErrorKind::Unsupported,
           std::string("no closed-form conditional mean for the ") + name + " family");
    }
  };
  return std::visit(Visitor{w}, params);
}

}  // namespace

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::Analytic: return "analytic";
    case Strategy::StabilizedWithMean: return "stab-mean";
    case Strategy::StabilizedNoMean: return "stab-nomean";
    case Strategy::OriginalIntegral: return "integral";
  }
  return "?";
}

Strategy strategy_from_string(std::string_view name) {
  std::string s;
  for (char c : name)
    if (c != '-' && c != '_' && c != ' ') s.push_back(static_cast<char>(std::tolower(c)));
  if (s == "analytic") return Strategy::Analytic;
  if (s == "stabmean" || s == "stabilizedwithmean") return Strategy::StabilizedWithMean;
  if (s == "stabnomean" || s == "stabilizednomean") return Strategy::StabilizedNoMean;
  if (s == "integral" || s == "originalintegral") return Strategy::OriginalIntegral;
  fail(ErrorKind::Config, "unknown strategy '" + std::string(name) +
                              "' (expected analytic, stab-mean, stab-nomean or integral)");
}

Strategy default_strategy(Family family) noexcept {
  return family == Family::Gaussian || family == Family::Logistic ? Strategy::StabilizedWithMean
                                                                  : Strategy::Analytic;
}

void CondMeanOptions::validate() const {
  if (!(quad.abs_tol > 0.0) || !(quad.rel_tol > 0.0))
    fail(ErrorKind::Config, "quadrature tolerances must be positive");
  if (quad.max_subdivisions < 1) fail(ErrorKind::Config, "max_subdivisions must be >= 1");
  if (grid < 100) fail(ErrorKind::Config, "log-scale grid size K must be >= 100");
  if (!(tail_eps > 0.0) || tail_eps >= 1.0) fail(ErrorKind::Config, "tail_eps must be in (0, 1)");
}

CondMeanOptions default_options(Family family) {
  CondMeanOptions o;
  o.strategy = default_strategy(family);
  return o;
}

double cm_exponential_analytic(double rate, double w) {
  if (!(rate > 0.0)) fail(ErrorKind::Domain, "exponential rate must be positive");
  return std::max(w, 0.0) + 1.0 / rate;
}

double cm_weibull_analytic(double alpha, double lambda, double w) {
  if (!(alpha > 0.0) || !(lambda > 0.0)) fail(ErrorKind::Domain, "weibull parameters must be positive");
  w = std::max(w, 0.0);
  const double a = 1.0 / alpha;
  const double t = lambda * std::pow(w, alpha);
  // Gamma(1/a) Q(1/a, t) / {exp(-t) alpha lambda^(1/alpha)}, on the log scale.
  const double log_mrl = specfun::log_gamma(a) +
                         specfun::log_upper_incomplete_gamma_regularized(a, t) + t -
                         std::log(alpha) - a * std::log(lambda);
  return w + std::exp(log_mrl);
}

double cm_lognormal_analytic(double mu, double sigma, double w) {
  if (!(sigma > 0.0) || !std::isfinite(mu)) fail(ErrorKind::Domain, "lognormal parameters invalid");
  const double log_mean = mu + 0.5 * sigma * sigma;
  if (w <= 0.0) return std::exp(log_mean);
  const double z = (std::log(w) - mu) / sigma;
  const double num = specfun::log_normal_sf(z - sigma);
  const double den = specfun::log_normal_sf(z);
  if (!std::isfinite(num) || !std::isfinite(den))
    fail(ErrorKind::DeepTail, "lognormal survival underflows at w = " + std::to_string(w));
  return std::exp(log_mean + num - den);
}

double cm_loglogistic_analytic(double alpha, double lambda, double w) {
  if (!(lambda > 0.0) || !(alpha > 0.0)) fail(ErrorKind::Domain, "log-logistic parameters invalid");
  if (alpha <= 1.0)
    fail(ErrorKind::NonexistentMean, "log-logistic mean does not exist for shape <= 1");
  w = std::max(w, 0.0);
  const double a = 1.0 - 1.0 / alpha;
  const double b = 1.0 / alpha;
  if (w == 0.0) return lambda * std::numbers::pi / (alpha * std::sin(std::numbers::pi / alpha));
  const double log_r = alpha * std::log(w / lambda);  // log (w/lambda)^alpha
  const double log_one_plus_r = softplus(log_r);
  const double u0 = std::exp(-log_one_plus_r);
  const double ibeta = specfun::regularized_incomplete_beta(u0, a, b);
  if (!(ibeta > 0.0))
    fail(ErrorKind::DeepTail, "log-logistic incomplete beta underflows at w = " + std::to_string(w));
  return w + std::exp(std::log(lambda / alpha) + log_one_plus_r + specfun::log_beta(a, b) +
                      std::log(ibeta));
}

double cm_pwe_analytic(std::span<const double> rates, std::span<const double> cutpoints, double w) {
  dist::PiecewiseExponential d{std::vector<double>(cutpoints.begin(), cutpoints.end()),
                               std::vector<double>(rates.begin(), rates.end())};
  const SubjectParams params = d;
  validate(params);
  const std::size_t J = rates.size();
  w = std::max(w, 0.0);
  const std::size_t ji = d.interval_of(w);
  const double hw = cum_hazard(params, w);
  // Each interval j >= J_i contributes {S(start) - S(end)} / lambda_j,
  // expressed relative to S(w).
  double total = 0.0;
  for (std::size_t j = ji; j < J; ++j) {
    const double start = j == ji ? w : cutpoints[j];
    const double s_start = j == ji ? 1.0 : std::exp(-(cum_hazard(params, start) - hw));
    const double s_end = j + 1 < J ? std::exp(-(cum_hazard(params, cutpoints[j + 1]) - hw)) : 0.0;
    total += (s_start - s_end) / rates[j];
  }
  return w + total;
}

double cm_stabilized_with_mean(const SubjectParams& params, double w,
                               const quadrature::Controls& quad) {
  check_mean_exists(params);
  const double m = mean(params);
  if (!std::isfinite(m)) fail(ErrorKind::NonexistentMean, "family mean is not finite");
  const double sw = survival(params, w);
  auto S = [&](double x) { return survival(params, x); };
  quadrature::Controls q = quad;
  q.abs_tol = quad.abs_tol * sw;  // absolute accuracy of the residual life, not of the integral

  const Family fam = family_of(params);
  if (positive_support(fam)) {
    w = std::max(w, 0.0);
    std::vector<double> breaks;
    if (const auto* pw = std::get_if<dist::PiecewiseExponential>(&params))
      for (double tau : pw->cutpoints)
        if (tau > 0.0 && tau < w) breaks.push_back(tau);
    const double head = w > 0.0 ? integrate_or_throw(S, 0.0, w, q, breaks, "stabilized mean") : 0.0;
    return w + (m - head) / sw;
  }

  // Real support: int_w^inf S = (mu - c) + int_{-inf}^c F - int_c^w S.
  double sigma = 0.0, left_tail = 0.0;
  const double c = [&] {
    if (const auto* g = std::get_if<dist::Gaussian>(&params)) {
      sigma = g->sigma;
      const double cc = std::min(g->mu, w) - 40.0 * sigma;
      const double zc = (cc - g->mu) / sigma;
      left_tail = sigma * (zc * specfun::normal_cdf(zc) + specfun::normal_pdf(zc));
      return cc;
    }
    const auto& l = std::get<dist::Logistic>(params);
    sigma = l.sigma;
    const double cc = std::min(l.mu, w) - 40.0 * sigma;
    left_tail = sigma * softplus((cc - l.mu) / sigma);
    return cc;
  }();
  const double body = integrate_or_throw(S, c, w, q, {}, "stabilized mean");
  return w + ((m - c) + left_tail - body) / sw;
}

namespace {

// Nodes t_k = exp(1 - K/k): spacing ~1/K near t = 1, geometric towards 0.
// A uniform grid cannot resolve the t^(alpha - 2) singularity at t = 0 of
// polynomial tails; in s = k/K the integrand decays like exp(-c/s).
struct LogSumGrid {
  std::size_t size = 0;
  std::vector<double> offset;      // (1 - t) / t
  std::vector<double> log_weight;  // -2 log t + log(dt/ds / K), dt/ds = t / s^2
};

const LogSumGrid& log_sum_grid(std::size_t grid) {
  thread_local LogSumGrid g;
  if (g.size == grid) return g;
  const double K = static_cast<double>(grid);
  g.offset.resize(grid);
  g.log_weight.resize(grid);
  for (std::size_t k = 1; k <= grid; ++k) {
    const double s = static_cast<double>(k) / K;
    const double log_t = 1.0 - 1.0 / s;
    g.offset[k - 1] = std::expm1(-log_t);
    g.log_weight[k - 1] = -log_t - 2.0 * std::log(s) - std::log(K);
  }
  g.size = grid;
  return g;
}

}  // namespace

double cm_stabilized_no_mean(const SubjectParams& params, double w, std::size_t grid) {
  if (grid < 100) fail(ErrorKind::Config, "log-scale grid size K must be >= 100");
  check_mean_exists(params);
  if (positive_support(family_of(params))) w = std::max(w, 0.0);
  const double hw = cum_hazard(params, w);
  const LogSumGrid& g = log_sum_grid(grid);
  std::vector<double> m;
  m.reserve(grid);
  for (std::size_t k = 0; k < grid; ++k) {
    const double x = w + g.offset[k];
    if (!std::isfinite(x)) continue;
    const double dh = cum_hazard(params, x) - hw;
    if (!std::isfinite(dh)) continue;
    m.push_back(g.log_weight[k] - dh);
  }
  // Trapezoid in s: the integrand vanishes at s = 0, so only t = 1 is halved.
  m.back() -= std::numbers::ln2;
  return w + std::exp(specfun::log_sum_exp(m));
}

double cm_original_integral(const SubjectParams& params, double w,
                            const quadrature::Controls& quad) {
  check_mean_exists(params);
  if (positive_support(family_of(params))) w = std::max(w, 0.0);
  return w + mrl_integral(params, w, quad);
}

double cm_right(const SubjectParams& params, double w, const CondMeanOptions& options) {
  options.validate();
  require_finite(w, "cm_right");
  validate(params);
  check_mean_exists(params);
  if (std::isinf(w)) fail(ErrorKind::DeepTail, "censoring value is infinite");
  if (positive_support(family_of(params))) w = std::max(w, 0.0);
  tail_checked_log_survival(params, w, options.tail_eps);
  switch (options.strategy) {
    case Strategy::Analytic: return analytic(params, w);
    case Strategy::StabilizedWithMean: return cm_stabilized_with_mean(params, w, options.quad);
    case Strategy::StabilizedNoMean: return cm_stabilized_no_mean(params, w, options.grid);
    case Strategy::OriginalIntegral: return cm_original_integral(params, w, options.quad);
  }
  fail(ErrorKind::Config, "unknown strategy");
}

double cm_right(const SubjectParams& params, double w) {
  return cm_right(params, w, default_options(family_of(params)));
}

double cm_interval(const SubjectParams& params, double l, double u,
                   const CondMeanOptions& options) {
  options.validate();
  require_finite(l, "cm_interval");
  require_finite(u, "cm_interval");
  validate(params);
  if (!(l < u)) fail(ErrorKind::Domain, "cm_interval requires l < u");
  if (std::isinf(u)) return cm_right(params, l, options);
  if (positive_support(family_of(params))) {
    if (u <= 0.0) fail(ErrorKind::EmptyIntervalMass, "interval lies below the support");
    l = std::max(l, 0.0);
  }
  if (std::isinf(l)) fail(ErrorKind::Domain, "cm_interval: lower bound must be finite");

  // E = l + int_l^u {R(x) - R(u)} dx / {1 - R(u)}, R(x) = S(x) / S(l).
  const double lsl = log_survival(params, l);
  const double log_ru = log_survival(params, u) - lsl;
  const double mass_rel = -std::expm1(log_ru);
  if (!(std::exp(lsl) * mass_rel > options.tail_eps))
    fail(ErrorKind::EmptyIntervalMass, "interval (" + g6(l) + ", " + g6(u) +
                                           "] has probability below " + g6(options.tail_eps));
  const double ru = std::exp(log_ru);
  auto integrand = [&](double t) {
    if (t <= 0.0) return 0.0;
    const double x = l + (1.0 - t) / t;
    const double r = std::exp(log_survival(params, x) - lsl);
    const double v = (r - ru) / (t * t);
    return std::isfinite(v) ? std::max(v, 0.0) : 0.0;
  };
  const double tu = 1.0 / (1.0 + (u - l));
  std::vector<double> breaks;
  for (double b : mapped_breaks(params, l))
    if (b > tu) breaks.push_back(b);
  quadrature::Controls q = options.quad;
  q.abs_tol = options.quad.abs_tol * mass_rel;
  const double body = integrate_or_throw(integrand, tu, 1.0, q, breaks, "interval conditional mean");
  return std::clamp(l + body / mass_rel, l, u);
}

double cm_interval(const SubjectParams& params, double l, double u) {
  return cm_interval(params, l, u, default_options(family_of(params)));
}

}  // namespace parcmi
