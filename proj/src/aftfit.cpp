#include "parcmi/aftfit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "parcmi/error.hpp"
#include "parcmi/specfun.hpp"

namespace parcmi {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// ---------------------------------------------------------------------------
// Standardized error distributions of the location-scale (AFT) families.

enum class ErrorDist { ExtremeValue, Normal, Logistic };

struct D012 {
  double v, d1, d2;  // value and first two derivatives in z
};

double softplus(double v) {
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}
double sigmoid(double v) {
  return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

D012 log_pdf(ErrorDist e, double z) {
  switch (e) {
    case ErrorDist::ExtremeValue: {
      const double ez = std::exp(z);
      return {z - ez, 1.0 - ez, -ez};
    }
    case ErrorDist::Normal:
      return {-0.5 * z * z - kLogSqrt2Pi, -z, -1.0};
    case ErrorDist::Logistic: {
      const double F = sigmoid(z);
      return {-std::fabs(z) - 2.0 * std::log1p(std::exp(-std::fabs(z))), 1.0 - 2.0 * F,
              -2.0 * F * (1.0 - F)};
    }
  }
  return {};
}

D012 log_sf(ErrorDist e, double z) {
  switch (e) {
    case ErrorDist::ExtremeValue: {
      const double ez = std::exp(z);
      return {-ez, -ez, -ez};
    }
    case ErrorDist::Normal: {
      const double v = specfun::log_normal_sf(z);
      const double m = std::exp(-0.5 * z * z - kLogSqrt2Pi - v);  // hazard phi / S
      return {v, -m, -m * (m - z)};
    }
    case ErrorDist::Logistic: {
      const double F = sigmoid(z);
      return {-softplus(z), -F, -F * (1.0 - F)};
    }
  }
  return {};
}

struct AftLayout {
  ErrorDist dist;
  bool log_time;   // model log X rather than X
  bool has_scale;  // scale s estimated (otherwise fixed at 1)
};

AftLayout aft_layout(Family f) {
  switch (f) {
    case Family::Exponential: return {ErrorDist::ExtremeValue, true, false};
    case Family::Weibull: return {ErrorDist::ExtremeValue, true, true};
    case Family::LogNormal: return {ErrorDist::Normal, true, true};
    case Family::LogLogistic: return {ErrorDist::Logistic, true, true};
    case Family::Gaussian: return {ErrorDist::Normal, false, true};
    case Family::Logistic: return {ErrorDist::Logistic, false, true};
    case Family::PiecewiseExponential: break;
  }
  fail(ErrorKind::Unsupported, "piecewise exponential is not a location-scale family");
}

// ---------------------------------------------------------------------------
// Location-scale log-likelihood on theta = (beta, [log s]).

LikelihoodDerivatives evaluate_aft(const AftLayout& lay, const Eigen::VectorXd& theta,
                                   const CensoredSample& data, bool derivs) {
  const std::size_t q = data.covariate_count();
  const std::size_t p = q + 1;
  const std::size_t d = p + (lay.has_scale ? 1 : 0);
  const double log_s = lay.has_scale ? theta[p] : 0.0;
  const double s = std::exp(log_s);

  LikelihoodDerivatives out;
  if (derivs) {
    out.gradient = Eigen::VectorXd::Zero(d);
    out.hessian = Eigen::MatrixXd::Zero(d, d);
  }
  std::vector<double> x(p);
  auto transform = [&](double v) {
    if (!lay.log_time) return v;
    return v <= 0.0 ? -kInf : std::log(v);
  };

  for (std::size_t i = 0; i < data.size(); ++i) {
    const Observation& o = data.observation(i);
    const auto z = data.covariates(i);
    x[0] = 1.0;
    for (std::size_t j = 0; j < q; ++j) x[j + 1] = z[j];
    double eta = 0.0;
    for (std::size_t j = 0; j < p; ++j) eta += theta[j] * x[j];

    // Per-row derivatives with respect to (eta, log s).
    double value = 0.0, g_eta = 0.0, g_ls = 0.0, h_ee = 0.0, h_el = 0.0, h_ll = 0.0;

    if (o.kind == Censoring::Exact || o.kind == Censoring::Right) {
      const double y = transform(o.lower);
      if (o.kind == Censoring::Right && std::isinf(y) && y < 0) continue;  // S = 1
      if (std::isinf(y))
        fail(ErrorKind::Data, "exact observation outside the family's support");
      const double zz = (y - eta) / s;
      const bool exact = o.kind == Censoring::Exact;
      const D012 t = exact ? log_pdf(lay.dist, zz) : log_sf(lay.dist, zz);
      value = t.v;
      if (exact) value -= log_s + (lay.log_time ? y : 0.0);
      if (!std::isfinite(value)) {
        out.value = -kInf;
        return out;
      }
      if (derivs) {
        g_eta = -t.d1 / s;
        g_ls = -t.d1 * zz - (exact ? 1.0 : 0.0);
        h_ee = t.d2 / (s * s);
        h_el = (t.d2 * zz + t.d1) / s;
        h_ll = t.d2 * zz * zz + t.d1 * zz;
      }
    } else {
      const double yl = transform(o.lower);
      const double yu = std::isinf(o.upper) ? kInf : transform(o.upper);
      const double zl = (yl - eta) / s;
      const double zu = (yu - eta) / s;
      const bool has_l = std::isfinite(zl);
      const bool has_u = std::isfinite(zu);
      const double lsl = has_l ? log_sf(lay.dist, zl).v : 0.0;
      const double lsu = has_u ? log_sf(lay.dist, zu).v : -kInf;
      const double log_mass = lsl + std::log1p(-std::exp(lsu - lsl));
      value = log_mass;
      if (!std::isfinite(value)) {
        out.value = -kInf;
        return out;
      }
      if (derivs) {
        // T(zl, zu) = log{S(zl) - S(zu)}.
        double Tl = 0, Tu = 0, Tll = 0, Tuu = 0;
        double lf1l = 0, lf1u = 0;
        if (has_l) {
          const D012 lf = log_pdf(lay.dist, zl);
          const double r = std::exp(lf.v - log_mass);
          Tl = -r;
          lf1l = lf.d1;
          Tll = -lf1l * r - Tl * Tl;
        }
        if (has_u) {
          const D012 lf = log_pdf(lay.dist, zu);
          const double r = std::exp(lf.v - log_mass);
          Tu = r;
          lf1u = lf.d1;
          Tuu = lf1u * r - Tu * Tu;
        }
        const double Tlu = -Tl * Tu;
        // dz/deta = -1/s, dz/dlogs = -z, d2z/deta dlogs = 1/s, d2z/dlogs2 = z.
        const double le = has_l ? -1.0 / s : 0, ll = has_l ? -zl : 0;
        const double ue = has_u ? -1.0 / s : 0, ul = has_u ? -zu : 0;
        g_eta = Tl * le + Tu * ue;
        g_ls = Tl * ll + Tu * ul;
        h_ee = Tll * le * le + 2.0 * Tlu * le * ue + Tuu * ue * ue;
        h_el = Tll * le * ll + Tlu * (le * ul + ue * ll) + Tuu * ue * ul +
               (has_l ? Tl / s : 0.0) + (has_u ? Tu / s : 0.0);
        h_ll = Tll * ll * ll + 2.0 * Tlu * ll * ul + Tuu * ul * ul + (has_l ? Tl * zl : 0.0) +
               (has_u ? Tu * zu : 0.0);
      }
    }
    out.value += value;
    if (derivs) {
      for (std::size_t a = 0; a < p; ++a) {
        out.gradient[a] += g_eta * x[a];
        for (std::size_t b = 0; b <= a; ++b) out.hessian(a, b) += h_ee * x[a] * x[b];
        if (lay.has_scale) out.hessian(p, a) += h_el * x[a];
      }
      if (lay.has_scale) {
        out.gradient[p] += g_ls;
        out.hessian(p, p) += h_ll;
      }
    }
  }
  if (derivs) out.hessian = out.hessian.selfadjointView<Eigen::Lower>();
  return out;
}

// ---------------------------------------------------------------------------
// Piecewise exponential on theta = (b_1..b_J, gamma_1..gamma_q).

// Time at risk R_j(x) in each interval, accumulated into r (size J).
void exposure(std::span<const double> cut, double x, std::vector<double>& r) {
  const std::size_t J = cut.size();
  std::fill(r.begin(), r.end(), 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    if (x <= cut[j]) break;
    const double hi = j + 1 < J ? cut[j + 1] : kInf;
    r[j] = std::min(x, hi) - cut[j];
  }
}

std::size_t interval_index(std::span<const double> cut, double x) {
  const auto it = std::upper_bound(cut.begin(), cut.end(), x);
  return it == cut.begin() ? 0 : static_cast<std::size_t>(it - cut.begin()) - 1;
}

LikelihoodDerivatives evaluate_pwe(std::span<const double> cut, const Eigen::VectorXd& theta,
                                   const CensoredSample& data, bool derivs) {
  const std::size_t J = cut.size();
  const std::size_t q = data.covariate_count();
  const std::size_t d = J + q;
  LikelihoodDerivatives out;
  if (derivs) {
    out.gradient = Eigen::VectorXd::Zero(d);
    out.hessian = Eigen::MatrixXd::Zero(d, d);
  }
  std::vector<double> rl(J), ru(J);
  Eigen::VectorXd grad_hl(d), grad_d(d);

  for (std::size_t i = 0; i < data.size(); ++i) {
    const Observation& o = data.observation(i);
    const auto z = data.covariates(i);
    double lp = 0.0;
    for (std::size_t j = 0; j < q; ++j) lp += theta[J + j] * z[j];
    const double e = std::exp(lp);

    const bool interval = o.kind == Censoring::Interval && std::isfinite(o.upper);
    exposure(cut, o.lower, rl);
    double hl = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      rl[j] *= e * std::exp(theta[j]);  // now H_j(lower)
      hl += rl[j];
    }

    if (!interval) {
      const bool exact = o.kind == Censoring::Exact;
      const std::size_t jw = interval_index(cut, o.lower);
      out.value += (exact ? theta[jw] + lp : 0.0) - hl;
      if (!derivs) continue;
      for (std::size_t j = 0; j < J; ++j) {
        out.gradient[j] += (exact && j == jw ? 1.0 : 0.0) - rl[j];
        out.hessian(j, j) -= rl[j];
        for (std::size_t a = 0; a < q; ++a) out.hessian(J + a, j) -= rl[j] * z[a];
      }
      for (std::size_t a = 0; a < q; ++a) {
        out.gradient[J + a] += ((exact ? 1.0 : 0.0) - hl) * z[a];
        for (std::size_t b = 0; b <= a; ++b) out.hessian(J + a, J + b) -= hl * z[a] * z[b];
      }
      continue;
    }

    exposure(cut, o.upper, ru);
    double hu = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      ru[j] *= e * std::exp(theta[j]);
      hu += ru[j];
    }
    const double D = hu - hl;
    if (!(D > 0.0)) {
      out.value = -kInf;
      return out;
    }
    const double em1 = std::expm1(D);
    out.value += -hl + std::log(-std::expm1(-D));
    if (!derivs) continue;
    const double g1 = 1.0 / em1;
    const double g2 = -g1 * (1.0 + g1);
    for (std::size_t j = 0; j < J; ++j) {
      grad_hl[j] = rl[j];
      grad_d[j] = ru[j] - rl[j];
    }
    for (std::size_t a = 0; a < q; ++a) {
      grad_hl[J + a] = hl * z[a];
      grad_d[J + a] = D * z[a];
    }
    out.gradient += -grad_hl + g1 * grad_d;
    // Second derivatives of a log-linear cumulative hazard H = sum_j c_j:
    // d2/db_j2 = c_j, d2/db_j dgamma = c_j z, d2/dgamma2 = H z z^T.
    auto add_h2 = [&](double coef, const std::vector<double>& c, double total) {
      for (std::size_t j = 0; j < J; ++j) {
        out.hessian(j, j) += coef * c[j];
        for (std::size_t a = 0; a < q; ++a) out.hessian(J + a, j) += coef * c[j] * z[a];
      }
      for (std::size_t a = 0; a < q; ++a)
        for (std::size_t b = 0; b <= a; ++b) out.hessian(J + a, J + b) += coef * total * z[a] * z[b];
    };
    std::vector<double> diff(J);
    for (std::size_t j = 0; j < J; ++j) diff[j] = ru[j] - rl[j];
    add_h2(-1.0, rl, hl);
    add_h2(g1, diff, D);
    Eigen::MatrixXd outer = g2 * grad_d * grad_d.transpose();
    out.hessian.triangularView<Eigen::Lower>() += outer;
  }
  if (derivs) out.hessian = out.hessian.selfadjointView<Eigen::Lower>();
  return out;
}

LikelihoodDerivatives evaluate(const FamilySpec& layout, const Eigen::VectorXd& theta,
                               const CensoredSample& data, bool derivs) {
  if (layout.family == Family::PiecewiseExponential)
    return evaluate_pwe(layout.cutpoints, theta, data, derivs);
  return evaluate_aft(aft_layout(layout.family), theta, data, derivs);
}

std::size_t parameter_count(const FamilySpec& layout) {
  if (layout.family == Family::PiecewiseExponential)
    return layout.cutpoints.size() + layout.covariate_count();
  return layout.coefficients.size() + (aft_layout(layout.family).has_scale ? 1 : 0);
}

std::vector<std::string> parameter_names(const FamilySpec& layout) {
  std::vector<std::string> names;
  const std::size_t q = layout.covariate_count();
  if (layout.family == Family::PiecewiseExponential) {
    for (std::size_t j = 0; j < layout.cutpoints.size(); ++j)
      names.push_back("log_rate_" + std::to_string(j + 1));
  } else {
    names.emplace_back("(Intercept)");
  }
  for (std::size_t j = 0; j < q; ++j) names.push_back("z" + std::to_string(j + 1));
  if (layout.family != Family::PiecewiseExponential && aft_layout(layout.family).has_scale)
    names.emplace_back("log_scale");
  return names;
}

// Closed-form baseline log rates given slopes (right-censored/exact data):
// b_j = log(events_j / sum_i exp(gamma^T z_i) R_j(w_i)).
void profile_baseline(std::span<const double> cut, Eigen::VectorXd& theta,
                      const CensoredSample& data) {
  const std::size_t J = cut.size();
  const std::size_t q = data.covariate_count();
  std::vector<double> events(J, 0.0), exposure_sum(J, 0.0), r(J);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Observation& o = data.observation(i);
    const auto z = data.covariates(i);
    double lp = 0.0;
    for (std::size_t j = 0; j < q; ++j) lp += theta[J + j] * z[j];
    const double e = std::exp(lp);
    exposure(cut, o.lower, r);
    for (std::size_t j = 0; j < J; ++j) exposure_sum[j] += e * r[j];
    if (o.kind == Censoring::Exact) events[interval_index(cut, o.lower)] += 1.0;
  }
  for (std::size_t j = 0; j < J; ++j) {
    if (events[j] == 0.0 || exposure_sum[j] == 0.0)
      fail(ErrorKind::Degenerate, "piecewise exponential interval " + std::to_string(j + 1) +
                                      " has no events; rate is not identified");
    theta[j] = std::log(events[j] / exposure_sum[j]);
  }
}

// ---------------------------------------------------------------------------
// Optimizer.

using ValueFn = std::function<double(const Eigen::VectorXd&)>;

// Nelder-Mead maximization of f starting at x0.
Eigen::VectorXd nelder_mead(const ValueFn& f, const Eigen::VectorXd& x0, int max_evals) {
  const Eigen::Index d = x0.size();
  std::vector<Eigen::VectorXd> pts(d + 1, x0);
  std::vector<double> vals(d + 1);
  for (Eigen::Index i = 0; i < d; ++i) pts[i + 1][i] += 0.1 * std::max(1.0, std::fabs(x0[i]));
  auto neg = [&](const Eigen::VectorXd& x) {
    const double v = f(x);
    return std::isfinite(v) ? -v : kInf;
  };
  for (Eigen::Index i = 0; i <= d; ++i) vals[i] = neg(pts[i]);
  int evals = static_cast<int>(d + 1);
  std::vector<Eigen::Index> order(d + 1);
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const auto best = order.front(), worst = order.back(), second = order[d - 1];
    if (std::fabs(vals[worst] - vals[best]) <= 1e-13 * (1.0 + std::fabs(vals[best]))) break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i <= d; ++i)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(d);
    const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = neg(xr);
    ++evals;
    if (fr < vals[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = neg(xe);
      ++evals;
      if (fe < fr) { pts[worst] = xe; vals[worst] = fe; }
      else { pts[worst] = xr; vals[worst] = fr; }
    } else if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
    } else {
      const Eigen::VectorXd xc = centroid + 0.5 * (pts[worst] - centroid);
      const double fc = neg(xc);
      ++evals;
      if (fc < vals[worst]) {
        pts[worst] = xc;
        vals[worst] = fc;
      } else {
        for (Eigen::Index i = 0; i <= d; ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
          vals[i] = neg(pts[i]);
          ++evals;
        }
      }
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  return pts[static_cast<std::size_t>(it - vals.begin())];
}

struct NewtonOutcome {
  Eigen::VectorXd theta;
  LikelihoodDerivatives at;
  int iterations = 0;
  bool converged = false;
};

NewtonOutcome newton_maximize(const FamilySpec& layout, const CensoredSample& data,
                              Eigen::VectorXd theta, const FitOptions& options,
                              const std::function<void(Eigen::VectorXd&)>& refine) {
  auto value_at = [&](const Eigen::VectorXd& th) { return evaluate(layout, th, data, false).value; };
  refine(theta);
  LikelihoodDerivatives cur = evaluate(layout, theta, data, true);
  if (!std::isfinite(cur.value))
    fail(ErrorKind::Degenerate, "log-likelihood is not finite at the starting values");

  NewtonOutcome out;
  int non_pd_streak = 0;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    if (cur.gradient.norm() < options.tol) break;
    const Eigen::MatrixXd info = -cur.hessian;
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    Eigen::VectorXd step;
    if (llt.info() == Eigen::Success) {
      non_pd_streak = 0;
      step = llt.solve(cur.gradient);
    } else {
      if (++non_pd_streak >= 3) {
        const int budget = 400 * static_cast<int>(theta.size() * theta.size()) + 200;
        theta = nelder_mead(value_at, theta, budget);
        refine(theta);
        cur = evaluate(layout, theta, data, true);
        non_pd_streak = 0;
        continue;
      }
      // Levenberg shift until the shifted information is positive definite.
      double mu = 1e-6 * std::max(1.0, info.diagonal().cwiseAbs().maxCoeff());
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(info.rows(), info.cols());
      Eigen::LLT<Eigen::MatrixXd> shifted;
      for (int k = 0; k < 60; ++k, mu *= 10.0) {
        shifted.compute(info + mu * eye);
        if (shifted.info() == Eigen::Success) break;
      }
      step = shifted.solve(cur.gradient);
    }

    bool accepted = false;
    double scale = 1.0;
    const double floor_value = cur.value - 1e-12 * (1.0 + std::fabs(cur.value));
    for (int halving = 0; halving < 60; ++halving, scale *= 0.5) {
      Eigen::VectorXd cand = theta + scale * step;
      refine(cand);
      const double v = value_at(cand);
      if (std::isfinite(v) && v >= floor_value) {
        theta = std::move(cand);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    cur = evaluate(layout, theta, data, true);
  }
  out.theta = theta;
  out.at = std::move(cur);
  out.iterations = iter;
  out.converged = out.at.gradient.norm() < options.tol;
  return out;
}

FamilySpec make_layout(Family family, const CensoredSample& data, const FitOptions& options) {
  FamilySpec layout;
  layout.family = family;
  layout.coefficients.assign(data.covariate_count() + 1, 0.0);
  if (family == Family::PiecewiseExponential) {
    layout.cutpoints = options.pwe_cutpoints.empty()
                           ? default_pwe_cutpoints(data, options.pwe_intervals)
                           : options.pwe_cutpoints;
    layout.baseline_log_rates.assign(layout.cutpoints.size(), 0.0);
  } else if (aft_layout(family).has_scale) {
    layout.shape = 1.0;
  }
  return layout;
}

Eigen::VectorXd default_start(const FamilySpec& layout, const CensoredSample& data) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count(layout)));
  if (layout.family == Family::PiecewiseExponential) return theta;  // baseline profiled
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& o = data.observation(i);
    if (o.kind != Censoring::Exact) continue;
    sum += o.lower;
    ++count;
  }
  const double m = sum / static_cast<double>(count);
  theta[0] = positive_support(layout.family) ? std::log(m) : m;
  return theta;
}

}  // namespace

// ---------------------------------------------------------------------------

void CensoredSample::push(Observation o, std::span<const double> z) {
  if (z.size() != q_)
    fail(ErrorKind::Dimension, "CensoredSample: expected " + std::to_string(q_) +
                                   " covariates, got " + std::to_string(z.size()));
  for (double v : z)
    if (!std::isfinite(v)) fail(ErrorKind::Data, "CensoredSample: non-finite covariate");
  obs_.push_back(o);
  z_.insert(z_.end(), z.begin(), z.end());
}

void CensoredSample::add(double w, int delta, std::span<const double> z) {
  if (delta != 0 && delta != 1) fail(ErrorKind::Data, "event indicator must be 0 or 1");
  if (!std::isfinite(w)) fail(ErrorKind::Data, "observed value must be finite");
  push({w, delta == 1 ? w : kInf, delta == 1 ? Censoring::Exact : Censoring::Right}, z);
}

void CensoredSample::add_interval(double lower, double upper, std::span<const double> z) {
  if (!(lower < upper) || std::isnan(lower) || std::isinf(lower))
    fail(ErrorKind::Data, "interval rows need finite lower < upper");
  push({lower, upper, Censoring::Interval}, z);
}

std::size_t CensoredSample::event_count() const {
  return static_cast<std::size_t>(std::count_if(
      obs_.begin(), obs_.end(), [](const Observation& o) { return o.kind == Censoring::Exact; }));
}

bool CensoredSample::has_interval_rows() const {
  return std::any_of(obs_.begin(), obs_.end(), [](const Observation& o) {
    return o.kind == Censoring::Interval && std::isfinite(o.upper);
  });
}

CensoredSample CensoredSample::subset(std::span<const std::size_t> rows) const {
  CensoredSample out(q_);
  out.obs_.reserve(rows.size());
  out.z_.reserve(rows.size() * q_);
  for (std::size_t r : rows) {
    out.obs_.push_back(obs_.at(r));
    const auto z = covariates(r);
    out.z_.insert(out.z_.end(), z.begin(), z.end());
  }
  return out;
}

Eigen::VectorXd FittedImputationModel::standard_errors() const {
  return covariance.diagonal().cwiseSqrt();
}

Eigen::VectorXd to_unconstrained(const FamilySpec& input) {
  input.validate();
  const FamilySpec spec = to_aft(input);
  if (spec.family == Family::PiecewiseExponential) {
    const std::size_t J = spec.cutpoints.size();
    const std::size_t q = spec.covariate_count();
    Eigen::VectorXd theta(static_cast<Eigen::Index>(J + q));
    for (std::size_t j = 0; j < J; ++j) theta[j] = spec.baseline_log_rates[j] + spec.coefficients[0];
    for (std::size_t j = 0; j < q; ++j) theta[J + j] = spec.coefficients[j + 1];
    return theta;
  }
  const AftLayout lay = aft_layout(spec.family);
  const std::size_t p = spec.coefficients.size();
  Eigen::VectorXd theta(static_cast<Eigen::Index>(p + (lay.has_scale ? 1 : 0)));
  for (std::size_t j = 0; j < p; ++j) theta[j] = spec.coefficients[j];
  if (lay.has_scale) {
    const bool shape_is_alpha =
        spec.family == Family::Weibull || spec.family == Family::LogLogistic;
    theta[p] = shape_is_alpha ? -std::log(*spec.shape) : std::log(*spec.shape);
  }
  return theta;
}

FamilySpec from_unconstrained(const FamilySpec& layout, const Eigen::VectorXd& theta) {
  FamilySpec spec = layout;
  spec.link = Link::Aft;
  if (static_cast<std::size_t>(theta.size()) != parameter_count(layout))
    fail(ErrorKind::Dimension, "from_unconstrained: parameter vector has wrong length");
  if (spec.family == Family::PiecewiseExponential) {
    const std::size_t J = spec.cutpoints.size();
    spec.baseline_log_rates.resize(J);
    for (std::size_t j = 0; j < J; ++j) spec.baseline_log_rates[j] = theta[j];
    spec.coefficients[0] = 0.0;
    for (std::size_t j = 0; j < spec.covariate_count(); ++j) spec.coefficients[j + 1] = theta[J + j];
    return spec;
  }
  const AftLayout lay = aft_layout(spec.family);
  const std::size_t p = spec.coefficients.size();
  for (std::size_t j = 0; j < p; ++j) spec.coefficients[j] = theta[j];
  if (lay.has_scale) {
    const bool shape_is_alpha =
        spec.family == Family::Weibull || spec.family == Family::LogLogistic;
    spec.shape = shape_is_alpha ? std::exp(-theta[p]) : std::exp(theta[p]);
  } else {
    spec.shape.reset();
  }
  return spec;
}

double log_likelihood(const FamilySpec& spec, const CensoredSample& data) {
  if (spec.covariate_count() != data.covariate_count())
    fail(ErrorKind::Dimension, "log_likelihood: covariate count mismatch");
  const double v = evaluate(to_aft(spec), to_unconstrained(spec), data, false).value;
  return std::isnan(v) ? -kInf : v;
}

LikelihoodDerivatives log_likelihood_derivatives(const FamilySpec& spec,
                                                 const CensoredSample& data) {
  if (spec.covariate_count() != data.covariate_count())
    fail(ErrorKind::Dimension, "log_likelihood: covariate count mismatch");
  return evaluate(to_aft(spec), to_unconstrained(spec), data, true);
}

std::vector<double> default_pwe_cutpoints(const CensoredSample& data, std::size_t intervals) {
  if (intervals == 0) fail(ErrorKind::Config, "piecewise exponential needs J >= 1");
  std::vector<double> exact;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.observation(i).kind == Censoring::Exact) exact.push_back(data.observation(i).lower);
  if (exact.empty()) fail(ErrorKind::Degenerate, "no uncensored values to place cutpoints");
  std::sort(exact.begin(), exact.end());
  std::vector<double> cut{0.0};
  const double m = static_cast<double>(exact.size() - 1);
  for (std::size_t j = 1; j < intervals; ++j) {
    const double h = m * static_cast<double>(j) / static_cast<double>(intervals);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, exact.size() - 1);
    const double qv = exact[lo] + (h - static_cast<double>(lo)) * (exact[hi] - exact[lo]);
    if (qv > cut.back()) cut.push_back(qv);
  }
  return cut;
}

FittedImputationModel fit(Family family, const CensoredSample& data, const FitOptions& options) {
  if (data.size() == 0) fail(ErrorKind::Degenerate, "fit: empty sample");
  if (data.event_count() == 0)
    fail(ErrorKind::Degenerate, "fit: every row is censored; the likelihood is not identified");
  if (positive_support(family)) {
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data.observation(i).lower < 0.0)
        fail(ErrorKind::Data, "fit: negative value for a positive-support family (row " +
                                  std::to_string(i) + ")");
  }

  const FamilySpec layout = make_layout(family, data, options);
  const std::size_t k = parameter_count(layout);
  if (data.size() < k + 1)
    fail(ErrorKind::Degenerate, "fit: need at least k + 1 = " + std::to_string(k + 1) + " rows");

  Eigen::VectorXd theta0;
  if (options.init) {
    FamilySpec init = *options.init;
    if (init.family != family) fail(ErrorKind::Config, "fit: init has a different family");
    if (family == Family::PiecewiseExponential && init.cutpoints != layout.cutpoints)
      fail(ErrorKind::Config, "fit: init cutpoints differ from the fitting cutpoints");
    theta0 = to_unconstrained(init);
    if (static_cast<std::size_t>(theta0.size()) != k)
      fail(ErrorKind::Dimension, "fit: init has the wrong number of parameters");
  } else {
    theta0 = default_start(layout, data);
  }

  const bool profile = family == Family::PiecewiseExponential && !data.has_interval_rows();
  auto refine = [&](Eigen::VectorXd& th) {
    if (profile) profile_baseline(layout.cutpoints, th, data);
  };

  NewtonOutcome r = newton_maximize(layout, data, theta0, options, refine);

  FittedImputationModel out;
  out.spec = from_unconstrained(layout, r.theta);
  out.loglik = r.at.value;
  out.k = k;
  out.n = data.size();
  std::tie(out.aic, out.bic) = information_criteria(out.loglik, k, out.n);
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.score_norm = r.at.gradient.norm();
  out.theta = r.theta;
  out.parameter_names = parameter_names(layout);

  Eigen::LLT<Eigen::MatrixXd> llt(-r.at.hessian);
  if (llt.info() == Eigen::Success) {
    out.covariance = llt.solve(Eigen::MatrixXd::Identity(k, k));
  } else if (out.converged) {
    fail(ErrorKind::Singular, "fit: observed information is singular at the optimum");
  }
  return out;
}

std::pair<double, double> information_criteria(double loglik, std::size_t k, std::size_t n) {
  const double kk = static_cast<double>(k);
  return {2.0 * kk - 2.0 * loglik, kk * std::log(static_cast<double>(n)) - 2.0 * loglik};
}

std::pair<double, double> information_criteria(const FittedImputationModel& model) {
  return information_criteria(model.loglik, model.k, model.n);
}

ModelSelection select_model(std::span<const Family> candidates, const CensoredSample& data,
                            Criterion criterion, const FitOptions& options) {
  if (candidates.empty()) fail(ErrorKind::Config, "select_model: no candidate families");
  ModelSelection out;
  for (Family f : candidates) {
    try {
      FittedImputationModel m = fit(f, data, options);
      if (!m.converged) {
        std::ostringstream msg;
        msg << "did not converge (score norm " << m.score_norm << ")";
        out.failures.emplace_back(f, msg.str());
        continue;
      }
      out.ranked.push_back(std::move(m));
    } catch (const Error& e) {
      out.failures.emplace_back(f, e.what());
    }
  }
  if (out.ranked.empty()) {
    std::string msg = "select_model: no candidate converged:";
    for (const auto& [f, why] : out.failures)
      msg += " [" + std::string(to_string(f)) + ": " + why + "]";
    fail(ErrorKind::Convergence, msg);
  }
  auto key = [criterion](const FittedImputationModel& m) {
    return criterion == Criterion::AIC ? m.aic : m.bic;
  };
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [&](const FittedImputationModel& a, const FittedImputationModel& b) {
                     if (key(a) != key(b)) return key(a) < key(b);
                     if (a.k != b.k) return a.k < b.k;
                     return static_cast<int>(a.spec.family) < static_cast<int>(b.spec.family);
                   });
  return out;
}

}  // namespace parcmi
