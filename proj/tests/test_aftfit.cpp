#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "parcmi/aftfit.hpp"
#include "parcmi/error.hpp"
#include "fixtures.hpp"

using namespace parcmi;

namespace {

using fixture::censored_share;
using fixture::make_spec;
using fixture::pwe_spec;
using fixture::simulate;
using fixture::truths;

}  // namespace

TEST_CASE("log-likelihood by hand") {
  CensoredSample one;
  one.add(1.0, 1, {});
  CHECK(log_likelihood(make_spec(Family::Exponential, {0.0}), one) == doctest::Approx(-1.0));
  CensoredSample cens;
  cens.add(2.0, 0, {});
  CHECK(log_likelihood(make_spec(Family::Exponential, {0.0}), cens) == doctest::Approx(-2.0));

  // Weibull alpha = 2, rate 1: log f = log 2 + log x - x^2, log S = -x^2.
  CensoredSample three;
  three.add(0.5, 1, {});
  three.add(1.2, 0, {});
  three.add(2.0, 1, {});
  const double expect = (std::log(2.0) + std::log(0.5) - 0.25) - 1.44 + (std::log(2.0) + std::log(2.0) - 4.0);
  CHECK(log_likelihood(make_spec(Family::Weibull, {0.0}, 2.0), three) ==
        doctest::Approx(expect).epsilon(1e-14));

  // Interval row contributes log{S(l) - S(u)}.
  CensoredSample iv;
  iv.add_interval(1.0, 3.0, {});
  CHECK(log_likelihood(make_spec(Family::Exponential, {0.0}), iv) ==
        doctest::Approx(std::log(std::exp(-1.0) - std::exp(-3.0))).epsilon(1e-14));

  // Far in the tail: survival is handled on the log scale, and when even the
  // interval mass vanishes the result is -inf rather than NaN.
  CensoredSample far;
  far.add(1e6, 0, {});
  const auto tight = make_spec(Family::LogNormal, {0.0}, 0.01);
  const double ll = log_likelihood(tight, far);
  CHECK(!std::isnan(ll));
  CHECK(ll < -9e5);
  CensoredSample empty_mass;
  empty_mass.add_interval(1e6, 2e6, {});
  const double li = log_likelihood(tight, empty_mass);
  CHECK(!std::isnan(li));
  CHECK(li < -9e5);
}

TEST_CASE("closed-form maximum likelihood") {
  CensoredSample e;
  for (double w : {1.0, 2.0, 3.0}) e.add(w, 1, {});
  const auto fe = fit(Family::Exponential, e);
  CHECK(fe.converged);
  CHECK(std::get<dist::Exponential>(resolve(fe.spec, {})).rate == doctest::Approx(0.5).epsilon(1e-10));

  std::mt19937_64 g(5);
  std::lognormal_distribution<double> ln(0.4, 0.9);
  CensoredSample s;
  std::vector<double> logs;
  double events = 0, exposure = 0;
  for (int i = 0; i < 300; ++i) {
    const double w = ln(g);
    s.add(w, 1, {});
    logs.push_back(std::log(w));
    ++events;
    exposure += w;
  }
  const double m = std::accumulate(logs.begin(), logs.end(), 0.0) / logs.size();
  double ss = 0;
  for (double v : logs) ss += (v - m) * (v - m);
  const auto f = fit(Family::LogNormal, s);
  CHECK(f.converged);
  CHECK(std::fabs(f.spec.coefficients[0] - m) <= 1e-8);
  CHECK(std::fabs(*f.spec.shape - std::sqrt(ss / logs.size())) <= 1e-8);

  const auto fx = fit(Family::Exponential, s);
  CHECK(std::get<dist::Exponential>(resolve(fx.spec, {})).rate ==
        doctest::Approx(events / exposure).epsilon(1e-10));
}

TEST_CASE("information criteria") {
  auto [aic, bic] = information_criteria(-100.0, 2, 50);
  CHECK(aic == doctest::Approx(204.0));
  CHECK(bic == doctest::Approx(200.0 + 2.0 * std::log(50.0)));
  CHECK(bic == doctest::Approx(207.824).epsilon(1e-5));
  auto [a0, b0] = information_criteria(-12.5, 0, 9);
  CHECK(a0 == 25.0);
  CHECK(b0 == 25.0);
}

TEST_CASE("analytic score and hessian match finite differences") {
  std::mt19937_64 g(99);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  for (const auto& truth : truths()) {
    const CensoredSample data = simulate(truth, 150, 0.3, 7, positive_support(truth.family));
    for (int rep = 0; rep < 3; ++rep) {
      Eigen::VectorXd th = to_unconstrained(truth);
      for (auto& v : th) v += jitter(g);
      const auto d = log_likelihood_derivatives(from_unconstrained(truth, th), data);
      CHECK(d.value == doctest::Approx(log_likelihood(from_unconstrained(truth, th), data)).epsilon(1e-12));
      for (Eigen::Index j = 0; j < th.size(); ++j) {
        const double h = 1e-5;
        Eigen::VectorXd up = th, dn = th;
        up[j] += h;
        dn[j] -= h;
        const auto du = log_likelihood_derivatives(from_unconstrained(truth, up), data);
        const auto dd = log_likelihood_derivatives(from_unconstrained(truth, dn), data);
        const double fd = (du.value - dd.value) / (2 * h);
        CHECK_MESSAGE(std::fabs(fd - d.gradient[j]) <= 1e-5 * std::max(1.0, std::fabs(fd)),
                      to_string(truth.family) << " j=" << j);
        for (Eigen::Index k = 0; k < th.size(); ++k) {
          const double fh = (du.gradient[k] - dd.gradient[k]) / (2 * h);
          CHECK(std::fabs(fh - d.hessian(j, k)) <= 1e-4 * std::max(1.0, std::fabs(fh)));
        }
      }
    }
  }
}

TEST_CASE("reparameterization round trip") {
  for (const auto& truth : truths()) {
    const FamilySpec back = from_unconstrained(truth, to_unconstrained(truth));
    CHECK(back.coefficients.size() == truth.coefficients.size());
    for (std::size_t j = 0; j < truth.coefficients.size(); ++j)
      CHECK(back.coefficients[j] == doctest::Approx(truth.coefficients[j]).epsilon(1e-14));
    if (truth.shape) CHECK(*back.shape == doctest::Approx(*truth.shape).epsilon(1e-14));
    CHECK(back.baseline_log_rates.size() == truth.baseline_log_rates.size());
  }
}

TEST_CASE("fits converge and are invariant to row order and duplication") {
  for (const auto& truth : truths()) {
    CAPTURE(to_string(truth.family));
    const CensoredSample data = simulate(truth, 400, 0.3, 21);
    FitOptions opt;
    if (truth.family == Family::PiecewiseExponential) opt.pwe_cutpoints = truth.cutpoints;
    const auto f = fit(truth.family, data, opt);
    REQUIRE(f.converged);
    CHECK(f.score_norm < opt.tol);
    CHECK(f.aic == doctest::Approx(2.0 * f.k - 2.0 * f.loglik));
    CHECK(f.bic == doctest::Approx(f.k * std::log(double(f.n)) - 2.0 * f.loglik));
    const Eigen::VectorXd se = f.standard_errors();
    for (auto v : se) CHECK(v > 0.0);
    CHECK(f.parameter_names.size() == f.k);

    // Not worse than the start.
    FitOptions o2 = opt;
    o2.init = truth;
    CHECK(fit(truth.family, data, o2).loglik >= log_likelihood(truth, data) - 1e-9);

    std::vector<std::size_t> perm(data.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
    const auto fp = fit(truth.family, data.subset(perm), opt);
    for (Eigen::Index j = 0; j < f.theta.size(); ++j)
      CHECK(fp.theta[j] == doctest::Approx(f.theta[j]).epsilon(1e-7));

    std::vector<std::size_t> twice(perm.begin(), perm.end());
    twice.insert(twice.end(), perm.begin(), perm.end());
    const auto fd = fit(truth.family, data.subset(twice), opt);
    CHECK(fd.loglik == doctest::Approx(2.0 * f.loglik).epsilon(1e-9));
    for (Eigen::Index j = 0; j < f.theta.size(); ++j)
      CHECK(fd.theta[j] == doctest::Approx(f.theta[j]).epsilon(1e-7));
  }
}

TEST_CASE("interval rows are fitted") {
  const auto truth = make_spec(Family::Weibull, {0.2, -0.4}, 1.8);
  const CensoredSample data = simulate(truth, 1500, 0.2, 33, true);
  CHECK(data.has_interval_rows());
  const auto f = fit(Family::Weibull, data);
  REQUIRE(f.converged);
  const Eigen::VectorXd se = f.standard_errors();
  const Eigen::VectorXd t0 = to_unconstrained(truth);
  for (Eigen::Index j = 0; j < t0.size(); ++j) CHECK(std::fabs(f.theta[j] - t0[j]) < 4 * se[j]);
}

TEST_CASE("weibull recovery at n = 5000 with 20% censoring") {
  const auto truth = make_spec(Family::Weibull, {0.0}, 2.0);  // alpha 2, lambda 1
  const CensoredSample data = simulate(truth, 5000, 0.2, 2024);
  CHECK(censored_share(data) == doctest::Approx(0.2).epsilon(0.35));
  const auto f = fit(Family::Weibull, data);
  REQUIRE(f.converged);
  const Eigen::VectorXd se = f.standard_errors();
  const Eigen::VectorXd t0 = to_unconstrained(truth);
  for (Eigen::Index j = 0; j < t0.size(); ++j) CHECK(std::fabs(f.theta[j] - t0[j]) < 3 * se[j]);
}

TEST_CASE("degenerate input") {
  CensoredSample all_cens;
  for (double w : {1.0, 2.0, 3.0}) all_cens.add(w, 0, {});
  try {
    fit(Family::Weibull, all_cens);
    FAIL("all-censored sample accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Degenerate);
  }
  CensoredSample tiny;
  tiny.add(1.0, 1, {});
  CHECK_THROWS_AS(fit(Family::Weibull, tiny), Error);
  CensoredSample neg;
  neg.add(-1.0, 1, {});
  neg.add(2.0, 1, {});
  neg.add(3.0, 1, {});
  CHECK_THROWS_AS(fit(Family::LogNormal, neg), Error);
  CHECK_NOTHROW(fit(Family::Gaussian, neg));
  CHECK_THROWS_AS(all_cens.add(1.0, 2, {}), Error);
  CHECK_THROWS_AS(all_cens.add(1.0, 1, std::vector<double>{1.0}), Error);
}

TEST_CASE("model selection") {
  const auto truth = make_spec(Family::LogNormal, {0.5, 0.3}, 0.7);
  const CensoredSample data = simulate(truth, 500, 0.3, 8);
  const Family single[] = {Family::Weibull};
  const auto one = select_model(single, data, Criterion::AIC);
  REQUIRE(one.ranked.size() == 1);
  CHECK(one.ranked[0].spec.family == Family::Weibull);

  const Family five[] = {Family::Exponential, Family::Weibull, Family::LogNormal,
                         Family::LogLogistic, Family::PiecewiseExponential};
  for (Criterion c : {Criterion::AIC, Criterion::BIC}) {
    const auto sel = select_model(five, data, c);
    REQUIRE(sel.ranked.size() + sel.failures.size() == 5);
    for (std::size_t i = 1; i < sel.ranked.size(); ++i) {
      const auto& a = sel.ranked[i - 1];
      const auto& b = sel.ranked[i];
      CHECK((c == Criterion::AIC ? a.aic <= b.aic : a.bic <= b.bic));
    }
    CHECK(sel.ranked.front().spec.family == Family::LogNormal);
  }

  // BIC penalizes the redundant Weibull shape at least as hard as AIC.
  const Family pair[] = {Family::Exponential, Family::Weibull};
  int by_aic = 0, by_bic = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const CensoredSample d = simulate(make_spec(Family::Exponential, {0.2}), 200, 0.3, 1000 + r);
    by_aic += select_model(pair, d, Criterion::AIC).ranked.front().spec.family == Family::Exponential;
    by_bic += select_model(pair, d, Criterion::BIC).ranked.front().spec.family == Family::Exponential;
  }
  CHECK(by_bic > by_aic);

  CHECK_THROWS_AS(select_model(std::span<const Family>{}, data, Criterion::AIC), Error);
}
