#pragma once

// Simulated censored samples shared by the fitting tests and the acceptance run.

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "parcmi/aftfit.hpp"
#include "parcmi/rng.hpp"

namespace fixture {

using namespace parcmi;

inline FamilySpec make_spec(Family f, std::vector<double> coef, std::optional<double> shape = {}) {
  FamilySpec s;
  s.family = f;
  s.coefficients = std::move(coef);
  s.shape = shape;
  return s;
}

inline FamilySpec pwe_spec(std::vector<double> cut, std::vector<double> base, std::vector<double> slopes) {
  FamilySpec s;
  s.family = Family::PiecewiseExponential;
  s.cutpoints = std::move(cut);
  s.baseline_log_rates = std::move(base);
  s.coefficients = {0.0};
  s.coefficients.insert(s.coefficients.end(), slopes.begin(), slopes.end());
  return s;
}

/// X ~ truth given Z ~ N(0,1)^q with independent censoring C = F_i^{-1}(V),
/// V ~ Uniform(1 - 2 censor_rate, 1), so P(X > C) = censor_rate for every
/// subject (censor_rate <= 0.5).
inline CensoredSample simulate(const FamilySpec& truth, std::size_t n, double censor_rate,
                               std::uint64_t seed, bool with_intervals = false) {
  const std::size_t q = truth.covariate_count();
  Rng rng = derive_stream(seed, 0);
  std::normal_distribution<double> nz(0.0, 1.0);
  CensoredSample s(q);
  std::vector<double> z(q);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : z) v = nz(rng);
    const auto p = resolve(truth, z);
    const double x = sample(p, rng);
    const double c =
        censor_rate > 0 ? quantile(p, 1.0 - 2.0 * censor_rate * uniform01(rng)) : INFINITY;
    if (with_intervals && i % 7 == 3) {
      const double lo = std::max(0.0, x - 0.3 * uniform01(rng) * x);
      s.add_interval(lo, x + 0.5 * uniform01(rng) * x + 1e-3, z);
    } else if (x <= c) {
      s.add(x, 1, z);
    } else {
      s.add(c, 0, z);
    }
  }
  return s;
}

inline double censored_share(const CensoredSample& s) {
  return 1.0 - static_cast<double>(s.event_count()) / static_cast<double>(s.size());
}

inline std::vector<FamilySpec> truths() {
  return {make_spec(Family::Exponential, {0.3, 0.5}),
          make_spec(Family::Weibull, {0.2, -0.4}, 1.8),
          make_spec(Family::LogNormal, {0.5, 0.3}, 0.7),
          make_spec(Family::LogLogistic, {0.1, 0.25}, 3.0),
          pwe_spec({0.0, 0.5, 1.5}, {-0.3, 0.2, -0.6}, {0.4}),
          make_spec(Family::Gaussian, {2.0, 1.0}, 1.5),
          make_spec(Family::Logistic, {-1.0, 0.5}, 0.8)};
}

}  // namespace fixture
