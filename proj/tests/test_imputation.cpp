#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "parcmi/analysis.hpp"
#include "parcmi/error.hpp"
#include "parcmi/imputation.hpp"
#include "parcmi/simlab.hpp"

using namespace parcmi;

namespace {

Dataset heavy_dataset(std::size_t n, std::uint64_t index) {
  SimDesign d;
  d.n = n;
  return generate_replicate(d, index).data;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

void check_invariants(const Dataset& in, const ImputedDataset& out) {
  REQUIRE(out.data.size() == in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in.delta[i] == 1) {
      CHECK(same_bits(out.data.w[i], in.w[i]));
      CHECK_FALSE(out.imputed[i]);
    } else {
      CHECK(out.data.w[i] > in.w[i]);
      CHECK(out.imputed[i]);
    }
    CHECK(same_bits(out.original_w[i], in.w[i]));
    CHECK(same_bits(out.data.y[i], in.y[i]));
  }
}

}  // namespace

TEST_CASE("no censored rows is a no-op") {
  Dataset d;
  d.covariate_names = {"z"};
  std::mt19937_64 g(1);
  std::lognormal_distribution<double> ln(0.0, 0.5);
  for (int i = 0; i < 30; ++i) {
    const double z = i % 2;
    d.add_row(1.0 + i, ln(g), 1, std::span<const double>(&z, 1));
  }
  const auto out = impute_single(d, Family::LogNormal);
  CHECK(out.data.w == d.w);
  CHECK(std::none_of(out.imputed.begin(), out.imputed.end(), [](bool b) { return b; }));
}

TEST_CASE("impute under a given model") {
  Dataset d;
  d.add_row(0.0, 2.0, 0, {});
  d.add_row(0.0, 1.0, 1, {});
  auto model = std::make_shared<FittedImputationModel>();
  model->spec.family = Family::Exponential;
  model->spec.coefficients = {std::log(2.0)};  // rate 0.5
  const auto out = impute_with_model(d, model, default_options(Family::Exponential));
  CHECK(out.data.w[0] == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(out.data.w[1] == 1.0);
}

TEST_CASE("single imputation recovers the outcome slope") {
  const Dataset d = heavy_dataset(1000, 3);
  CHECK(d.censored_count() > 300);
  const auto out = impute_single(d, Family::LogNormal);
  check_invariants(d, out);
  REQUIRE(out.model);
  CHECK(out.model->converged);
  const OlsFit f = ols(out);
  CHECK(std::fabs(f.beta[1] - 0.5) < 4 * f.se()[1]);
  // Deterministic.
  CHECK(impute_single(d, Family::LogNormal).data.w == out.data.w);
}

TEST_CASE("multiple imputation") {
  const Dataset d = heavy_dataset(400, 9);
  ImputeOptions io;
  io.condmean = default_options(Family::LogNormal);

  MIConfig plain;
  plain.B = 1;
  plain.bootstrap = false;
  const auto one = impute_multiple(d, Family::LogNormal, io, plain);
  REQUIRE(one.size() == 1);
  CHECK(one[0].data.w == impute_single(d, Family::LogNormal, io).data.w);

  for (MIFlavor flavor : {MIFlavor::RowBootstrap, MIFlavor::ParametricDraw}) {
    CAPTURE(to_string(flavor));
    MIConfig cfg;
    cfg.B = 6;
    cfg.seed = 42;
    cfg.flavor = flavor;
    const auto a = impute_multiple(d, Family::LogNormal, io, cfg);
    REQUIRE(a.size() == 6);
    for (const auto& imp : a) check_invariants(d, imp);
    // Imputations differ from each other but repeat exactly under the seed.
    CHECK(a[0].data.w != a[1].data.w);
    const auto b = impute_multiple(d, Family::LogNormal, io, cfg);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].data.w == b[k].data.w);
    cfg.workers = 3;
    const auto c = impute_multiple(d, Family::LogNormal, io, cfg);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].data.w == c[k].data.w);
    cfg.seed = 43;
    CHECK(impute_multiple(d, Family::LogNormal, io, cfg)[0].data.w != a[0].data.w);
  }

  MIConfig rs;
  rs.B = 3;
  rs.seed = 5;
  rs.flavor = MIFlavor::ResampleAnalysis;
  for (const auto& imp : impute_multiple(d, Family::LogNormal, io, rs)) {
    REQUIRE(imp.source_rows.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      const std::size_t s = imp.source_rows[i];
      CHECK(same_bits(imp.original_w[i], d.w[s]));
      if (d.delta[s] == 0) CHECK(imp.data.w[i] > d.w[s]);
      else CHECK(same_bits(imp.data.w[i], d.w[s]));
    }
  }

  MIConfig bad;
  bad.B = 0;
  CHECK_THROWS_AS(impute_multiple(d, Family::LogNormal, io, bad), Error);
}

TEST_CASE("row permutation at B = 1") {
  const Dataset d = heavy_dataset(300, 4);
  std::vector<std::size_t> perm(d.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(8));
  const auto base = impute_single(d, Family::Weibull);
  const auto permuted = impute_single(d.subset(perm), Family::Weibull);
  for (std::size_t i = 0; i < perm.size(); ++i)
    CHECK(permuted.data.w[i] == doctest::Approx(base.data.w[perm[i]]).epsilon(1e-9));
}

TEST_CASE("failed bootstrap fits are redrawn, then reported") {
  // One exact value among 20 rows: about a third of resamples are all censored.
  Dataset d;
  for (int i = 0; i < 20; ++i) d.add_row(0.0, 1.0 + 0.1 * i, i == 0 ? 1 : 0, {});
  ImputeOptions io;
  io.condmean = default_options(Family::Exponential);
  MIConfig cfg;
  cfg.B = 20;
  cfg.seed = 1;
  const auto ok = impute_multiple(d, Family::Exponential, io, cfg);
  CHECK(ok.size() == 20);
  cfg.max_redraws = 0;
  try {
    impute_multiple(d, Family::Exponential, io, cfg);
    FAIL("expected a failed replicate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Degenerate);
    CHECK(std::string(e.what()).find("attempts") != std::string::npos);
  }
}

TEST_CASE("dataset validation") {
  Dataset d;
  d.covariate_names = {"a"};
  const double z = 1.0;
  d.add_row(1.0, 1.0, 1, std::span<const double>(&z, 1));
  CHECK_NOTHROW(d.validate());
  d.delta[0] = 3;
  CHECK_THROWS_AS(d.validate(), Error);
  d.delta[0] = 1;
  d.w[0] = NAN;
  CHECK_THROWS_AS(d.validate(), Error);
  CHECK_THROWS_AS(d.add_row(1.0, 1.0, 1, {}), Error);
  for (MIFlavor f : {MIFlavor::RowBootstrap, MIFlavor::ParametricDraw, MIFlavor::ResampleAnalysis})
    CHECK(mi_flavor_from_string(to_string(f)) == f);
}
