#include "doctest.h"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "parcmi/analysis.hpp"
#include "parcmi/error.hpp"

using namespace parcmi;

namespace {

OlsFit one_coef(double beta, double var) {
  OlsFit f;
  f.names = {"b"};
  f.beta = Eigen::VectorXd::Constant(1, beta);
  f.cov = Eigen::MatrixXd::Constant(1, 1, var);
  f.n = 50;
  f.p = 1;
  return f;
}

}  // namespace

TEST_CASE("exact line") {
  Eigen::MatrixXd X(5, 2);
  Eigen::VectorXd y(5);
  for (int i = 0; i < 5; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = i * 0.7 - 1.0;
    y[i] = 2.0 + 3.0 * X(i, 1);
  }
  const OlsFit f = ols(X, y, {"(Intercept)", "x"});
  CHECK(f.beta[0] == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(f.beta[1] == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(f.sigma2 == doctest::Approx(0.0).epsilon(1e-20));
  CHECK(std::fabs(f.sigma2) < 1e-25);
}

TEST_CASE("intercept only and a hand-solved three-point problem") {
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(4, 1);
  Eigen::VectorXd y(4);
  y << 1.0, 4.0, 2.0, 9.0;
  CHECK(ols(ones, y, {"(Intercept)"}).beta[0] == doctest::Approx(4.0).epsilon(1e-15));

  // Points (0,1), (1,2), (2,4): slope 1.5, intercept 5/6, RSS 1/6.
  Eigen::MatrixXd X(3, 2);
  X << 1, 0, 1, 1, 1, 2;
  Eigen::VectorXd v(3);
  v << 1, 2, 4;
  const OlsFit f = ols(X, v, {"(Intercept)", "x"});
  CHECK(std::fabs(f.beta[0] - 5.0 / 6.0) <= 1e-12);
  CHECK(std::fabs(f.beta[1] - 1.5) <= 1e-12);
  CHECK(std::fabs(f.sigma2 - 1.0 / 6.0) <= 1e-12);
  // (X^T X)^{-1} = [[5/6, -1/2], [-1/2, 1/2]].
  CHECK(std::fabs(f.cov(0, 0) - 5.0 / 36.0) <= 1e-12);
  CHECK(std::fabs(f.cov(1, 1) - 1.0 / 12.0) <= 1e-12);
  CHECK(std::fabs(f.cov(0, 1) + 1.0 / 12.0) <= 1e-12);
}

TEST_CASE("residuals are orthogonal to the design; covariance is symmetric PSD") {
  std::mt19937_64 g(12);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd X(200, 4);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) {
    X(i, 0) = 1.0;
    for (int j = 1; j < 4; ++j) X(i, j) = n01(g) * j;
    y[i] = 0.3 + X(i, 1) - 2 * X(i, 3) + n01(g);
  }
  const OlsFit f = ols(X, y, {"a", "b", "c", "d"});
  const Eigen::VectorXd r = y - X * f.beta;
  CHECK((X.transpose() * r).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((f.cov - f.cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.cov);
  CHECK(es.eigenvalues().minCoeff() >= 0.0);
  CHECK(f.df() == 196.0);
}

TEST_CASE("rank deficiency names the columns") {
  Eigen::MatrixXd X(6, 3);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = i;
    X(i, 2) = 2.0 * i;
    y[i] = i * i;
  }
  try {
    ols(X, y, {"(Intercept)", "age", "age_twice"});
    FAIL("collinear design accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Singular);
    const std::string msg = e.what();
    CHECK(msg.find("age_twice") != std::string::npos);
    CHECK(msg.find("'age'") != std::string::npos);
  }
  Eigen::MatrixXd small = Eigen::MatrixXd::Ones(2, 2);
  small(1, 1) = 3;
  CHECK_THROWS_AS(ols(small, Eigen::VectorXd::Ones(2), {"a", "b"}), Error);
}

TEST_CASE("Rubin's rules") {
  const std::vector<OlsFit> two{one_coef(1.0, 1.0), one_coef(3.0, 1.0)};
  const PooledFit p = pool(two);
  CHECK(p.beta_bar[0] == 2.0);
  CHECK(p.within[0] == 1.0);
  CHECK(p.between[0] == 2.0);
  CHECK(p.total_var[0] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(p.se[0] == doctest::Approx(2.0).epsilon(1e-15));
  // df = (B-1)(1 + W / ((1 + 1/B) Bv))^2 = (1 + 1/3)^2.
  CHECK(p.df[0] == doctest::Approx(16.0 / 9.0).epsilon(1e-14));
  const double tq = boost::math::quantile(boost::math::students_t_distribution<>(16.0 / 9.0), 0.975);
  CHECK(p.ci_upper[0] == doctest::Approx(2.0 + tq * 2.0).epsilon(1e-10));

  const std::vector<OlsFit> single{one_coef(1.5, 0.25)};
  const PooledFit s = pool(single);
  CHECK(s.se[0] == 0.5);
  CHECK(s.df[0] == 49.0);
  const double t49 = boost::math::quantile(boost::math::students_t_distribution<>(49.0), 0.975);
  CHECK(s.ci_lower[0] == doctest::Approx(1.5 - t49 * 0.5).epsilon(1e-12));

  const std::vector<OlsFit> same(5, one_coef(0.7, 0.09));
  const PooledFit z = pool(same);
  CHECK(z.between[0] == 0.0);
  CHECK(z.total_var[0] == z.within[0]);
  CHECK(std::isinf(z.df[0]));

  std::mt19937_64 g(3);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<OlsFit> many;
  for (int b = 0; b < 10; ++b) many.push_back(one_coef(nd(g), 0.1 + std::fabs(nd(g))));
  const PooledFit m = pool(many);
  CHECK(m.total_var[0] == doctest::Approx(m.within[0] + 1.1 * m.between[0]).epsilon(1e-14));
  CHECK(m.se[0] >= std::sqrt(m.within[0]));
  std::vector<OlsFit> rev(many.rbegin(), many.rend());
  CHECK(pool(rev).beta_bar[0] == doctest::Approx(m.beta_bar[0]).epsilon(1e-15));

  OlsFit wide = one_coef(1.0, 1.0);
  wide.names = {"other"};
  const std::vector<OlsFit> mixed{one_coef(1.0, 1.0), wide};
  CHECK_THROWS_AS(pool(mixed), Error);
  CHECK_THROWS_AS(pool(std::span<const OlsFit>{}), Error);
}

TEST_CASE("dataset design columns") {
  Dataset d;
  d.covariate_names = {"z"};
  for (int i = 0; i < 10; ++i) {
    const double z = i % 3;
    d.add_row(1.0 + 0.5 * i + 0.25 * z, i, 1, std::span<const double>(&z, 1));
  }
  const OlsFit f = ols(d);
  CHECK(f.names == std::vector<std::string>{"(Intercept)", "w", "z"});
  CHECK(f.beta[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.beta[2] == doctest::Approx(0.25).epsilon(1e-12));
}
