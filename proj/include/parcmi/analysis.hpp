#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "parcmi/imputation.hpp"

namespace parcmi {

struct OlsFit {
  std::vector<std::string> names;
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;  // sigma2 (X^T X)^{-1}
  double sigma2 = 0.0;  // RSS / (n - p)
  std::size_t n = 0;
  std::size_t p = 0;

  Eigen::VectorXd se() const { return cov.diagonal().cwiseSqrt(); }
  double df() const { return static_cast<double>(n - p); }
};

/// Least squares via column-pivoted QR. Throws Degenerate when n <= p and
/// Singular (naming the collinear columns) when X is rank deficient.
OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names);

/// y ~ 1 + w + z over the dataset's columns.
OlsFit ols(const Dataset& data);
OlsFit ols(const ImputedDataset& data);

struct PooledFit {
  std::vector<std::string> names;
  Eigen::VectorXd beta_bar;
  Eigen::VectorXd within;
  Eigen::VectorXd between;
  Eigen::VectorXd total_var;
  Eigen::VectorXd se;
  Eigen::VectorXd df;  // +inf when between = 0
  Eigen::VectorXd ci_lower;
  Eigen::VectorXd ci_upper;
  std::size_t B = 0;
  double confidence = 0.95;
};

/// Rubin's rules. B = 1 returns the single fit with t(n - p) intervals.
/// For B > 1 the interval uses t with (B-1)(1 + W / ((1 + 1/B) Bv))^2 df.
PooledFit pool(std::span<const OlsFit> fits, double confidence = 0.95);

}  // namespace parcmi
