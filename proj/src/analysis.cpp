#include "parcmi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parcmi/error.hpp"
#include "parcmi/specfun.hpp"

namespace parcmi {

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  if (static_cast<std::size_t>(y.size()) != n || names.size() != p)
    fail(ErrorKind::Dimension, "ols: design, outcome and names disagree in size");
  if (n <= p)
    fail(ErrorKind::Degenerate, "ols: need more rows than coefficients (n = " + std::to_string(n) +
                                    ", p = " + std::to_string(p) + ")");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (static_cast<std::size_t>(qr.rank()) < p) {
    // Each dropped column is reported with the kept columns that reproduce it.
    const auto& perm = qr.colsPermutation().indices();
    const Eigen::Index r = qr.rank();
    Eigen::MatrixXd kept(X.rows(), r);
    for (Eigen::Index k = 0; k < r; ++k) kept.col(k) = X.col(perm[k]);
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> kqr(kept);
    std::string msg;
    for (Eigen::Index k = r; k < static_cast<Eigen::Index>(p); ++k) {
      const Eigen::VectorXd c = kqr.solve(X.col(perm[k]));
      const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
      std::string with;
      for (Eigen::Index j = 0; j < r; ++j)
        if (std::fabs(c[j]) > 1e-8 * scale)
          with += (with.empty() ? "'" : ", '") + names[static_cast<std::size_t>(perm[j])] + "'";
      msg += (msg.empty() ? "" : "; ") + ("'" + names[static_cast<std::size_t>(perm[k])] + "'") +
             (with.empty() ? " is identically zero" : " is collinear with " + with);
    }
    fail(ErrorKind::Singular, "ols: design matrix is rank deficient: " + msg);
  }

  OlsFit out;
  out.names = std::move(names);
  out.n = n;
  out.p = p;
  out.beta = qr.solve(y);
  const Eigen::VectorXd resid = y - X * out.beta;
  out.sigma2 = resid.squaredNorm() / static_cast<double>(n - p);

  // (X^T X)^{-1} = P R^{-1} R^{-T} P^T.
  const Eigen::MatrixXd R =
      qr.matrixQR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(
      Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)));
  const Eigen::MatrixXd inner = Rinv * Rinv.transpose();
  const auto P = qr.colsPermutation();
  Eigen::MatrixXd xtx_inv = P * inner * P.transpose();
  out.cov = out.sigma2 * 0.5 * (xtx_inv + xtx_inv.transpose());
  return out;
}

OlsFit ols(const Dataset& data) {
  data.validate();
  const std::size_t n = data.size();
  const std::size_t q = data.covariate_count();
  Eigen::MatrixXd X(n, q + 2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = data.w[i];
    const auto z = data.covariates(i);
    for (std::size_t j = 0; j < q; ++j) X(i, j + 2) = z[j];
    y[i] = data.y[i];
  }
  std::vector<std::string> names{"(Intercept)", data.observed_name};
  names.insert(names.end(), data.covariate_names.begin(), data.covariate_names.end());
  return ols(X, y, std::move(names));
}

OlsFit ols(const ImputedDataset& data) { return ols(data.data); }

PooledFit pool(std::span<const OlsFit> fits, double confidence) {
  if (fits.empty()) fail(ErrorKind::Config, "pool: need at least one fit");
  if (!(confidence > 0.0 && confidence < 1.0))
    fail(ErrorKind::Config, "pool: confidence must be in (0, 1)");
  const OlsFit& first = fits.front();
  for (const OlsFit& f : fits)
    if (f.names != first.names || f.beta.size() != first.beta.size())
      fail(ErrorKind::Dimension, "pool: fits have different coefficient layouts");

  const auto p = first.beta.size();
  const double B = static_cast<double>(fits.size());
  PooledFit out;
  out.names = first.names;
  out.B = fits.size();
  out.confidence = confidence;
  out.beta_bar = Eigen::VectorXd::Zero(p);
  out.within = Eigen::VectorXd::Zero(p);
  out.between = Eigen::VectorXd::Zero(p);
  for (const OlsFit& f : fits) {
    out.beta_bar += f.beta;
    out.within += f.cov.diagonal();
  }
  out.beta_bar /= B;
  out.within /= B;
  if (fits.size() > 1) {
    for (const OlsFit& f : fits) out.between += (f.beta - out.beta_bar).cwiseAbs2();
    out.between /= B - 1.0;
  }
  out.total_var = out.within + (1.0 + 1.0 / B) * out.between;
  out.se = out.total_var.cwiseSqrt();

  out.df.resize(p);
  out.ci_lower.resize(p);
  out.ci_upper.resize(p);
  const double upper_p = 0.5 + 0.5 * confidence;
  for (Eigen::Index j = 0; j < p; ++j) {
    double df;
    if (fits.size() == 1) {
      df = first.df();
    } else if (out.between[j] > 0.0) {
      const double r = out.within[j] / ((1.0 + 1.0 / B) * out.between[j]);
      df = (B - 1.0) * (1.0 + r) * (1.0 + r);
    } else {
      df = std::numeric_limits<double>::infinity();
    }
    out.df[j] = df;
    const double tq = specfun::student_t_quantile(upper_p, df);
    out.ci_lower[j] = out.beta_bar[j] - tq * out.se[j];
    out.ci_upper[j] = out.beta_bar[j] + tq * out.se[j];
  }
  return out;
}

}  // namespace parcmi
