#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "parcmi/aftfit.hpp"
#include "parcmi/condmean.hpp"

namespace parcmi {

/// Analysis data: outcome y, observed covariate w = min(X, C), event
/// indicator delta (1 = X observed), fully observed covariates z.
struct Dataset {
  std::vector<double> y;
  std::vector<double> w;
  std::vector<int> delta;
  std::vector<double> z;  // row-major n x q
  std::string outcome_name = "y";
  std::string observed_name = "w";
  std::string event_name = "delta";
  std::vector<std::string> covariate_names;

  std::size_t size() const { return y.size(); }
  std::size_t covariate_count() const { return covariate_names.size(); }
  std::span<const double> covariates(std::size_t i) const {
    return {z.data() + i * covariate_count(), covariate_count()};
  }
  void add_row(double yi, double wi, int di, std::span<const double> zi);
  std::size_t censored_count() const;

  /// Throws Error{Data} on inconsistent lengths, non-finite values or delta
  /// outside {0, 1}.
  void validate() const;
  /// (w, delta, z) rows for fitting the imputation model.
  CensoredSample censored_sample() const;
  Dataset subset(std::span<const std::size_t> rows) const;
};

struct ImputedDataset {
  Dataset data;                    // w replaced by conditional means where delta = 0
  std::vector<double> original_w;  // as observed
  std::vector<bool> imputed;       // per-row provenance
  Family family = Family::LogNormal;
  Strategy strategy = Strategy::Analytic;
  std::shared_ptr<const FittedImputationModel> model;
  /// Row i is row source_rows[i] of the input; empty means the identity
  /// (only resample-analysis imputations set it).
  std::vector<std::size_t> source_rows;
};

struct ImputeOptions {
  FitOptions fit{};
  CondMeanOptions condmean{};  // strategy is taken from here
};

/// Fits the imputation model on data and replaces each censored w by
/// E(X | X > w, z) under the fit.
ImputedDataset impute_single(const Dataset& data, Family family, const ImputeOptions& options = {});

/// Imputes data's censored rows under an already fitted model.
ImputedDataset impute_with_model(const Dataset& data,
                                 std::shared_ptr<const FittedImputationModel> model,
                                 const CondMeanOptions& condmean);

enum class MIFlavor {
  RowBootstrap,    // refit on a with-replacement resample of the rows
  ParametricDraw,  // theta ~ N(theta_hat, observed-information covariance)
  /// Refit on a row resample and impute that resample's own censored rows;
  /// imputation b is then a bootstrap sample rather than the original rows.
  ResampleAnalysis,
};

/// "bootstrap", "parametric", "resample".
std::string_view to_string(MIFlavor f) noexcept;
MIFlavor mi_flavor_from_string(std::string_view name);

struct MIConfig {
  std::size_t B = 1;
  std::uint64_t seed = 0;
  bool bootstrap = true;  // false: every imputation uses the full-data fit
  MIFlavor flavor = MIFlavor::RowBootstrap;
  std::size_t workers = 1;
  int max_redraws = 10;

  void validate() const;
};

/// B imputations of the original rows. Replicate b uses the stream
/// derive_stream(seed, b); failed bootstrap fits are redrawn up to
/// max_redraws times. Output is ordered by b.
std::vector<ImputedDataset> impute_multiple(const Dataset& data, Family family,
                                            const ImputeOptions& options, const MIConfig& cfg);

}  // namespace parcmi
