#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parcmi/analysis.hpp"
#include "parcmi/imputation.hpp"

namespace parcmi {

/// Covariate-generation model used when no other is given:
/// X | Z ~ lognormal(0.05 Z, 0.5).
FamilySpec default_x_model();

struct SimDesign {
  std::size_t n = 1000;
  double censor_rate = 0.7;  // C ~ Exponential(censor_rate)
  std::size_t B = 1;
  std::size_t replicates = 1000;
  FamilySpec x_model = default_x_model();  // true X | Z, one covariate Z ~ Bernoulli(0.5)
  Family family_fit = Family::LogNormal;
  Strategy strategy = Strategy::Analytic;
  std::uint64_t seed = 20240101;
  std::size_t workers = 1;  // 0 = all cores
  MIFlavor flavor = MIFlavor::RowBootstrap;
  double confidence = 0.95;
  std::vector<double> outcome_beta{1.0, 0.5, 0.25};  // Y = b0 + b1 X + b2 Z + N(0, 1)
  FitOptions fit{};

  Family family_true() const { return x_model.family; }
  double true_beta1() const { return outcome_beta.at(1); }
  /// Throws Error{Config}.
  void validate() const;
};

struct Replicate {
  Dataset data;           // (y, w, delta, z) with z = Z
  std::vector<double> x;  // true covariate values
};

/// Replicate `index` drawn from derive_stream(seed, index): per row Z, X,
/// outcome noise and C are drawn in that order.
Replicate generate_replicate(const SimDesign& design, std::size_t index);

struct ReplicateRecord {
  std::size_t index = 0;
  double censoring_fraction = 0.0;
  double full_beta1 = 0.0;
  double full_se1 = 0.0;
  double beta1 = 0.0;
  double se1 = 0.0;
  bool covered = false;
  double elapsed_seconds = 0.0;  // imputation + analysis only
  std::string error;             // non-empty: excluded from summaries
  bool ok() const { return error.empty(); }
};

/// Bias, ESE, ASE, CP and runtime over a set of (beta1, se1, covered) rows.
struct MethodSummary {
  std::size_t used = 0;
  double bias = 0.0;
  double pct_bias = 0.0;
  std::optional<double> ese;  // absent with fewer than two replicates
  double ase = 0.0;
  double cp = 0.0;
  std::optional<double> re;  // var(full) / var(method)
  double runtime_mean = 0.0;
  double runtime_median = 0.0;
};

struct SimResult {
  SimDesign design;
  std::vector<ReplicateRecord> records;  // ordered by index
  std::size_t excluded = 0;
  double censoring_fraction = 0.0;  // mean over used replicates
  MethodSummary full;               // full-cohort analysis on the true X
  MethodSummary method;             // the imputation pipeline
};

/// Runs every replicate (concurrently up to design.workers) and summarizes.
SimResult run_cell(const SimDesign& design);

struct SelectionResult {
  std::vector<Family> candidates;
  std::vector<double> aic_first;  // fraction of used replicates ranked first
  std::vector<double> bic_first;
  std::size_t used = 0;
  std::size_t excluded = 0;
  std::vector<std::string> errors;  // one per excluded replicate
};

SelectionResult run_selection_study(const SimDesign& design, std::span<const Family> candidates);

/// Summary-table row and long-format helpers.
std::string summary_csv_header();
std::string summary_csv_row(const std::string& label, const SimResult& result);
std::string replicates_csv(const SimResult& result);

}  // namespace parcmi
