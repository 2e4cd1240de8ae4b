#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "parcmi/analysis.hpp"
#include "parcmi/imputation.hpp"
#include "parcmi/simlab.hpp"

namespace parcmi {

// ---- CSV --------------------------------------------------------------------

/// Header plus raw cell text. Cells are kept verbatim so untouched values
/// round-trip exactly.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  /// Index of a header column; throws Error{Config} naming the column.
  std::size_t column(std::string_view name) const;
};

/// Comma-separated, header required, no quoting. Blank lines are skipped.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const CsvTable& table);

/// Shortest text that parses back to the same double; infinities as "inf".
std::string format_double(double v);
/// Strict parse of a whole cell ("inf", "-inf" accepted).
double parse_double(std::string_view cell);

struct ColumnMapping {
  std::string outcome;  // may be empty when only fitting
  std::string observed;
  std::string event;
  std::vector<std::string> covariates;
};

/// Builds a Dataset from the mapped columns; unparseable cells or event
/// values outside {0,1} throw Error{Data} with the line number.
Dataset dataset_from_table(const CsvTable& table, const ColumnMapping& mapping);

/// Dataset as a table with columns outcome, observed, event, covariates.
CsvTable dataset_to_table(const Dataset& data);

/// Stacks imputations of `source` (whose mapped columns produced them):
/// every original column, with the observed column replaced on imputed rows,
/// plus `imputed` (0/1) and `imputation_id` (1-based). Untouched cells are
/// copied verbatim. Imputations that are row resamples are written from their
/// own Dataset instead.
CsvTable imputed_to_table(const CsvTable& source, const ColumnMapping& mapping,
                          std::span<const ImputedDataset> imputations);

// ---- JSON -------------------------------------------------------------------

nlohmann::json to_json(const FamilySpec& spec);
FamilySpec family_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FittedImputationModel& model);
nlohmann::json to_json(const OlsFit& fit, double confidence = 0.95);
nlohmann::json to_json(const PooledFit& fit);
nlohmann::json to_json(const MethodSummary& s);
nlohmann::json to_json(const SimResult& result);
nlohmann::json to_json(const SelectionResult& result);
nlohmann::json to_json(const SimDesign& design);
/// Missing keys keep `base`'s values; unknown keys throw Error{Config}.
SimDesign sim_design_from_json(const nlohmann::json& j, SimDesign base = {});

}  // namespace parcmi
