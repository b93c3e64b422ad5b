#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace riaft {

enum class ColumnType { Continuous, Categorical };

// Load/validation failure carrying the offending location. Rows are 1-based
// data rows (header excluded); column is empty when not applicable.
class DataError : public std::runtime_error {
 public:
  DataError(std::string msg, long row = -1, std::string column = {})
      : std::runtime_error(std::move(msg)), row(row), column(std::move(column)) {}
  long row;
  std::string column;
};

// n x L missingness indicator, column-major to match covariate storage.
struct MissingMask {
  std::vector<std::vector<std::uint8_t>> cols;

  bool at(std::size_t row, std::size_t col) const { return cols[col][row] != 0; }
  void set(std::size_t row, std::size_t col, bool v) { cols[col][row] = v ? 1 : 0; }
  bool any() const;
  bool row_incomplete(std::size_t row) const;
};

// Clustered right-censored survival sample. Immutable after load by
// convention; samplers share it read-only.
struct SurvivalDataset {
  std::vector<double> y;        // observed times, all > 0
  std::vector<int> delta;       // 1 = event observed, 0 = censored
  std::vector<int> cluster;     // ids in 1..n_clusters
  std::vector<int> treatment;   // labels in 1..n_arms; empty if absent
  int n_clusters = 0;
  int n_arms = 0;               // 0 when no treatment column

  std::vector<std::string> column_names;               // covariates
  std::vector<ColumnType> column_types;
  std::vector<std::vector<std::string>> levels;        // per categorical column
  std::vector<std::vector<double>> X;                  // column-major; codes for categoricals
  MissingMask mask;

  std::size_t n() const { return y.size(); }
  std::size_t n_covariates() const { return column_names.size(); }
  bool has_treatment() const { return !treatment.empty(); }
  std::vector<std::size_t> cluster_sizes() const;

  // Checks the structural invariants (positive times, 0/1 indicators,
  // contiguous non-empty clusters/arms, consistent shapes). `allow_empty_clusters`
  // relaxes the non-empty requirement for bootstrap resamples.
  void check_invariants(bool allow_empty_clusters = false) const;
};

struct DatasetSchema {
  std::string y_col = "y";
  std::string delta_col = "delta";
  std::string cluster_col = "cluster";
  std::string treatment_col = "a";              // used when present in the header
  std::vector<std::string> categorical_cols;    // force these covariates categorical
};

struct ColumnSummary {
  std::string name;
  ColumnType type;
  double missing_proportion;
};

struct ValidationReport {
  std::size_t n = 0;
  int n_clusters = 0;
  std::vector<std::size_t> cluster_sizes;
  double censoring_proportion = 0.0;
  std::vector<ColumnSummary> columns;
  double incomplete_row_proportion = 0.0;       // rows with >= 1 missing covariate
  std::vector<std::size_t> arm_counts;          // empty if no treatment

  std::string to_string() const;
};

// CSV with header; required columns y/delta/cluster, optional treatment;
// all other columns are covariates. Empty cells and the literal "NA" are
// missing. A sidecar codebook (written by save_dataset) pins categorical
// level order; otherwise non-numeric columns become categorical with levels
// in first-appearance order.
SurvivalDataset load_dataset(const std::string& path, const DatasetSchema& schema = {});

// Writes the CSV plus a ".codebook.json" sidecar when categorical columns
// or treatment arms are present. load(save(ds)) reproduces ds exactly.
void save_dataset(const SurvivalDataset& ds, const std::string& path);

ValidationReport validate(const SurvivalDataset& ds);

// Row bootstrap, cluster and treatment labels carried along with each row.
SurvivalDataset bootstrap_resample(const SurvivalDataset& ds, std::uint64_t seed);

// Row subset in the given order (complete-case filtering, splits).
SurvivalDataset subset_rows(const SurvivalDataset& ds, const std::vector<std::size_t>& rows);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace riaft
