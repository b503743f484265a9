#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maskfe/tensor.hpp"
#include "maskfe/transforms.hpp"

namespace maskfe {

enum class TaskType { classification, regression };

std::string_view task_name(TaskType task);

struct ColumnSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numerical;
  std::size_t lookback = 0;  // temporal only
};

/// Column kinds, target, and task. Serialized as
/// {"columns":[{"name","kind","lookback"?}], "target", "task"}.
struct Schema {
  std::vector<ColumnSpec> columns;
  std::string target;
  TaskType task = TaskType::regression;

  // Throws DataError on duplicate names, a target listed among the columns,
  // or a temporal lookback below 2.
  void validate() const;
  std::size_t count(FeatureKind kind) const;
};

Schema parse_schema(std::string_view json_text);
Schema load_schema(const std::filesystem::path& path);
// Canonical JSON text; stable for a given schema.
std::string schema_to_json(const Schema& schema);
// FNV-1a of the canonical JSON.
std::uint64_t schema_hash(const Schema& schema);

enum class Split : std::uint8_t { train, validation, test };
std::string_view split_name(Split split);

struct CategoricalColumn {
  std::string name;
  std::vector<std::size_t> codes;   // per row
  std::vector<std::string> levels;  // text of each code
  std::size_t training_levels = 0;  // codes below this were seen in training rows
};

struct TemporalColumn {
  std::string name;
  std::size_t lookback = 0;
  ad::Tensor windows;  // (rows, lookback); column lookback-1 is the current step
};

struct Dataset {
  Schema schema;
  std::vector<std::string> numeric_names;
  ad::Tensor numeric;  // (rows, numeric columns)
  std::vector<CategoricalColumn> categorical;
  std::vector<TemporalColumn> temporal;
  std::vector<double> y;                  // class code or regression value
  std::vector<std::string> class_labels;  // classification only
  std::vector<Split> split;               // defaults to train
  bool has_target = true;

  std::size_t rows() const { return split.size(); }
  std::size_t num_classes() const { return class_labels.size(); }
  std::vector<std::size_t> rows_in(Split s) const;
};

// Code tables carried from training time so later files encode identically.
struct CodeTables {
  std::vector<std::vector<std::string>> categorical_levels;  // per categorical column
  std::vector<std::size_t> training_levels;
  std::vector<std::string> class_labels;
};

CodeTables code_tables(const Dataset& dataset);

/// Parses a CSV with a header row. Categorical levels get codes by first
/// appearance (or from `reference`, with unknown levels appended). Temporal
/// cells are ';'-joined windows of exactly `lookback` values. The target
/// column is optional only when `require_target` is false.
Dataset load_csv(const std::filesystem::path& path, const Schema& schema, const CodeTables* reference = nullptr,
                 bool require_target = true);
Dataset parse_csv(std::string_view text, const Schema& schema, const CodeTables* reference = nullptr,
                  bool require_target = true, std::string_view source = "<memory>");
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

/// Tags rows train/validation/test by a seeded shuffle, stratified by class
/// for classification, then recodes categorical levels by first appearance in
/// training rows unless `recode` is false (data already coded from a saved
/// table). Throws DataError if a class has no training row.
void split(Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed, bool recode = true);

// ---- candidate pool and fitted statistics ---------------------------------

// Names of the numeric candidate pool: numerical columns, then the current
// step of each temporal column.
std::vector<std::string> pool_names(const Dataset& dataset);
// (rows, pool width) values for the given rows.
ad::Tensor pool_matrix(const Dataset& dataset, std::span<const std::size_t> rows);
// Categorical codes scaled to [0,1]; levels unseen in training map to 0.
ad::Tensor categorical_scaled(const Dataset& dataset, std::span<const std::size_t> rows);

struct FittedStatistics {
  std::vector<transforms::QuantileCuts> quantile_cuts;      // per pool column
  std::vector<transforms::GroupMeanTable> group_means;  // per categorical column
};

/// Quantile cut points and group means from training rows only.
FittedStatistics fit_statistics(const Dataset& dataset);

// ---- synthetic datasets ---------------------------------------------------

/// "product+log": x1..xd ~ N(0,1), y = x2*x3 + ln|x1| + N(0, 0.01^2), d >= 3.
/// "lag2": d series with lookback 8, y = first series two steps back.
/// "scaling": d Gaussian features with a linear regression target.
/// "sign-product": classification, label = [x1*x2 > 0], d >= 2.
Dataset synthesize(std::string_view generator, std::size_t n, std::size_t d, std::uint64_t seed);

}  // namespace maskfe
