#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maskfe/autodiff.hpp"
#include "maskfe/data.hpp"
#include "maskfe/masking.hpp"
#include "maskfe/transforms.hpp"

namespace maskfe {

struct PipelineConfig {
  std::size_t h = 5;           // local mask width, capped by the candidate count
  std::size_t h_glb = 16;      // capped by the concatenated width
  std::size_t h_temporal = 5;  // temporal aggregation mask width, capped by L
  std::size_t hidden = 256;
  std::size_t instances = 1;  // copies of each tabular transform
  std::vector<TransformKind> tabular = tabular_transform_kinds();
  std::vector<TransformKind> temporal = temporal_transform_kinds();
  // Baseline: the MLP reads pool, scaled categoricals and raw windows directly.
  bool raw_features_only = false;
};

// Feature layout of a schema as the model sees it.
struct Layout {
  std::vector<std::string> pool;
  std::vector<std::string> categorical;
  std::vector<std::string> temporal;
  std::vector<std::size_t> lookback;
  TaskType task = TaskType::regression;
  std::size_t outputs = 1;  // classes, or 1 for regression
};

Layout make_layout(const Schema& schema, std::size_t classes);
Layout make_layout(const Dataset& dataset);

struct Batch {
  std::size_t rows = 0;
  ad::Tensor pool;                 // (rows, pool)
  ad::Tensor categorical;          // (rows, categorical), scaled to [0,1]
  std::vector<std::size_t> codes;  // rows x categorical
  std::vector<ad::Tensor> windows; // per temporal column, (rows, L)
  std::vector<double> y;           // empty when the data has no target
};

Batch make_batch(const Dataset& dataset, std::span<const std::size_t> rows);
Batch make_batch(const Dataset& dataset);

struct Parameter {
  std::string name;
  ad::Tensor value;
};

struct InputRef {
  std::string feature;
  std::optional<std::size_t> offset;  // steps back from the current one
  double weight = 1.0;
};

// Describes one engineered column.
struct ColumnInfo {
  TransformKind kind;
  std::string provenance;
  std::vector<InputRef> inputs;
  std::vector<double> constants;
  std::size_t position = 0;  // index in the concatenated block
  double global_weight = 1.0;
};

struct ForwardResult {
  ad::Var engineered;  // (n, h_glb), the global weighted selection
  ad::Var output;      // (n, outputs)
  MaskOutput global;
  std::vector<ColumnInfo> columns;  // selected columns in index order, when described
};

class Pipeline {
 public:
  Pipeline(Layout layout, PipelineConfig config, FittedStatistics stats, std::uint64_t seed);
  // Rebuilds a trained model; names and shapes of `parameters` must match.
  Pipeline(Layout layout, PipelineConfig config, FittedStatistics stats, std::vector<Parameter> parameters);

  const Layout& layout() const { return layout_; }
  const PipelineConfig& config() const { return config_; }
  const FittedStatistics& statistics() const { return stats_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  const Parameter& parameter(std::string_view name) const;

  std::size_t concatenated_width() const { return concat_width_; }
  std::size_t engineered_width() const { return h_glb_; }

  // Parameters as tape leaves, in parameters() order. Constants when
  // `trainable` is false.
  std::vector<ad::Var> register_parameters(ad::Tape& tape, bool trainable = true) const;
  ForwardResult forward(ad::Tape& tape, std::span<const ad::Var> params, const Batch& batch, bool describe = false) const;

  // Value-only helpers on a private tape.
  ad::Tensor predict(const Batch& batch) const;
  std::pair<ad::Tensor, std::vector<ColumnInfo>> engineer(const Batch& batch) const;

 private:
  struct Unit {
    TransformKind kind;
    std::size_t instance = 0;
    std::size_t feature = 0;  // temporal column
    std::size_t k = 0;        // difference offset
    std::size_t h = 0;
    std::size_t width = 0;
    std::vector<std::size_t> params;
  };

  struct Inputs;

  void build_units();
  std::size_t add_parameter(std::string name, ad::Tensor value);
  void initialize(std::uint64_t seed);
  ad::Var unit_forward(const Unit& unit, std::span<const ad::Var> p, const Inputs& in, const Batch& batch,
                       std::vector<ColumnInfo>* info) const;
  ad::Var head(std::span<const ad::Var> p, ad::Var x) const;
  void check_batch(const Batch& batch) const;

  Layout layout_;
  PipelineConfig config_;
  FittedStatistics stats_;
  std::vector<Parameter> params_;
  std::vector<Unit> units_;
  std::size_t concat_width_ = 0;
  std::size_t h_glb_ = 0;
  std::size_t global_param_ = 0;
  std::size_t head_param_ = 0;
};

// Mean cross-entropy over log-softmax of the outputs, or mean absolute
// error. Throws DataError for a label outside [0, classes).
ad::Var task_loss(ad::Tape& tape, ad::Var output, std::span<const double> y, TaskType task);

}  // namespace maskfe
