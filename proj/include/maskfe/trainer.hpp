#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maskfe/data.hpp"
#include "maskfe/pipeline.hpp"

namespace maskfe {

struct TrainConfig {
  std::size_t steps = 3000;
  std::size_t batch = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::size_t eval_interval = 50;
  std::size_t patience = 10;

  // Throws std::invalid_argument unless every field is positive.
  void validate() const;
};

struct CurvePoint {
  std::size_t step = 0;
  double train_loss = 0.0;  // mean minibatch loss since the previous point
  double validation = 0.0;
};

struct TrainReport {
  std::vector<CurvePoint> curve;
  std::size_t steps_run = 0;
  bool early_stopped = false;
  std::size_t best_step = 0;
  double best_validation = 0.0;
  Split validation_split = Split::validation;  // train when the dataset has no validation rows
  std::vector<double> epoch_seconds;
  std::vector<std::string> provenance;
};

// Accuracy in percent for classification, MAE for regression.
double metric(TaskType task, const ad::Tensor& outputs, std::span<const double> y);
// True when `a` is a strictly better metric value than `b`.
bool improves(TaskType task, double a, double b);
// Metric on one split. Throws DataError for an empty split.
double evaluate(const Pipeline& model, const Dataset& dataset, Split split);

/// Minibatch Adam on the training rows. Evaluates every eval_interval steps
/// and at the last step, stops after `patience` evaluations without
/// improvement, and leaves the model at its best-validation parameters.
/// Throws NumericError naming the step if the loss is not finite.
TrainReport train(Pipeline& model, const Dataset& dataset, const TrainConfig& config);

// Plain-text summary without wall-clock figures.
std::string report_text(const TrainReport& report, TaskType task);
std::string curve_csv(const TrainReport& report);

}  // namespace maskfe
