#include "maskfe/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "maskfe/error.hpp"
#include "maskfe/optimizer.hpp"

namespace maskfe {

void TrainConfig::validate() const {
  if (steps == 0 || batch == 0 || !(lr > 0.0) || eval_interval == 0 || patience == 0) {
    throw std::invalid_argument("train: steps, batch, lr, eval interval and patience must be positive");
  }
}

double metric(TaskType task, const ad::Tensor& outputs, std::span<const double> y) {
  if (y.empty()) throw DataError("metric: no rows");
  if (outputs.rank() != 2 || outputs.rows() != y.size()) throw ShapeError("metric: outputs do not match targets");
  const std::size_t n = y.size(), k = outputs.cols();
  if (task == TaskType::classification) {
    std::size_t correct = 0;
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c)
        if (outputs[r * k + c] > outputs[r * k + best]) best = c;
      correct += static_cast<double>(best) == y[r] ? 1 : 0;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(n);
  }
  double acc = 0.0;
  for (std::size_t r = 0; r < n; ++r) acc += std::abs(outputs[r * k] - y[r]);
  return acc / static_cast<double>(n);
}

bool improves(TaskType task, double a, double b) { return task == TaskType::classification ? a > b : a < b; }

double evaluate(const Pipeline& model, const Dataset& ds, Split split) {
  const std::vector<std::size_t> rows = ds.rows_in(split);
  if (rows.empty()) throw DataError(fmt::format("evaluate: the {} split is empty", split_name(split)));
  if (!ds.has_target) throw DataError("evaluate: dataset has no target column");
  const Batch batch = make_batch(ds, rows);
  return metric(ds.schema.task, model.predict(batch), batch.y);
}

TrainReport train(Pipeline& model, const Dataset& ds, const TrainConfig& config) {
  config.validate();
  if (!ds.has_target) throw DataError("train: dataset has no target column");
  const std::vector<std::size_t> train_rows = ds.rows_in(Split::train);
  if (train_rows.empty()) throw DataError("train: the training split is empty");

  TrainReport report;
  report.validation_split = ds.rows_in(Split::validation).empty() ? Split::train : Split::validation;
  const TaskType task = ds.schema.task;

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order = train_rows;
  std::size_t pos = order.size();
  Adam adam(AdamConfig{config.lr});
  std::vector<Parameter> best = model.parameters();
  bool have_best = false;
  std::size_t stale = 0;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;

  using clock = std::chrono::steady_clock;
  auto epoch_start = clock::now();
  bool epoch_open = false;

  for (std::size_t step = 1; step <= config.steps; ++step) {
    if (pos >= order.size()) {
      if (epoch_open) report.epoch_seconds.push_back(std::chrono::duration<double>(clock::now() - epoch_start).count());
      std::shuffle(order.begin(), order.end(), rng);
      pos = 0;
      epoch_start = clock::now();
      epoch_open = true;
    }
    const std::size_t end = std::min(pos + config.batch, order.size());
    const Batch batch = make_batch(ds, std::span(order).subspan(pos, end - pos));
    pos = end;

    ad::Tape tape;
    const std::vector<ad::Var> params = model.register_parameters(tape);
    const ForwardResult fwd = model.forward(tape, params, batch);
    const ad::Var loss = task_loss(tape, fwd.output, batch.y, task);
    const double value = loss.value().item();
    if (!std::isfinite(value)) throw NumericError(fmt::format("train: non-finite loss at step {}", step));
    const ad::Gradients grads = tape.backward(loss);
    std::vector<ad::Tensor> g;
    g.reserve(params.size());
    for (const ad::Var& p : params) g.push_back(grads[p]);
    adam.step(model.parameters(), g);
    loss_sum += value;
    ++loss_count;
    report.steps_run = step;

    if (step % config.eval_interval == 0 || step == config.steps) {
      const double v = evaluate(model, ds, report.validation_split);
      report.curve.push_back(CurvePoint{step, loss_sum / static_cast<double>(loss_count), v});
      loss_sum = 0.0;
      loss_count = 0;
      if (!have_best || improves(task, v, report.best_validation)) {
        have_best = true;
        report.best_validation = v;
        report.best_step = step;
        best = model.parameters();
        stale = 0;
      } else if (++stale >= config.patience) {
        report.early_stopped = true;
        break;
      }
    }
  }
  if (epoch_open) report.epoch_seconds.push_back(std::chrono::duration<double>(clock::now() - epoch_start).count());
  model.parameters() = std::move(best);

  const std::size_t first[] = {train_rows.front()};
  for (const ColumnInfo& c : model.engineer(make_batch(ds, first)).second) report.provenance.push_back(c.provenance);
  return report;
}

std::string report_text(const TrainReport& r, TaskType task) {
  const char* metric_name = task == TaskType::classification ? "accuracy" : "mae";
  std::string out;
  out += fmt::format("steps_run {}\n", r.steps_run);
  out += fmt::format("early_stopped {}\n", r.early_stopped ? "yes" : "no");
  out += fmt::format("validation_split {}\n", split_name(r.validation_split));
  out += fmt::format("best_step {}\n", r.best_step);
  out += fmt::format("best_validation_{} {:.17g}\n", metric_name, r.best_validation);
  out += "engineered_features\n";
  for (const std::string& p : r.provenance) out += fmt::format("  {}\n", p);
  return out;
}

std::string curve_csv(const TrainReport& r) {
  std::string out = "step,train_loss,validation\n";
  for (const CurvePoint& c : r.curve) out += fmt::format("{},{:.17g},{:.17g}\n", c.step, c.train_loss, c.validation);
  return out;
}

}  // namespace maskfe
