#include "maskfe/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "maskfe/optimizer.hpp"
#include "maskfe/parallel.hpp"

namespace maskfe {

std::vector<TransformKind> half_bank() {
  std::vector<TransformKind> kinds = tabular_transform_kinds();
  kinds.resize(4);
  return kinds;
}

double time_epochs(const Dataset& ds, const PipelineConfig& config, std::size_t epochs, std::size_t batch,
                   std::uint64_t seed) {
  Pipeline model(make_layout(ds), config, fit_statistics(ds), seed);
  std::vector<std::size_t> order(ds.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), std::mt19937_64(seed));
  std::vector<Batch> batches;
  for (std::size_t b = 0; b < order.size(); b += batch) {
    const std::size_t e = std::min(order.size(), b + batch);
    batches.push_back(make_batch(ds, std::span<const std::size_t>(order).subspan(b, e - b)));
  }
  Adam adam;
  auto one_step = [&](const Batch& bt) {
    ad::Tape tape;
    const std::vector<ad::Var> params = model.register_parameters(tape);
    const ForwardResult fwd = model.forward(tape, params, bt);
    const ad::Var loss = task_loss(tape, fwd.output, bt.y, ds.schema.task);
    const ad::Gradients grads = tape.backward(loss);
    std::vector<ad::Tensor> g;
    for (const ad::Var& p : params) g.push_back(grads[p]);
    adam.step(model.parameters(), g);
  };
  one_step(batches.front());
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t e = 0; e < epochs; ++e)
    for (const Batch& bt : batches) one_step(bt);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

struct Setting {
  std::string axis;
  std::string label;
  Dataset data;
  PipelineConfig config;
  std::size_t baseline = 0;  // setting the ratio is taken against
};

}  // namespace

BenchReport benchmark_scaling(const BenchConfig& bc) {
  if (bc.sizes.empty() || bc.rows == 0 || bc.epochs == 0 || bc.batch == 0 || bc.repeats == 0) {
    throw std::invalid_argument("bench: sizes, rows, epochs, batch and repeats must be non-empty and positive");
  }
  retain_heap_memory();
  PipelineConfig pc;
  pc.hidden = bc.hidden;
  const std::size_t d0 = bc.sizes.front();

  std::vector<Setting> settings;
  for (std::size_t i = 0; i < bc.sizes.size(); ++i) {
    settings.push_back({"d", fmt::format("d={}", bc.sizes[i]), synthesize("scaling", bc.rows, bc.sizes[i], bc.seed), pc,
                        i == 0 ? 0 : i - 1});
  }
  settings.push_back({"n", fmt::format("n={}", 2 * bc.rows), synthesize("scaling", 2 * bc.rows, d0, bc.seed), pc, 0});
  PipelineConfig half = pc;
  half.tabular = half_bank();
  settings.push_back({"k", fmt::format("k={}", half.tabular.size()), settings.front().data, half, 0});

  // Settings alternate within each repeat so slow drift in machine speed
  // cancels out of the paired ratios.
  std::vector<std::vector<double>> seconds(settings.size());
  for (std::size_t r = 0; r < bc.repeats; ++r)
    for (std::size_t i = 0; i < settings.size(); ++i)
      seconds[i].push_back(time_epochs(settings[i].data, settings[i].config, bc.epochs, bc.batch, bc.seed));

  auto timing = [&](std::size_t i) {
    if (i == 0) return Timing{settings[i].label, median(seconds[i]), 0.0};
    std::vector<double> ratios;
    for (std::size_t r = 0; r < bc.repeats; ++r) ratios.push_back(seconds[i][r] / seconds[settings[i].baseline][r]);
    return Timing{settings[i].label, median(seconds[i]), median(ratios)};
  };
  const Timing base = timing(0);
  BenchReport report;
  report.features.push_back(base);
  report.rows.push_back(Timing{fmt::format("n={}", bc.rows), base.seconds, 0.0});
  report.bank.push_back(Timing{fmt::format("k={}", tabular_transform_kinds().size()), base.seconds, 0.0});
  for (std::size_t i = 1; i < settings.size(); ++i) {
    const std::string& axis = settings[i].axis;
    (axis == "d" ? report.features : axis == "n" ? report.rows : report.bank).push_back(timing(i));
  }
  return report;
}

std::string bench_table(const BenchReport& r) {
  std::string out;
  auto section = [&](const char* axis, const std::vector<Timing>& rows) {
    out += fmt::format("{},seconds,ratio\n", axis);
    for (const Timing& t : rows) {
      out += fmt::format("{},{:.6f},{}\n", t.setting.substr(t.setting.find('=') + 1), t.seconds,
                         t.ratio == 0.0 ? std::string() : fmt::format("{:.3f}", t.ratio));
    }
  };
  section("d", r.features);
  section("n", r.rows);
  section("k", r.bank);
  return out;
}

}  // namespace maskfe
