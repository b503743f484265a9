#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "maskfe/data.hpp"
#include "maskfe/pipeline.hpp"

namespace maskfe {

struct BenchConfig {
  std::vector<std::size_t> sizes{100, 200};  // feature counts d
  std::size_t rows = 1000;
  std::size_t epochs = 10;  // timed passes over the rows
  std::size_t batch = 1000;
  std::size_t repeats = 5;
  std::size_t hidden = 16;
  std::uint64_t seed = 0;
};

struct Timing {
  std::string setting;
  double seconds = 0.0;  // median over repeats
  double ratio = 0.0;    // median paired ratio against the previous row; 0 for the first
};

struct BenchReport {
  std::vector<Timing> features;  // one row per size
  std::vector<Timing> rows;      // n, 2n at the first size
  std::vector<Timing> bank;      // full and half bank at the first size
};

// The first four tabular transforms.
std::vector<TransformKind> half_bank();

// Seconds for `epochs` passes of minibatch training steps (forward, backward,
// Adam) after one untimed warm-up step. Batches are built before timing.
double time_epochs(const Dataset& dataset, const PipelineConfig& config, std::size_t epochs, std::size_t batch,
                   std::uint64_t seed);

BenchReport benchmark_scaling(const BenchConfig& config);
std::string bench_table(const BenchReport& report);

}  // namespace maskfe
