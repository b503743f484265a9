#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "maskfe/data.hpp"
#include "maskfe/pipeline.hpp"
#include "maskfe/trainer.hpp"

namespace maskfe {

inline constexpr int kCheckpointVersion = 1;

struct TrainedModel {
  Schema schema;
  CodeTables codes;
  TrainConfig train;
  SplitFractions fractions;
  Pipeline model;
};

// JSON text holding the schema and its hash, code tables, configuration,
// fitted statistics and every parameter tensor.
std::string checkpoint_json(const TrainedModel& trained);
void save_checkpoint(const std::filesystem::path& path, const TrainedModel& trained);

// Throws DataError when the stored hash disagrees with the stored schema,
// or with `expected` when given.
TrainedModel parse_checkpoint(std::string_view text, const Schema* expected = nullptr);
TrainedModel load_checkpoint(const std::filesystem::path& path, const Schema* expected = nullptr);

}  // namespace maskfe
