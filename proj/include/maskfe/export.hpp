#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "maskfe/data.hpp"
#include "maskfe/pipeline.hpp"

namespace maskfe {

// CSV headers from provenance slugs; repeats get a numeric suffix.
std::vector<std::string> column_headers(std::span<const ColumnInfo> columns);

// Rows of `engineered` (all when `rows` is empty) with full precision.
std::string features_csv(const ad::Tensor& engineered, std::span<const std::string> headers,
                         std::span<const std::size_t> rows = {});

// One entry per engineered column ordered by global weight (descending):
// rank, column, provenance, kind, inputs with 4-digit weights, constants,
// global weight.
std::string manifest_json(std::span<const ColumnInfo> columns, std::span<const std::string> headers);

/// Writes features.csv (every row in file order) and manifest.json into
/// `dir`, plus features_{train,validation,test}.csv when `per_split`.
void export_features(const Pipeline& model, const Dataset& dataset, const std::filesystem::path& dir, bool per_split);

}  // namespace maskfe
