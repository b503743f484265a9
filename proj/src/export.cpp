#include "maskfe/export.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <string>

#include <fmt/format.h>
#include <json.hpp>

#include "maskfe/error.hpp"

namespace maskfe {

using json = nlohmann::json;

std::vector<std::string> column_headers(std::span<const ColumnInfo> columns) {
  std::vector<std::string> out;
  std::map<std::string, int> seen;
  for (const ColumnInfo& c : columns) {
    std::string slug = provenance_slug(c.provenance);
    const int count = ++seen[slug];
    if (count > 1) slug += fmt::format("_{}", count);
    out.push_back(std::move(slug));
  }
  return out;
}

std::string features_csv(const ad::Tensor& x, std::span<const std::string> headers, std::span<const std::size_t> rows) {
  if (x.rank() != 2 || x.cols() != headers.size()) throw ShapeError("features_csv: header count does not match columns");
  std::string out = fmt::format("{}\n", fmt::join(headers, ","));
  auto emit = [&](std::size_t r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (c > 0) out += ',';
      out += fmt::format("{:.17g}", x.at(r, c));
    }
    out += '\n';
  };
  if (rows.empty()) {
    for (std::size_t r = 0; r < x.rows(); ++r) emit(r);
  } else {
    for (std::size_t r : rows) emit(r);
  }
  return out;
}

namespace {

double four_digits(double v) { return std::stod(fmt::format("{:.4g}", v)); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

}  // namespace

std::string manifest_json(std::span<const ColumnInfo> columns, std::span<const std::string> headers) {
  std::vector<std::size_t> order(columns.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return columns[a].global_weight > columns[b].global_weight; });
  json entries = json::array();
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const ColumnInfo& c = columns[order[rank]];
    json inputs = json::array();
    for (const InputRef& in : c.inputs) {
      json e{{"feature", in.feature}, {"weight", four_digits(in.weight)}};
      if (in.offset) e["offset"] = *in.offset;
      inputs.push_back(std::move(e));
    }
    json constants = json::array();
    for (double v : c.constants) constants.push_back(four_digits(v));
    entries.push_back({{"rank", rank + 1},
                       {"column", headers[order[rank]]},
                       {"provenance", c.provenance},
                       {"kind", std::string(transform_name(c.kind))},
                       {"inputs", std::move(inputs)},
                       {"constants", std::move(constants)},
                       {"global_weight", four_digits(c.global_weight)}});
  }
  return json{{"features", std::move(entries)}}.dump(2) + "\n";
}

void export_features(const Pipeline& model, const Dataset& ds, const std::filesystem::path& dir, bool per_split) {
  if (model.config().raw_features_only) throw std::invalid_argument("export: the raw-feature baseline has no engineered features");
  std::filesystem::create_directories(dir);
  const auto [x, columns] = model.engineer(make_batch(ds));
  const std::vector<std::string> headers = column_headers(columns);
  write_text(dir / "features.csv", features_csv(x, headers));
  if (per_split) {
    for (Split s : {Split::train, Split::validation, Split::test}) {
      const std::vector<std::size_t> rows = ds.rows_in(s);
      std::string text = rows.empty() ? fmt::format("{}\n", fmt::join(headers, ",")) : features_csv(x, headers, rows);
      write_text(dir / fmt::format("features_{}.csv", split_name(s)), text);
    }
  }
  write_text(dir / "manifest.json", manifest_json(columns, headers));
}

}  // namespace maskfe
