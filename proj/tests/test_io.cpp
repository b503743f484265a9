#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "maskfe/checkpoint.hpp"
#include "maskfe/error.hpp"
#include "maskfe/export.hpp"

using namespace maskfe;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Fixture {
  Dataset ds = synthesize("lag2", 60, 2, 3);
  Pipeline model;
  Fixture() : model(make_layout(prepare(ds)), PipelineConfig{}, fit_statistics(ds), 3) {}
  static Dataset& prepare(Dataset& d) {
    split(d, {}, 3);
    return d;
  }
};

fs::path scratch(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("column headers deduplicate") {
  std::vector<ColumnInfo> cols(3);
  cols[0].provenance = "Logarithm(x1)";
  cols[1].provenance = "Logarithm(x1)";
  cols[2].provenance = "TemporalLag(s, 2)";
  CHECK(column_headers(cols) == std::vector<std::string>{"Logarithm_x1", "Logarithm_x1_2", "TemporalLag_s_2"});
}

TEST_CASE("features csv") {
  const ad::Tensor x = ad::Tensor::matrix(2, 2, {0.1, 2, 3, -4});
  const std::vector<std::string> h{"a", "b"};
  CHECK(features_csv(x, h) == "a,b\n0.10000000000000001,2\n3,-4\n");
  const std::vector<std::size_t> rows{1};
  CHECK(features_csv(x, h, rows) == "a,b\n3,-4\n");
}

TEST_CASE("manifest is ordered by global weight") {
  Fixture f;
  const auto [x, cols] = f.model.engineer(make_batch(f.ds));
  const auto headers = column_headers(cols);
  const auto doc = nlohmann::json::parse(manifest_json(cols, headers))["features"];
  REQUIRE(doc.is_array());
  CHECK(doc.size() == f.model.engineered_width());
  for (std::size_t i = 1; i < doc.size(); ++i) CHECK(doc[i - 1]["global_weight"] >= doc[i]["global_weight"]);
  CHECK(doc[0]["rank"] == 1);
}

TEST_CASE("export writes every file and is repeatable") {
  Fixture f;
  const fs::path a = scratch("maskfe_export_a"), b = scratch("maskfe_export_b");
  export_features(f.model, f.ds, a, true);
  export_features(f.model, f.ds, b, true);
  for (const char* file : {"features.csv", "features_train.csv", "features_validation.csv", "features_test.csv",
                           "manifest.json"}) {
    REQUIRE(fs::exists(a / file));
    CHECK(slurp(a / file) == slurp(b / file));
  }
  const std::string all = slurp(a / "features.csv");
  CHECK(static_cast<std::size_t>(std::count(all.begin(), all.end(), '\n')) == f.ds.rows() + 1);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("checkpoint round trip") {
  Fixture f;
  const TrainedModel saved{f.ds.schema, code_tables(f.ds), TrainConfig{}, SplitFractions{}, f.model};
  const std::string text = checkpoint_json(saved);
  const TrainedModel back = parse_checkpoint(text);
  CHECK(checkpoint_json(back) == text);
  CHECK(back.model.predict(make_batch(f.ds)) == f.model.predict(make_batch(f.ds)));
  CHECK(schema_hash(back.schema) == schema_hash(f.ds.schema));

  Schema other = f.ds.schema;
  other.target = "z";
  CHECK_THROWS_AS(parse_checkpoint(text, &other), DataError);

  auto doc = nlohmann::json::parse(text);
  doc["schema_hash"] = "0000000000000000";
  CHECK_THROWS_AS(parse_checkpoint(doc.dump()), DataError);
  CHECK_THROWS_AS(parse_checkpoint("not json"), DataError);
}
