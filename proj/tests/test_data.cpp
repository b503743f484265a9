#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "maskfe/data.hpp"
#include "maskfe/error.hpp"

using namespace maskfe;

namespace {

const char* kSchema = R"({"columns":[{"name":"a","kind":"numerical"},{"name":"c","kind":"categorical"},
  {"name":"s","kind":"temporal","lookback":3}],"target":"y","task":"classification"})";

Schema schema() { return parse_schema(kSchema); }

std::string message_of(const std::string& csv) {
  try {
    parse_csv(csv, schema(), nullptr, true, "t.csv");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("schema parse and hash") {
  const Schema s = schema();
  CHECK(s.columns.size() == 3);
  CHECK(s.columns[2].lookback == 3);
  CHECK(s.task == TaskType::classification);
  CHECK(s.count(FeatureKind::temporal) == 1);
  CHECK(schema_hash(s) == schema_hash(parse_schema(schema_to_json(s))));
  Schema other = s;
  other.target = "z";
  CHECK(schema_hash(other) != schema_hash(s));
}

TEST_CASE("bad schemas") {
  CHECK_THROWS_AS(parse_schema(R"({"columns":[{"name":"a","kind":"numerical"},{"name":"a","kind":"numerical"}],
    "target":"y","task":"regression"})"), DataError);
  CHECK_THROWS_AS(parse_schema(R"({"columns":[{"name":"a","kind":"numerical"}],"target":"a","task":"regression"})"),
                  DataError);
  CHECK_THROWS_AS(parse_schema(R"({"columns":[{"name":"s","kind":"temporal","lookback":1}],"target":"y","task":"regression"})"),
                  DataError);
  CHECK_THROWS_AS(parse_schema(R"({"columns":[{"name":"a","kind":"text"}],"target":"y","task":"regression"})"), DataError);
  CHECK_THROWS_AS(parse_schema("{"), DataError);
}

TEST_CASE("three-row file") {
  const Dataset ds = parse_csv("a,c,s,y\n1.5,red,1;2;3,no\n2,blue,4;5;6,yes\n-3,red,7;8;9,no\n", schema());
  CHECK(ds.rows() == 3);
  CHECK(ds.numeric.at(2, 0) == -3.0);
  CHECK(ds.categorical[0].codes == std::vector<std::size_t>{0, 1, 0});
  CHECK(ds.categorical[0].levels == std::vector<std::string>{"red", "blue"});
  CHECK(ds.temporal[0].windows.at(0, 0) == 1.0);
  CHECK(ds.temporal[0].windows.at(0, 2) == 3.0);
  CHECK(ds.class_labels == std::vector<std::string>{"no", "yes"});
  CHECK(ds.y == std::vector<double>{0, 1, 0});
}

TEST_CASE("numeric class labels sort numerically") {
  const Dataset ds = parse_csv("a,c,s,y\n1,r,1;2;3,10\n2,r,1;2;3,9\n3,r,1;2;3,2\n", schema());
  CHECK(ds.class_labels == std::vector<std::string>{"2", "9", "10"});
}

TEST_CASE("quoted fields") {
  const Dataset ds = parse_csv("a,c,s,y\n1,\"x, y\",\"1;2;3\",k\n", schema());
  CHECK(ds.categorical[0].levels[0] == "x, y");
}

TEST_CASE("parse errors name line and column") {
  const std::string short_window = message_of("a,c,s,y\n1,r,1;2,k\n");
  CHECK(short_window.find("line 2") != std::string::npos);
  CHECK(short_window.find("'s'") != std::string::npos);
  CHECK(message_of("a,c,s,y\nfoo,r,1;2;3,k\n").find("'a'") != std::string::npos);
  CHECK(message_of("a,c,s,y\n1,r,1;2;3\n").find("expected 4 fields") != std::string::npos);
  CHECK(message_of("a,c,y\n").find("missing column 's'") != std::string::npos);
  CHECK(message_of("a,c,s,y\n,r,1;2;3,k\n").find("line 2") != std::string::npos);
}

TEST_CASE("reference code tables keep codes stable") {
  const Dataset train = parse_csv("a,c,s,y\n1,red,1;2;3,no\n2,blue,1;2;3,yes\n", schema());
  const CodeTables codes = code_tables(train);
  const Dataset later = parse_csv("a,c,s,y\n1,green,1;2;3,yes\n2,red,1;2;3,no\n", schema(), &codes);
  CHECK(later.categorical[0].codes == std::vector<std::size_t>{2, 0});
  CHECK(later.y == std::vector<double>{1, 0});
  CHECK_THROWS_AS(parse_csv("a,c,s,y\n1,red,1;2;3,maybe\n", schema(), &codes), DataError);
  const Dataset unlabeled = parse_csv("a,c,s\n1,red,1;2;3\n", schema(), &codes, false);
  CHECK_FALSE(unlabeled.has_target);
}

TEST_CASE("split fractions and determinism") {
  Dataset a = synthesize("scaling", 100, 3, 1);
  Dataset b = synthesize("scaling", 100, 3, 1);
  split(a, {}, 42);
  split(b, {}, 42);
  CHECK(a.split == b.split);
  CHECK(a.rows_in(Split::train).size() == 80);
  CHECK(a.rows_in(Split::validation).size() == 10);
  CHECK(a.rows_in(Split::test).size() == 10);
  Dataset c = synthesize("scaling", 100, 3, 1);
  split(c, {}, 43);
  CHECK(c.split != a.split);
  split(c, {1.0, 0.0, 0.0}, 5);
  CHECK(c.rows_in(Split::train).size() == 100);
}

TEST_CASE("stratified split") {
  Dataset ds = synthesize("sign-product", 200, 2, 9);
  std::size_t ones = 0;
  for (double y : ds.y) ones += y == 1.0;
  split(ds, {}, 3);
  std::size_t train_ones = 0;
  const auto train = ds.rows_in(Split::train);
  for (std::size_t r : train) train_ones += ds.y[r] == 1.0;
  const double expected = static_cast<double>(ones) * train.size() / ds.rows();
  CHECK(std::abs(static_cast<double>(train_ones) - expected) <= 1.0);
}

TEST_CASE("categorical recoding follows training rows") {
  Dataset ds = parse_csv("a,c,s,y\n1,u,1;2;3,k\n2,v,1;2;3,k\n3,w,1;2;3,k\n4,v,1;2;3,k\n", schema());
  split(ds, {0.5, 0.0, 0.5}, 0);
  const auto train = ds.rows_in(Split::train);
  CHECK(ds.categorical[0].codes[train[0]] == 0);
  CHECK(ds.categorical[0].training_levels <= 2);
  const ad::Tensor scaled = categorical_scaled(ds, ds.rows_in(Split::test));
  for (double v : scaled.values()) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("pool and fitted statistics use training rows only") {
  Dataset ds = parse_csv("a,c,s,y\n1,r,0;0;1,k\n2,r,0;0;2,k\n3,r,0;0;3,k\n4,r,0;0;4,k\n", schema());
  CHECK(pool_names(ds) == std::vector<std::string>{"a", "s"});
  const std::vector<std::size_t> rows{0, 3};
  CHECK(pool_matrix(ds, rows) == ad::Tensor::matrix(2, 2, {1, 1, 4, 4}));

  split(ds, {0.5, 0.0, 0.5}, 1);
  const FittedStatistics before = fit_statistics(ds);
  for (std::size_t r : ds.rows_in(Split::test)) ds.numeric.at(r, 0) = 1e6;
  const FittedStatistics after = fit_statistics(ds);
  CHECK(before.quantile_cuts[0].cuts == after.quantile_cuts[0].cuts);
  CHECK(before.group_means[0].means == after.group_means[0].means);
}

TEST_CASE("csv round trip") {
  Dataset ds = synthesize("lag2", 20, 2, 4);
  const auto path = std::filesystem::temp_directory_path() / "maskfe_roundtrip.csv";
  write_csv(ds, path);
  const Dataset back = load_csv(path, ds.schema);
  std::filesystem::remove(path);
  CHECK(back.rows() == 20);
  for (std::size_t i = 0; i < ds.temporal[0].windows.size(); ++i) {
    CHECK(std::abs(back.temporal[0].windows[i] - ds.temporal[0].windows[i]) <= 1e-12 * std::abs(ds.temporal[0].windows[i]));
  }
  CHECK(back.y == ds.y);
}

TEST_CASE("synthetic generators") {
  CHECK(synthesize("product+log", 50, 3, 7).numeric == synthesize("product+log", 50, 3, 7).numeric);
  CHECK(synthesize("product+log", 50, 3, 7).y == synthesize("product+log", 50, 3, 7).y);

  const Dataset lag = synthesize("lag2", 30, 2, 1);
  CHECK(lag.temporal[0].lookback == 8);
  for (std::size_t r = 0; r < lag.rows(); ++r) CHECK(lag.y[r] == lag.temporal[0].windows.at(r, 5));

  const Dataset pl = synthesize("product+log", 2000, 3, 2);
  for (std::size_t r = 0; r < pl.rows(); ++r) {
    const double x1 = pl.numeric.at(r, 0), x2 = pl.numeric.at(r, 1), x3 = pl.numeric.at(r, 2);
    CHECK(std::abs(pl.y[r] - (x2 * x3 + std::log(std::abs(x1)))) < 0.05);
  }
  CHECK_THROWS(synthesize("product+log", 10, 2, 0));
  CHECK_THROWS(synthesize("nope", 10, 2, 0));
}
