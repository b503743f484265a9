#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "maskfe/cli.hpp"
#include "maskfe/data.hpp"

using namespace maskfe;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

struct Files {
  fs::path dir = fs::temp_directory_path() / "maskfe_cli_test";
  fs::path data = dir / "data.csv";
  fs::path schema = dir / "schema.json";
  Files() {
    fs::remove_all(dir);
    fs::create_directories(dir);
    Dataset ds = synthesize("lag2", 120, 2, 1);
    write_csv(ds, data);
    std::ofstream(schema) << schema_to_json(ds.schema);
  }
  ~Files() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("usage errors") {
  Files f;
  std::string err;
  CHECK(run({}, nullptr, &err) == cli::usage);
  CHECK(run({"train", "--data", f.data.string(), "--out", (f.dir / "o").string()}, nullptr, &err) == cli::usage);
  CHECK(err.find("--schema") != std::string::npos);
  CHECK(run({"frobnicate"}) == cli::usage);
  CHECK(run({"train", "--help"}) == cli::ok);
}

TEST_CASE("data errors") {
  Files f;
  std::ofstream(f.dir / "bad.csv") << "x1,x2,y\n1,2,3\n";
  std::string err;
  CHECK(run({"train", "--data", (f.dir / "bad.csv").string(), "--schema", f.schema.string(), "--out",
             (f.dir / "o").string()},
            nullptr, &err) == cli::data_error);
  CHECK(err.find("bad.csv") != std::string::npos);
}

TEST_CASE("train then apply reproduces the exported features") {
  Files f;
  const fs::path out = f.dir / "run";
  std::string text;
  REQUIRE(run({"train", "--data", f.data.string(), "--schema", f.schema.string(), "--out", out.string(), "--steps", "60",
               "--hidden", "32", "--seed", "4"},
              &text) == cli::ok);
  CHECK(text.find("test_mae") != std::string::npos);
  for (const char* file : {"report.txt", "curve.csv", "timing.txt", "checkpoint.json", "manifest.json", "features.csv",
                           "features_train.csv", "features_test.csv"}) {
    CHECK(fs::exists(out / file));
  }
  const fs::path applied = f.dir / "applied";
  REQUIRE(run({"apply", "--checkpoint", (out / "checkpoint.json").string(), "--data", f.data.string(), "--out",
               applied.string()}) == cli::ok);
  CHECK(slurp(applied / "features.csv") == slurp(out / "features.csv"));
  CHECK(slurp(applied / "manifest.json") == slurp(out / "manifest.json"));

  const fs::path exported = f.dir / "exported";
  REQUIRE(run({"export", "--checkpoint", (out / "checkpoint.json").string(), "--data", f.data.string(), "--out",
               exported.string()}) == cli::ok);
  CHECK(slurp(exported / "features_train.csv") == slurp(out / "features_train.csv"));
  CHECK(slurp(exported / "features_test.csv") == slurp(out / "features_test.csv"));
}

TEST_CASE("bench prints ratio tables") {
  std::string text;
  REQUIRE(run({"bench", "--sizes", "4,8", "--rows", "40", "--epochs", "1", "--repeats", "1"}, &text) == cli::ok);
  CHECK(text.rfind("d,seconds,ratio\n4,", 0) == 0);
  CHECK(text.find("\n8,") != std::string::npos);
  CHECK(text.find("n,seconds,ratio") != std::string::npos);
  CHECK(text.find("k,seconds,ratio") != std::string::npos);
}

TEST_CASE("gauss demo") {
  std::string text;
  REQUIRE(run({"gauss-demo", "--target", "step", "--K", "1,4", "--seeds", "1", "--iterations", "300"},
              &text) == cli::ok);
  CHECK(text.find("step,3,256,4,") != std::string::npos);
  CHECK(text.find("result pass") != std::string::npos);
  CHECK(run({"gauss-demo", "--target", "nope"}) == cli::usage);
}
