// End-to-end acceptance checks. Prints one PASS / FAIL / SKIP line per
// criterion. Exit status: 0 when nothing failed, 1 on any failure, 77 when
// every selected criterion was skipped.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "maskfe/benchmark.hpp"
#include "maskfe/cli.hpp"
#include "maskfe/export.hpp"
#include "maskfe/gaussian_approx.hpp"
#include "maskfe/gradcheck.hpp"
#include "maskfe/optimizer.hpp"
#include "maskfe/parallel.hpp"
#include "maskfe/trainer.hpp"

using namespace maskfe;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("maskfe_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double softmax_at(const ad::Tensor& logits, std::size_t i) {
  double mx = -INFINITY;
  for (double v : logits.values()) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits.values()) z += std::exp(v - mx);
  return std::exp(logits[i] - mx) / z;
}

// ---- 1 ---------------------------------------------------------------------

Outcome gradient_fidelity() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  std::string csv = "x1,x2,x3,x4,c,s,y\n";
  for (int r = 0; r < 8; ++r) {
    std::string w;
    for (int t = 0; t < 8; ++t) w += fmt::format("{}{:.6f}", t ? ";" : "", nd(rng));
    csv += fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{},{},{}\n", nd(rng), nd(rng), nd(rng), nd(rng), "abc"[r % 3], w, r % 3);
  }
  const Schema schema = parse_schema(R"({"columns":[{"name":"x1","kind":"numerical"},{"name":"x2","kind":"numerical"},
    {"name":"x3","kind":"numerical"},{"name":"x4","kind":"numerical"},{"name":"c","kind":"categorical"},
    {"name":"s","kind":"temporal","lookback":8}],"target":"y","task":"classification"})");
  const Dataset ds = parse_csv(csv, schema);
  const Pipeline model(make_layout(ds), PipelineConfig{}, fit_statistics(ds), 3);
  const Batch batch = make_batch(ds);
  std::vector<ad::Tensor> values;
  for (const Parameter& p : model.parameters()) values.push_back(p.value);
  const ad::GradCheckResult r = ad::finite_difference_check(
      [&](ad::Tape& tape, std::span<const ad::Var> p) {
        const ForwardResult f = model.forward(tape, p, batch);
        return task_loss(tape, f.output, batch.y, schema.task);
      },
      values, 1e-6, 1e-5);
  return verdict(r.max_relative_error < 1e-4,
                 fmt::format("{} coordinates over {} tensors, max relative error {:.3e} at {}[{}]", r.coordinates,
                             values.size(), r.max_relative_error, model.parameters()[r.worst_param].name,
                             r.worst_coordinate));
}

// ---- 2 ---------------------------------------------------------------------

Outcome mask_semantics() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  std::size_t perturbations = 0, argmax_checks = 0;
  bool invariant = true, argmax = true;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 3 + trial % 20, h = 1 + trial % d, n = 6;
    const MaskParameters p = MaskParameters::uniform(d, h, rng, 2.0);
    std::vector<double> x(n * d);
    for (double& v : x) v = nd(rng);
    const bool temporal = trial % 2 == 1;
    auto apply = [&](const std::vector<double>& values) {
      ad::Tape t;
      const ad::Var in = t.constant(ad::Tensor::matrix(n, d, values));
      const ad::Var logits = t.constant(p.logits);
      const MaskedSelection s = temporal ? temporal_mask_forward(logits, h, in) : mask_forward(logits, h, in);
      return std::make_pair(s.mask, s.selected.value());
    };
    const auto [mask, selected] = apply(x);
    const auto best = std::max_element(p.logits.values().begin(), p.logits.values().end()) - p.logits.values().begin();
    argmax = argmax && std::find(mask.indices.begin(), mask.indices.end(), best) != mask.indices.end();
    ++argmax_checks;
    for (std::size_t c = 0; c < d; ++c) {
      if (std::find(mask.indices.begin(), mask.indices.end(), c) != mask.indices.end()) continue;
      std::vector<double> y = x;
      for (std::size_t r = 0; r < n; ++r) y[r * d + c] = nd(rng) * 1e3;
      invariant = invariant && apply(y).second == selected;
      ++perturbations;
    }
  }

  Dataset ds = synthesize("lag2", 400, 3, 5);
  split(ds, {}, 5);
  PipelineConfig cfg;
  Pipeline model(make_layout(ds), cfg, fit_statistics(ds), 5);
  Adam adam;
  const std::vector<std::size_t> train_rows = ds.rows_in(Split::train);
  std::mt19937_64 shuffle(5);
  bool width = true;
  for (std::size_t step = 0; step < 500; ++step) {
    std::vector<std::size_t> rows(64);
    std::uniform_int_distribution<std::size_t> pick(0, train_rows.size() - 1);
    for (std::size_t& r : rows) r = train_rows[pick(shuffle)];
    const Batch batch = make_batch(ds, rows);
    ad::Tape tape;
    const std::vector<ad::Var> params = model.register_parameters(tape);
    const ForwardResult f = model.forward(tape, params, batch);
    width = width && f.engineered.shape() == ad::Shape{64, cfg.h_glb};
    const ad::Gradients g = tape.backward(task_loss(tape, f.output, batch.y, ds.schema.task));
    std::vector<ad::Tensor> grads;
    for (const ad::Var& v : params) grads.push_back(g[v]);
    adam.step(model.parameters(), grads);
  }
  return verdict(invariant && argmax && width,
                 fmt::format("{} non-selected perturbations {}, argmax kept in {}/{} masks {}, predictor width {} over 500 "
                             "steps {}",
                             perturbations, invariant ? "bit-identical" : "CHANGED OUTPUT", argmax_checks, argmax_checks,
                             argmax ? "yes" : "NO", cfg.h_glb, width ? "constant" : "VARIED"));
}

// ---- 3 ---------------------------------------------------------------------

Outcome product_log_recovery() {
  std::vector<double> ratios;
  std::size_t manifest_hits = 0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Dataset ds = synthesize("product+log", 2000, 3, seed);
    split(ds, {}, seed);
    TrainConfig tc;
    tc.seed = seed;
    PipelineConfig pc;
    pc.h = 2;
    pc.instances = 5;
    pc.h_glb = 64;
    Pipeline model(make_layout(ds), pc, fit_statistics(ds), seed);
    train(model, ds, tc);
    PipelineConfig rc = pc;
    rc.raw_features_only = true;
    Pipeline raw(make_layout(ds), rc, fit_statistics(ds), seed);
    train(raw, ds, tc);
    const double ratio = evaluate(model, ds, Split::test) / evaluate(raw, ds, Split::test);
    ratios.push_back(ratio);

    const fs::path dir = scratch(fmt::format("pl{}", seed));
    export_features(model, ds, dir, false);
    const json manifest = json::parse(slurp(dir / "manifest.json"))["features"];
    fs::remove_all(dir);
    double best = 0.0;
    for (std::size_t k = 0; k < std::min<std::size_t>(5, manifest.size()); ++k) {
      if (manifest[k]["kind"] != "MultiplicativeAggregation") continue;
      double w = 0.0;
      for (const json& in : manifest[k]["inputs"]) {
        if (in["feature"] == "x2" || in["feature"] == "x3") w += in["weight"].get<double>();
      }
      best = std::max(best, w);
    }
    manifest_hits += best > 0.6;
    per_seed += fmt::format(" {:.3f}/{:.3f}", ratio, best);
  }
  const double med = median(ratios);
  return verdict(med <= 0.5 && manifest_hits >= 3,
                 fmt::format("median MAE ratio {:.3f} (<= 0.5), top-5 product column with x2+x3 weight > 0.6 in {}/5 seeds; "
                             "ratio/weight per seed:{}",
                             med, manifest_hits, per_seed));
}

// ---- 4 ---------------------------------------------------------------------

Outcome lag_recovery() {
  std::vector<double> weights;
  std::size_t manifest_hits = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Dataset ds = synthesize("lag2", 2000, 2, seed);
    split(ds, {}, seed);
    PipelineConfig pc;
    pc.tabular = {};
    pc.temporal = {TransformKind::temporal_lag};
    TrainConfig tc;
    tc.seed = seed;
    Pipeline model(make_layout(ds), pc, fit_statistics(ds), seed);
    train(model, ds, tc);
    const ad::Tensor& logits = model.parameter("TemporalLag.x1.mask").value;
    weights.push_back(softmax_at(logits, logits.size() - 3));

    const fs::path dir = scratch(fmt::format("lag{}", seed));
    export_features(model, ds, dir, false);
    const json manifest = json::parse(slurp(dir / "manifest.json"))["features"];
    fs::remove_all(dir);
    bool found = false;
    for (const json& e : manifest) found = found || e["provenance"] == "TemporalLag(x1, 2)";
    manifest_hits += found;
  }
  std::string per_seed;
  for (double w : weights) per_seed += fmt::format(" {:.3f}", w);
  const double med = median(weights);
  return verdict(med > 0.8 && manifest_hits >= 3,
                 fmt::format("median weight on offset 2 {:.3f} (needs > 0.8), manifest lists TemporalLag(x1, 2) in {}/5 "
                             "seeds; weights:{}",
                             med, manifest_hits, per_seed));
}

// ---- 5 ---------------------------------------------------------------------

Outcome linear_scaling() {
  BenchConfig bc;
  bc.repeats = 3;
  const BenchReport r = benchmark_scaling(bc);
  const double d = r.features.back().ratio, n = r.rows.back().ratio, k = r.bank.back().ratio;
  const bool ok = d >= 1.6 && d <= 2.6 && n >= 1.6 && n <= 2.6 && k >= 0.4 && k <= 0.75;
  return verdict(ok, fmt::format("d 100->200 ratio {:.3f} [1.6, 2.6], n 1000->2000 ratio {:.3f} [1.6, 2.6], bank "
                                 "full->half ratio {:.3f} [0.4, 0.75]",
                                 d, n, k));
}

// ---- 6 ---------------------------------------------------------------------

Outcome gaussian_demonstrator() {
  const std::vector<std::size_t> K{3, 10};
  bool monotone = true;
  double sin_error = INFINITY;
  std::string medians;
  for (const gauss::Target& t : gauss::corpus()) {
    const gauss::ApproximationReport r = gauss::approximate(t, K, 3.0, 5, 0);
    monotone = monotone && r.medians[1] < r.medians[0];
    if (t.id == "sin") sin_error = r.medians[1];
    medians += fmt::format(" {} {:.4f}->{:.4f}", t.id, r.medians[0], r.medians[1]);
  }
  const gauss::AlgebraReport a = gauss::verify_algebra(0);
  return verdict(sin_error < 0.05 && monotone && a.passed(1e-9),
                 fmt::format("sin K=10 error {:.4f} (< 0.05), median K=3->K=10:{}, product closure error {:.2e}",
                             sin_error, medians, std::max(a.product_error, a.closure_error)));
}

// ---- 7 ---------------------------------------------------------------------

Outcome determinism_and_leakage() {
  const fs::path root = scratch("determinism");
  Dataset ds = synthesize("product+log", 600, 4, 11);
  write_csv(ds, root / "data.csv");
  std::ofstream(root / "schema.json") << schema_to_json(ds.schema);

  auto train_into = [&](const fs::path& data, const std::string& name) {
    std::ostringstream out, err;
    const int code = cli::run({"train", "--data", data.string(), "--schema", (root / "schema.json").string(), "--out",
                               (root / name).string(), "--steps", "300", "--seed", "9"},
                              out, err);
    if (code != cli::ok) throw std::runtime_error(err.str());
  };
  train_into(root / "data.csv", "a");
  train_into(root / "data.csv", "b");
  std::size_t identical = 0, compared = 0;
  for (const char* f : {"report.txt", "curve.csv", "checkpoint.json", "manifest.json", "features.csv",
                        "features_train.csv", "features_validation.csv", "features_test.csv"}) {
    ++compared;
    identical += slurp(root / "a" / f) == slurp(root / "b" / f);
  }

  Dataset perturbed = ds;
  split(perturbed, {}, 9);
  const std::vector<std::size_t> test = perturbed.rows_in(Split::test);
  for (std::size_t r : test) {
    for (std::size_t j = 0; j < perturbed.numeric.cols(); ++j) perturbed.numeric.at(r, j) = 1e3 * (j + 1) + r;
    perturbed.y[r] = -1e3;
  }
  write_csv(perturbed, root / "perturbed.csv");
  train_into(root / "perturbed.csv", "c");
  const json a = json::parse(slurp(root / "a" / "checkpoint.json"));
  const json c = json::parse(slurp(root / "c" / "checkpoint.json"));
  const bool stats_same = a["statistics"] == c["statistics"];
  const bool curve_same = slurp(root / "a" / "curve.csv") == slurp(root / "c" / "curve.csv");
  const bool params_same = a["parameters"] == c["parameters"];
  fs::remove_all(root);
  return verdict(identical == compared && stats_same && curve_same && params_same,
                 fmt::format("{}/{} outputs byte-identical across reruns; after perturbing {} test rows: statistics {}, "
                             "curve {}, parameters {}",
                             identical, compared, test.size(), stats_same ? "unchanged" : "CHANGED",
                             curve_same ? "unchanged" : "CHANGED", params_same ? "unchanged" : "CHANGED"));
}

// ---- 8 ---------------------------------------------------------------------

Outcome diabetes_sanity() {
  const char* path = std::getenv("MASKFE_DIABETES_CSV");
  if (path == nullptr || *path == '\0') return {Status::skip, "set MASKFE_DIABETES_CSV to a 768x9 diabetes CSV to run"};
  const char* target_env = std::getenv("MASKFE_DIABETES_TARGET");
  const std::string target = target_env ? target_env : "Outcome";

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  json cols = json::array();
  std::stringstream hs(header);
  for (std::string name; std::getline(hs, name, ',');) {
    if (name != target) cols.push_back({{"name", name}, {"kind", "numerical"}});
  }
  const Schema schema = parse_schema(json{{"columns", cols}, {"target", target}, {"task", "classification"}}.dump());
  const Dataset base = load_csv(path, schema);

  std::vector<double> engineered, raw;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Dataset ds = base;
    split(ds, {}, seed);
    TrainConfig tc;
    tc.seed = seed;
    PipelineConfig pc;
    Pipeline model(make_layout(ds), pc, fit_statistics(ds), seed);
    train(model, ds, tc);
    pc.raw_features_only = true;
    Pipeline baseline(make_layout(ds), pc, fit_statistics(ds), seed);
    train(baseline, ds, tc);
    engineered.push_back(evaluate(model, ds, Split::test));
    raw.push_back(evaluate(baseline, ds, Split::test));
  }
  double e = 0, r = 0;
  for (std::size_t i = 0; i < engineered.size(); ++i) {
    e += engineered[i] / 10;
    r += raw[i] / 10;
  }
  return verdict(e >= r - 1.0, fmt::format("ten-trial mean accuracy engineered {:.2f} vs raw {:.2f} (needs >= raw - 1)", e, r));
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  retain_heap_memory();
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  app.add_option("--criterion", only, "criteria to run (default all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "gradient fidelity", gradient_fidelity},
      {2, "mask semantics", mask_semantics},
      {3, "synthetic recovery (product+log)", product_log_recovery},
      {4, "temporal recovery (lag2)", lag_recovery},
      {5, "linear scaling", linear_scaling},
      {6, "gaussian demonstrator", gaussian_demonstrator},
      {7, "determinism and leakage", determinism_and_leakage},
      {8, "diabetes sanity", diabetes_sanity},
  };
  std::size_t failed = 0, skipped = 0, ran = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::fail, fmt::format("threw: {}", e.what())};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    failed += o.status == Status::fail;
    skipped += o.status == Status::skip;
    std::cout << fmt::format("{} criterion {} {}: {} [{:.1f}s]", tag, c.id, c.name, o.detail, seconds) << std::endl;
  }
  if (failed > 0) return 1;
  return ran > 0 && skipped == ran ? 77 : 0;
}
