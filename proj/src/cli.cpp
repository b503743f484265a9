#include "maskfe/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "maskfe/benchmark.hpp"
#include "maskfe/checkpoint.hpp"
#include "maskfe/error.hpp"
#include "maskfe/export.hpp"
#include "maskfe/gaussian_approx.hpp"
#include "maskfe/parallel.hpp"
#include "maskfe/trainer.hpp"

namespace maskfe::cli {

namespace {

namespace fs = std::filesystem;

struct TrainOptions {
  std::string data, schema, out;
  TrainConfig train;
  PipelineConfig pipeline;
  std::vector<double> fractions{0.8, 0.1, 0.1};
};

void add_train_flags(CLI::App* app, TrainOptions& o) {
  app->set_help_flag("--help", "Print this help message and exit");
  app->add_option("--data", o.data, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  app->add_option("--schema", o.schema, "JSON schema")->required()->check(CLI::ExistingFile);
  app->add_option("--out", o.out, "output directory")->required();
  app->add_option("--steps", o.train.steps, "training steps")->capture_default_str();
  app->add_option("--batch", o.train.batch, "minibatch size")->capture_default_str();
  app->add_option("--lr", o.train.lr, "learning rate")->capture_default_str();
  app->add_option("--seed", o.train.seed, "seed for splits, initialization and shuffling")->capture_default_str();
  app->add_option("--h", o.pipeline.h, "features kept by each local mask")->capture_default_str();
  app->add_option("--h-glb", o.pipeline.h_glb, "columns kept by the global mask")->capture_default_str();
  app->add_option("--hidden", o.pipeline.hidden, "MLP hidden width")->capture_default_str();
  app->add_option("--instances", o.pipeline.instances, "copies of each tabular transform")->capture_default_str();
  app->add_option("--eval-interval", o.train.eval_interval, "steps between validation checks")->capture_default_str();
  app->add_option("--patience", o.train.patience, "validation checks without improvement before stopping")
      ->capture_default_str();
  app->add_option("--split", o.fractions, "train,validation,test fractions")->delimiter(',')->expected(3)->capture_default_str();
}

SplitFractions fractions_of(const TrainOptions& o) { return SplitFractions{o.fractions[0], o.fractions[1], o.fractions[2]}; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

const char* metric_label(TaskType task) { return task == TaskType::classification ? "accuracy" : "mae"; }

struct Trained {
  Dataset dataset;
  Pipeline model;
  TrainReport report;
};

Trained fit(const TrainOptions& o, const Schema& schema, std::uint64_t seed, bool raw) {
  Dataset ds = load_csv(o.data, schema);
  split(ds, fractions_of(o), seed);
  PipelineConfig pc = o.pipeline;
  pc.raw_features_only = raw;
  Pipeline model(make_layout(ds), pc, fit_statistics(ds), seed);
  TrainConfig tc = o.train;
  tc.seed = seed;
  TrainReport report = train(model, ds, tc);
  return Trained{std::move(ds), std::move(model), std::move(report)};
}

int cmd_train(const TrainOptions& o, std::ostream& out) {
  const Schema schema = load_schema(o.schema);
  Trained t = fit(o, schema, o.train.seed, false);
  const fs::path dir = o.out;
  fs::create_directories(dir);

  std::string text = report_text(t.report, schema.task);
  if (!t.dataset.rows_in(Split::test).empty()) {
    text += fmt::format("test_{} {:.17g}\n", metric_label(schema.task), evaluate(t.model, t.dataset, Split::test));
  }
  write_text(dir / "report.txt", text);
  write_text(dir / "curve.csv", curve_csv(t.report));
  std::string timing = "epoch,seconds\n";
  for (std::size_t e = 0; e < t.report.epoch_seconds.size(); ++e) timing += fmt::format("{},{:.6f}\n", e + 1, t.report.epoch_seconds[e]);
  write_text(dir / "timing.txt", timing);

  const TrainedModel saved{schema, code_tables(t.dataset), o.train, fractions_of(o), t.model};
  save_checkpoint(dir / "checkpoint.json", saved);
  export_features(t.model, t.dataset, dir, true);
  out << text;
  return ok;
}

int cmd_apply(const std::string& checkpoint, const std::string& data, const std::string& dir, bool per_split,
              std::ostream& out) {
  const TrainedModel m = load_checkpoint(checkpoint);
  Dataset ds = load_csv(data, m.schema, &m.codes, per_split);
  if (per_split) split(ds, m.fractions, m.train.seed, false);
  export_features(m.model, ds, dir, per_split);
  out << fmt::format("wrote {} rows x {} engineered columns to {}\n", ds.rows(), m.model.engineered_width(), dir);
  return ok;
}

int cmd_bench(const BenchConfig& bc, const std::string& dir, std::ostream& out) {
  const std::string table = bench_table(benchmark_scaling(bc));
  if (!dir.empty()) {
    fs::create_directories(dir);
    write_text(fs::path(dir) / "bench.csv", table);
  }
  out << table;
  return ok;
}

struct GaussOptions {
  std::string target = "sin";
  std::vector<std::size_t> K{3, 10};
  double N = 3.0;
  std::size_t seeds = 5;
  std::uint64_t seed = 0;
  gauss::FitConfig fit;
  std::string out;
};

int cmd_gauss(const GaussOptions& o, std::ostream& out) {
  std::vector<gauss::ApproximationReport> reports;
  if (o.target == "all") {
    for (const gauss::Target& t : gauss::corpus()) reports.push_back(gauss::approximate(t, o.K, o.N, o.seeds, o.seed, o.fit));
  } else {
    reports.push_back(gauss::approximate(gauss::find_target(o.target), o.K, o.N, o.seeds, o.seed, o.fit));
  }
  const gauss::AlgebraReport a = gauss::verify_algebra(o.seed);
  const std::string csv = gauss::report_csv(reports);
  const std::string algebra =
      fmt::format("trials {}\nproduct_max_error {:.3e}\nclosure_max_error {:.3e}\nseparation {}\nnowhere_zero {}\nresult {}\n",
                  a.trials, a.product_error, a.closure_error, a.separates ? "pass" : "fail", a.positive ? "pass" : "fail",
                  a.passed() ? "pass" : "fail");
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "gauss_report.csv", csv);
    write_text(fs::path(o.out) / "algebra.txt", algebra);
  }
  out << csv << algebra;
  return a.passed() ? ok : numeric;
}

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

int cmd_sweep(const TrainOptions& o, std::size_t trials, std::ostream& out) {
  if (trials == 0) throw std::invalid_argument("seed-sweep: --trials must be positive");
  const Schema schema = load_schema(o.schema);
  std::vector<double> engineered, raw;
  std::string csv = fmt::format("trial,seed,engineered_{0},raw_{0}\n", metric_label(schema.task));
  for (std::size_t i = 0; i < trials; ++i) {
    const std::uint64_t seed = o.train.seed + i;
    const Trained e = fit(o, schema, seed, false);
    const Trained r = fit(o, schema, seed, true);
    engineered.push_back(evaluate(e.model, e.dataset, Split::test));
    raw.push_back(evaluate(r.model, r.dataset, Split::test));
    csv += fmt::format("{},{},{:.17g},{:.17g}\n", i + 1, seed, engineered.back(), raw.back());
  }
  const auto [em, es] = mean_sd(engineered);
  const auto [rm, rs] = mean_sd(raw);
  const std::string summary = fmt::format("trials {}\nengineered_{} {:.4f} +- {:.4f}\nraw_{} {:.4f} +- {:.4f}\n", trials,
                                          metric_label(schema.task), em, es, metric_label(schema.task), rm, rs);
  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "sweep.csv", csv);
  write_text(fs::path(o.out) / "summary.txt", summary);
  out << summary;
  return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentiable feature engineering for tabular and time-series data", "maskfe"};
  app.require_subcommand(1);

  TrainOptions train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "train a pipeline and write checkpoint, report and features");
  add_train_flags(train_cmd, train_opts);

  std::string ckpt, data, out_dir;
  CLI::App* apply_cmd = app.add_subcommand("apply", "engineer features for a CSV with a trained checkpoint");
  apply_cmd->add_option("--checkpoint", ckpt)->required()->check(CLI::ExistingFile);
  apply_cmd->add_option("--data", data)->required()->check(CLI::ExistingFile);
  apply_cmd->add_option("--out", out_dir)->required();

  CLI::App* export_cmd = app.add_subcommand("export", "re-export per-split features of the training file");
  export_cmd->add_option("--checkpoint", ckpt)->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--data", data)->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--out", out_dir)->required();

  BenchConfig bench;
  std::string bench_out;
  CLI::App* bench_cmd = app.add_subcommand("bench", "time training epochs across feature counts, rows and bank sizes");
  bench_cmd->add_option("--sizes", bench.sizes, "feature counts")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--rows", bench.rows)->capture_default_str();
  bench_cmd->add_option("--epochs", bench.epochs)->capture_default_str();
  bench_cmd->add_option("--batch", bench.batch)->capture_default_str();
  bench_cmd->add_option("--repeats", bench.repeats)->capture_default_str();
  bench_cmd->add_option("--hidden", bench.hidden)->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed)->capture_default_str();
  bench_cmd->add_option("--out", bench_out, "directory for bench.csv");

  GaussOptions gauss_opts;
  CLI::App* gauss_cmd = app.add_subcommand("gauss-demo", "fit Gaussian sums to a target and check product closure");
  gauss_cmd->add_option("--target", gauss_opts.target, "sin, abs, step, ripple or all")->capture_default_str();
  gauss_cmd->add_option("--K", gauss_opts.K, "component counts")->delimiter(',')->capture_default_str();
  gauss_cmd->add_option("--N", gauss_opts.N, "domain half-width")->capture_default_str();
  gauss_cmd->add_option("--seeds", gauss_opts.seeds)->capture_default_str();
  gauss_cmd->add_option("--seed", gauss_opts.seed)->capture_default_str();
  gauss_cmd->add_option("--iterations", gauss_opts.fit.iterations)->capture_default_str();
  gauss_cmd->add_option("--resolution", gauss_opts.fit.resolution)->capture_default_str();
  gauss_cmd->add_option("--lr", gauss_opts.fit.lr)->capture_default_str();
  gauss_cmd->add_option("--out", gauss_opts.out);

  TrainOptions sweep_opts;
  std::size_t trials = 10;
  CLI::App* sweep_cmd = app.add_subcommand("seed-sweep", "repeat training over consecutive seeds, engineered vs raw features");
  add_train_flags(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--trials", trials)->capture_default_str();

  std::vector<std::string> storage{"maskfe"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n";
    const std::vector<CLI::App*> chosen = app.get_subcommands();
    err << (chosen.empty() ? app.help() : chosen.front()->help());
    return usage;
  }

  try {
    if (*train_cmd) return cmd_train(train_opts, out);
    if (*apply_cmd) return cmd_apply(ckpt, data, out_dir, false, out);
    if (*export_cmd) return cmd_apply(ckpt, data, out_dir, true, out);
    if (*bench_cmd) return cmd_bench(bench, bench_out, out);
    if (*gauss_cmd) return cmd_gauss(gauss_opts, out);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, trials, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return numeric;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return data_error;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return data_error;
  }
  return usage;
}

int run(int argc, char** argv) {
  retain_heap_memory();
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace maskfe::cli
