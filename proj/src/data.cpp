#include "maskfe/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "maskfe/error.hpp"

namespace maskfe {

using json = nlohmann::json;

std::string_view task_name(TaskType task) { return task == TaskType::classification ? "classification" : "regression"; }

std::string_view split_name(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::validation:
      return "validation";
    case Split::test:
      return "test";
  }
  return "train";
}

namespace {

std::string_view kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::numerical:
      return "numerical";
    case FeatureKind::categorical:
      return "categorical";
    case FeatureKind::temporal:
      return "temporal";
  }
  return "numerical";
}

FeatureKind parse_kind(const std::string& s) {
  if (s == "numerical") return FeatureKind::numerical;
  if (s == "categorical") return FeatureKind::categorical;
  if (s == "temporal") return FeatureKind::temporal;
  throw DataError(fmt::format("schema: unknown column kind '{}'", s));
}

}  // namespace

void Schema::validate() const {
  std::set<std::string> names;
  for (const ColumnSpec& c : columns) {
    if (c.name.empty()) throw DataError("schema: empty column name");
    if (!names.insert(c.name).second) throw DataError(fmt::format("schema: duplicate column '{}'", c.name));
    if (c.kind == FeatureKind::temporal && c.lookback < 2) {
      throw DataError(fmt::format("schema: temporal column '{}' needs lookback >= 2", c.name));
    }
  }
  if (target.empty()) throw DataError("schema: missing target");
  if (names.contains(target)) throw DataError(fmt::format("schema: target '{}' is also listed as a feature", target));
}

std::size_t Schema::count(FeatureKind kind) const {
  return static_cast<std::size_t>(std::count_if(columns.begin(), columns.end(), [kind](const ColumnSpec& c) { return c.kind == kind; }));
}

Schema parse_schema(std::string_view json_text) {
  Schema schema;
  try {
    const json doc = json::parse(json_text);
    for (const json& c : doc.at("columns")) {
      ColumnSpec spec;
      spec.name = c.at("name").get<std::string>();
      spec.kind = parse_kind(c.at("kind").get<std::string>());
      if (c.contains("lookback")) spec.lookback = c.at("lookback").get<std::size_t>();
      schema.columns.push_back(std::move(spec));
    }
    schema.target = doc.at("target").get<std::string>();
    const std::string task = doc.at("task").get<std::string>();
    if (task == "classification") {
      schema.task = TaskType::classification;
    } else if (task == "regression") {
      schema.task = TaskType::regression;
    } else {
      throw DataError(fmt::format("schema: unknown task '{}'", task));
    }
  } catch (const json::exception& e) {
    throw DataError(fmt::format("schema: {}", e.what()));
  }
  schema.validate();
  return schema;
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open schema file '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schema(ss.str());
}

std::string schema_to_json(const Schema& schema) {
  json doc;
  doc["columns"] = json::array();
  for (const ColumnSpec& c : schema.columns) {
    json col{{"name", c.name}, {"kind", kind_name(c.kind)}};
    if (c.kind == FeatureKind::temporal) col["lookback"] = c.lookback;
    doc["columns"].push_back(std::move(col));
  }
  doc["target"] = schema.target;
  doc["task"] = task_name(schema.task);
  return doc.dump();
}

std::uint64_t schema_hash(const Schema& schema) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : schema_to_json(schema)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::size_t> Dataset::rows_in(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(i);
  return out;
}

CodeTables code_tables(const Dataset& dataset) {
  CodeTables t;
  for (const CategoricalColumn& c : dataset.categorical) {
    t.categorical_levels.push_back(c.levels);
    t.training_levels.push_back(c.training_levels);
  }
  t.class_labels = dataset.class_labels;
  return t;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

Dataset parse_csv(std::string_view text, const Schema& schema, const CodeTables* reference, bool require_target,
                  std::string_view source) {
  schema.validate();
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos <= text.size();) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw DataError(fmt::format("{}: missing header row", source));

  const std::vector<std::string> header = split_csv_line(lines[0]);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index.emplace(std::string(trim(header[i])), i);
  auto locate = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
  };

  Dataset ds;
  ds.schema = schema;
  std::vector<std::size_t> numeric_idx, cat_idx, temporal_idx;
  for (const ColumnSpec& c : schema.columns) {
    const auto at = locate(c.name);
    if (!at) throw DataError(fmt::format("{}: missing column '{}'", source, c.name));
    switch (c.kind) {
      case FeatureKind::numerical:
        numeric_idx.push_back(*at);
        ds.numeric_names.push_back(c.name);
        break;
      case FeatureKind::categorical:
        cat_idx.push_back(*at);
        ds.categorical.push_back(CategoricalColumn{c.name, {}, {}, 0});
        break;
      case FeatureKind::temporal:
        temporal_idx.push_back(*at);
        ds.temporal.push_back(TemporalColumn{c.name, c.lookback, {}});
        break;
    }
  }
  const auto target_idx = locate(schema.target);
  if (!target_idx && require_target) throw DataError(fmt::format("{}: missing target column '{}'", source, schema.target));
  ds.has_target = target_idx.has_value();

  if (reference != nullptr) {
    if (reference->categorical_levels.size() != ds.categorical.size()) {
      throw DataError(fmt::format("{}: code tables cover {} categorical columns, schema has {}", source,
                                  reference->categorical_levels.size(), ds.categorical.size()));
    }
    for (std::size_t c = 0; c < ds.categorical.size(); ++c) {
      ds.categorical[c].levels = reference->categorical_levels[c];
      ds.categorical[c].training_levels = reference->training_levels[c];
    }
  }
  std::vector<std::unordered_map<std::string, std::size_t>> level_maps(ds.categorical.size());
  for (std::size_t c = 0; c < ds.categorical.size(); ++c)
    for (std::size_t l = 0; l < ds.categorical[c].levels.size(); ++l) level_maps[c].emplace(ds.categorical[c].levels[l], l);

  const std::size_t n = lines.size() - 1;
  std::vector<double> numeric;
  numeric.reserve(n * numeric_idx.size());
  std::vector<std::vector<double>> windows(temporal_idx.size());
  std::vector<std::string> raw_labels;

  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t line_no = r + 2;
    const std::vector<std::string> fields = split_csv_line(lines[r + 1]);
    if (fields.size() != header.size()) {
      throw DataError(fmt::format("{}: line {}: expected {} fields, got {}", source, line_no, header.size(), fields.size()));
    }
    for (std::size_t j = 0; j < numeric_idx.size(); ++j) {
      const auto v = parse_double(fields[numeric_idx[j]]);
      if (!v) {
        throw DataError(fmt::format("{}: line {}, column '{}': non-numeric value '{}'", source, line_no, ds.numeric_names[j],
                                    fields[numeric_idx[j]]));
      }
      numeric.push_back(*v);
    }
    for (std::size_t c = 0; c < cat_idx.size(); ++c) {
      const std::string level(trim(fields[cat_idx[c]]));
      if (level.empty()) {
        throw DataError(fmt::format("{}: line {}, column '{}': missing value", source, line_no, ds.categorical[c].name));
      }
      auto [it, inserted] = level_maps[c].emplace(level, ds.categorical[c].levels.size());
      if (inserted) ds.categorical[c].levels.push_back(level);
      ds.categorical[c].codes.push_back(it->second);
    }
    for (std::size_t t = 0; t < temporal_idx.size(); ++t) {
      const std::string& cell = fields[temporal_idx[t]];
      std::size_t count = 0;
      std::size_t pos = 0;
      while (true) {
        const std::size_t end = std::min(cell.find(';', pos), cell.size());
        const auto v = parse_double(std::string_view(cell).substr(pos, end - pos));
        if (!v) {
          throw DataError(fmt::format("{}: line {}, column '{}': non-numeric window entry in '{}'", source, line_no,
                                      ds.temporal[t].name, cell));
        }
        windows[t].push_back(*v);
        ++count;
        if (end == cell.size()) break;
        pos = end + 1;
      }
      if (count != ds.temporal[t].lookback) {
        throw DataError(fmt::format("{}: line {}, column '{}': window has {} values, expected {}", source, line_no,
                                    ds.temporal[t].name, count, ds.temporal[t].lookback));
      }
    }
    if (target_idx) {
      const std::string& cell = fields[*target_idx];
      if (schema.task == TaskType::regression) {
        const auto v = parse_double(cell);
        if (!v) {
          throw DataError(fmt::format("{}: line {}, target '{}': non-numeric value '{}'", source, line_no, schema.target, cell));
        }
        ds.y.push_back(*v);
      } else {
        const std::string label(trim(cell));
        if (label.empty()) throw DataError(fmt::format("{}: line {}, target '{}': missing label", source, line_no, schema.target));
        raw_labels.push_back(label);
      }
    }
  }

  ds.numeric = ad::Tensor::matrix(n, numeric_idx.size(), std::move(numeric));
  for (std::size_t t = 0; t < temporal_idx.size(); ++t) {
    ds.temporal[t].windows = ad::Tensor::matrix(n, ds.temporal[t].lookback, std::move(windows[t]));
  }
  if (reference == nullptr) {
    for (CategoricalColumn& c : ds.categorical) c.training_levels = c.levels.size();
  }

  if (schema.task == TaskType::classification) {
    if (reference != nullptr) {
      ds.class_labels = reference->class_labels;
    } else {
      std::vector<std::string> uniq(raw_labels.begin(), raw_labels.end());
      std::sort(uniq.begin(), uniq.end());
      uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
      const bool numeric_labels = std::all_of(uniq.begin(), uniq.end(), [](const std::string& s) { return parse_double(s).has_value(); });
      if (numeric_labels) {
        std::sort(uniq.begin(), uniq.end(), [](const std::string& a, const std::string& b) { return *parse_double(a) < *parse_double(b); });
      }
      ds.class_labels = std::move(uniq);
    }
    std::unordered_map<std::string, std::size_t> class_code;
    for (std::size_t i = 0; i < ds.class_labels.size(); ++i) class_code.emplace(ds.class_labels[i], i);
    for (std::size_t r = 0; r < raw_labels.size(); ++r) {
      auto it = class_code.find(raw_labels[r]);
      if (it == class_code.end()) {
        throw DataError(fmt::format("{}: line {}: unknown class label '{}'", source, r + 2, raw_labels[r]));
      }
      ds.y.push_back(static_cast<double>(it->second));
    }
  }
  ds.split.assign(n, Split::train);
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, const CodeTables* reference, bool require_target) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open data file '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), schema, reference, require_target, path.string());
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  std::vector<std::string> head;
  for (const ColumnSpec& c : ds.schema.columns) head.push_back(quote_if_needed(c.name));
  if (ds.has_target) head.push_back(quote_if_needed(ds.schema.target));
  out << fmt::format("{}\n", fmt::join(head, ","));
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    std::size_t ni = 0, ci = 0, ti = 0;
    std::vector<std::string> cells;
    for (const ColumnSpec& c : ds.schema.columns) {
      switch (c.kind) {
        case FeatureKind::numerical:
          cells.push_back(number(ds.numeric.at(r, ni++)));
          break;
        case FeatureKind::categorical: {
          const CategoricalColumn& col = ds.categorical[ci++];
          cells.push_back(quote_if_needed(col.levels[col.codes[r]]));
          break;
        }
        case FeatureKind::temporal: {
          const TemporalColumn& col = ds.temporal[ti++];
          std::vector<std::string> steps;
          for (std::size_t t = 0; t < col.lookback; ++t) steps.push_back(number(col.windows.at(r, t)));
          cells.push_back(fmt::format("{}", fmt::join(steps, ";")));
          break;
        }
      }
    }
    if (ds.has_target) {
      cells.push_back(ds.schema.task == TaskType::classification
                          ? quote_if_needed(ds.class_labels[static_cast<std::size_t>(ds.y[r])])
                          : number(ds.y[r]));
    }
    out << fmt::format("{}\n", fmt::join(cells, ","));
  }
}

// ---------------------------------------------------------------------------
// splitting

namespace {

void recode_by_training(Dataset& ds) {
  for (CategoricalColumn& col : ds.categorical) {
    std::vector<std::size_t> remap(col.levels.size(), SIZE_MAX);
    std::vector<std::string> levels;
    auto visit = [&](bool training) {
      for (std::size_t r = 0; r < ds.rows(); ++r) {
        if ((ds.split[r] == Split::train) != training) continue;
        const std::size_t old = col.codes[r];
        if (remap[old] == SIZE_MAX) {
          remap[old] = levels.size();
          levels.push_back(col.levels[old]);
        }
      }
    };
    visit(true);
    col.training_levels = levels.size();
    visit(false);
    // Levels that occur in no row keep a code after all observed ones.
    for (std::size_t old = 0; old < remap.size(); ++old) {
      if (remap[old] == SIZE_MAX) {
        remap[old] = levels.size();
        levels.push_back(col.levels[old]);
      }
    }
    for (std::size_t& c : col.codes) c = remap[c];
    col.levels = std::move(levels);
  }
}

void assign(std::vector<std::size_t>& idx, const SplitFractions& f, std::mt19937_64& rng, std::vector<Split>& tags) {
  std::shuffle(idx.begin(), idx.end(), rng);
  const double m = static_cast<double>(idx.size());
  const auto n_train = std::min(idx.size(), static_cast<std::size_t>(std::llround(f.train * m)));
  const auto n_val = std::min(idx.size() - n_train, static_cast<std::size_t>(std::llround(f.validation * m)));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    tags[idx[i]] = i < n_train ? Split::train : (i < n_train + n_val ? Split::validation : Split::test);
  }
}

}  // namespace

void split(Dataset& ds, const SplitFractions& f, std::uint64_t seed, bool recode) {
  const double total = f.train + f.validation + f.test;
  if (!(f.train > 0.0) || f.validation < 0.0 || f.test < 0.0 || std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument(
        fmt::format("split: fractions ({}, {}, {}) must be non-negative, sum to 1, train > 0", f.train, f.validation, f.test));
  }
  std::mt19937_64 rng(seed);
  ds.split.assign(ds.rows(), Split::train);
  if (ds.schema.task == TaskType::classification && ds.has_target) {
    std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
    for (std::size_t r = 0; r < ds.rows(); ++r) by_class[static_cast<std::size_t>(ds.y[r])].push_back(r);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      if (by_class[c].empty()) continue;
      assign(by_class[c], f, rng, ds.split);
      const bool has_train = std::any_of(by_class[c].begin(), by_class[c].end(), [&](std::size_t r) { return ds.split[r] == Split::train; });
      if (!has_train) throw DataError(fmt::format("split: class '{}' has no training rows", ds.class_labels[c]));
    }
  } else {
    std::vector<std::size_t> idx(ds.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    assign(idx, f, rng, ds.split);
  }
  if (recode) recode_by_training(ds);
}

// ---------------------------------------------------------------------------
// pool and statistics

std::vector<std::string> pool_names(const Dataset& ds) {
  std::vector<std::string> names = ds.numeric_names;
  for (const TemporalColumn& t : ds.temporal) names.push_back(t.name);
  return names;
}

ad::Tensor pool_matrix(const Dataset& ds, std::span<const std::size_t> rows) {
  const std::size_t dn = ds.numeric_names.size();
  const std::size_t width = dn + ds.temporal.size();
  ad::Tensor out = ad::Tensor::zeros({rows.size(), width});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    for (std::size_t j = 0; j < dn; ++j) out[i * width + j] = ds.numeric.at(r, j);
    for (std::size_t t = 0; t < ds.temporal.size(); ++t) {
      out[i * width + dn + t] = ds.temporal[t].windows.at(r, ds.temporal[t].lookback - 1);
    }
  }
  return out;
}

ad::Tensor categorical_scaled(const Dataset& ds, std::span<const std::size_t> rows) {
  const std::size_t width = ds.categorical.size();
  ad::Tensor out = ad::Tensor::zeros({rows.size(), width});
  for (std::size_t c = 0; c < width; ++c) {
    const CategoricalColumn& col = ds.categorical[c];
    const double denom = col.training_levels > 1 ? static_cast<double>(col.training_levels - 1) : 1.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::size_t code = col.codes[rows[i]];
      out[i * width + c] = code < col.training_levels ? static_cast<double>(code) / denom : 0.0;
    }
  }
  return out;
}

FittedStatistics fit_statistics(const Dataset& ds) {
  const std::vector<std::size_t> train = ds.rows_in(Split::train);
  if (train.empty()) throw DataError("fit_statistics: empty training split");
  FittedStatistics stats;
  const ad::Tensor pool = pool_matrix(ds, train);
  const std::size_t width = pool.cols();
  std::vector<double> column(train.size());
  for (std::size_t j = 0; j < width; ++j) {
    for (std::size_t i = 0; i < train.size(); ++i) column[i] = pool[i * width + j];
    stats.quantile_cuts.push_back(transforms::fit_quantile_cuts(column));
  }
  std::vector<std::size_t> local(train.size());
  std::iota(local.begin(), local.end(), std::size_t{0});
  for (const CategoricalColumn& col : ds.categorical) {
    std::vector<std::size_t> codes(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) codes[i] = col.codes[train[i]];
    stats.group_means.push_back(transforms::fit_group_means(codes, col.levels.size(), pool.values(), width, local));
  }
  return stats;
}

// ---------------------------------------------------------------------------
// synthetic

Dataset synthesize(std::string_view generator, std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.split.assign(n, Split::train);

  auto numeric_features = [&](std::size_t count) {
    for (std::size_t j = 0; j < count; ++j) {
      const std::string name = fmt::format("x{}", j + 1);
      ds.schema.columns.push_back(ColumnSpec{name, FeatureKind::numerical, 0});
      ds.numeric_names.push_back(name);
    }
    std::vector<double> v(n * count);
    for (double& x : v) x = normal(rng);
    ds.numeric = ad::Tensor::matrix(n, count, std::move(v));
  };

  if (generator == "product+log") {
    if (d < 3) throw std::invalid_argument("synthesize: product+log needs d >= 3");
    numeric_features(d);
    ds.schema.target = "y";
    ds.schema.task = TaskType::regression;
    std::normal_distribution<double> noise(0.0, 0.01);
    for (std::size_t r = 0; r < n; ++r) {
      const double x1 = ds.numeric.at(r, 0), x2 = ds.numeric.at(r, 1), x3 = ds.numeric.at(r, 2);
      ds.y.push_back(x2 * x3 + std::log(std::abs(x1)) + noise(rng));
    }
  } else if (generator == "lag2") {
    if (d < 1) throw std::invalid_argument("synthesize: lag2 needs d >= 1");
    constexpr std::size_t L = 8;
    ds.numeric = ad::Tensor::matrix(n, 0, {});
    for (std::size_t f = 0; f < d; ++f) {
      const std::string name = fmt::format("x{}", f + 1);
      ds.schema.columns.push_back(ColumnSpec{name, FeatureKind::temporal, L});
      std::vector<double> series(n + L - 1);
      for (double& v : series) v = normal(rng);
      std::vector<double> w(n * L);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t t = 0; t < L; ++t) w[r * L + t] = series[r + t];
      ds.temporal.push_back(TemporalColumn{name, L, ad::Tensor::matrix(n, L, std::move(w))});
    }
    ds.schema.target = "y";
    ds.schema.task = TaskType::regression;
    for (std::size_t r = 0; r < n; ++r) ds.y.push_back(ds.temporal[0].windows.at(r, L - 3));
  } else if (generator == "scaling") {
    if (d < 1) throw std::invalid_argument("synthesize: scaling needs d >= 1");
    numeric_features(d);
    ds.schema.target = "y";
    ds.schema.task = TaskType::regression;
    std::normal_distribution<double> noise(0.0, 0.1);
    const double norm = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t r = 0; r < n; ++r) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += ds.numeric.at(r, j);
      ds.y.push_back(acc * norm + noise(rng));
    }
  } else if (generator == "sign-product") {
    if (d < 2) throw std::invalid_argument("synthesize: sign-product needs d >= 2");
    numeric_features(d);
    ds.schema.target = "label";
    ds.schema.task = TaskType::classification;
    ds.class_labels = {"0", "1"};
    for (std::size_t r = 0; r < n; ++r) ds.y.push_back(ds.numeric.at(r, 0) * ds.numeric.at(r, 1) > 0 ? 1.0 : 0.0);
  } else {
    throw std::invalid_argument(fmt::format("synthesize: unknown generator '{}'", generator));
  }
  ds.schema.validate();
  return ds;
}

}  // namespace maskfe
