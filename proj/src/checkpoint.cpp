#include "maskfe/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "maskfe/error.hpp"

namespace maskfe {

using json = nlohmann::json;

namespace {

std::string hash_text(const Schema& s) { return fmt::format("{:016x}", schema_hash(s)); }

json kinds_json(const std::vector<TransformKind>& kinds) {
  json out = json::array();
  for (TransformKind k : kinds) out.push_back(std::string(transform_name(k)));
  return out;
}

std::vector<TransformKind> kinds_from(const json& j) {
  std::vector<TransformKind> out;
  for (const json& name : j) {
    const auto k = parse_transform_kind(name.get<std::string>());
    if (!k) throw DataError(fmt::format("checkpoint: unknown transform '{}'", name.get<std::string>()));
    out.push_back(*k);
  }
  return out;
}

json tensor_json(const ad::Tensor& t) { return json{{"shape", t.shape()}, {"values", t.values()}}; }

ad::Tensor tensor_from(const json& j) {
  return ad::Tensor(j.at("shape").get<ad::Shape>(), j.at("values").get<std::vector<double>>());
}

}  // namespace

std::string checkpoint_json(const TrainedModel& t) {
  const Pipeline& m = t.model;
  const PipelineConfig& pc = m.config();
  json doc;
  doc["version"] = kCheckpointVersion;
  doc["schema"] = json::parse(schema_to_json(t.schema));
  doc["schema_hash"] = hash_text(t.schema);
  doc["codes"] = {{"categorical_levels", t.codes.categorical_levels},
                  {"training_levels", t.codes.training_levels},
                  {"class_labels", t.codes.class_labels}};
  doc["pipeline"] = {{"h", pc.h},
                     {"h_glb", pc.h_glb},
                     {"h_temporal", pc.h_temporal},
                     {"hidden", pc.hidden},
                     {"instances", pc.instances},
                     {"tabular", kinds_json(pc.tabular)},
                     {"temporal", kinds_json(pc.temporal)},
                     {"raw_features_only", pc.raw_features_only}};
  doc["train"] = {{"steps", t.train.steps},
                  {"batch", t.train.batch},
                  {"lr", t.train.lr},
                  {"seed", t.train.seed},
                  {"eval_interval", t.train.eval_interval},
                  {"patience", t.train.patience},
                  {"fractions", {t.fractions.train, t.fractions.validation, t.fractions.test}}};
  json cuts = json::array();
  for (const auto& q : m.statistics().quantile_cuts) cuts.push_back(q.cuts);
  json groups = json::array();
  for (const auto& g : m.statistics().group_means) {
    std::vector<int> seen(g.seen.begin(), g.seen.end());
    groups.push_back({{"levels", g.levels}, {"columns", g.columns}, {"means", g.means}, {"seen", seen}, {"global", g.global}});
  }
  doc["statistics"] = {{"quantile_cuts", cuts}, {"group_means", groups}};
  json params = json::array();
  for (const Parameter& p : m.parameters()) {
    json e = tensor_json(p.value);
    e["name"] = p.name;
    params.push_back(std::move(e));
  }
  doc["parameters"] = std::move(params);
  return doc.dump(1);
}

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& trained) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write checkpoint '{}'", path.string()));
  out << checkpoint_json(trained) << '\n';
}

TrainedModel parse_checkpoint(std::string_view text, const Schema* expected) {
  try {
    const json doc = json::parse(text);
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw DataError(fmt::format("checkpoint: unsupported version {}", doc.at("version").get<int>()));
    }
    Schema schema = parse_schema(doc.at("schema").dump());
    const std::string stored = doc.at("schema_hash").get<std::string>();
    if (stored != hash_text(schema)) throw DataError("checkpoint: schema hash does not match the stored schema");
    if (expected != nullptr && hash_text(*expected) != stored) {
      throw DataError(fmt::format("checkpoint: schema hash {} does not match the given schema ({})", stored, hash_text(*expected)));
    }

    CodeTables codes;
    const json& c = doc.at("codes");
    codes.categorical_levels = c.at("categorical_levels").get<std::vector<std::vector<std::string>>>();
    codes.training_levels = c.at("training_levels").get<std::vector<std::size_t>>();
    codes.class_labels = c.at("class_labels").get<std::vector<std::string>>();

    PipelineConfig pc;
    const json& p = doc.at("pipeline");
    pc.h = p.at("h").get<std::size_t>();
    pc.h_glb = p.at("h_glb").get<std::size_t>();
    pc.h_temporal = p.at("h_temporal").get<std::size_t>();
    pc.hidden = p.at("hidden").get<std::size_t>();
    pc.instances = p.at("instances").get<std::size_t>();
    pc.tabular = kinds_from(p.at("tabular"));
    pc.temporal = kinds_from(p.at("temporal"));
    pc.raw_features_only = p.at("raw_features_only").get<bool>();

    TrainConfig tc;
    const json& t = doc.at("train");
    tc.steps = t.at("steps").get<std::size_t>();
    tc.batch = t.at("batch").get<std::size_t>();
    tc.lr = t.at("lr").get<double>();
    tc.seed = t.at("seed").get<std::uint64_t>();
    tc.eval_interval = t.at("eval_interval").get<std::size_t>();
    tc.patience = t.at("patience").get<std::size_t>();
    const auto fr = t.at("fractions").get<std::vector<double>>();
    if (fr.size() != 3) throw DataError("checkpoint: split fractions must have three entries");
    const SplitFractions fractions{fr[0], fr[1], fr[2]};

    FittedStatistics stats;
    for (const json& q : doc.at("statistics").at("quantile_cuts")) {
      stats.quantile_cuts.push_back(transforms::QuantileCuts{q.get<std::array<double, 3>>()});
    }
    for (const json& g : doc.at("statistics").at("group_means")) {
      transforms::GroupMeanTable table;
      table.levels = g.at("levels").get<std::size_t>();
      table.columns = g.at("columns").get<std::size_t>();
      table.means = g.at("means").get<std::vector<double>>();
      for (int s : g.at("seen").get<std::vector<int>>()) table.seen.push_back(static_cast<char>(s));
      table.global = g.at("global").get<std::vector<double>>();
      if (table.means.size() != table.levels * table.columns || table.seen.size() != table.levels ||
          table.global.size() != table.columns) {
        throw DataError("checkpoint: malformed group-mean table");
      }
      stats.group_means.push_back(std::move(table));
    }

    std::vector<Parameter> params;
    for (const json& e : doc.at("parameters")) params.push_back(Parameter{e.at("name").get<std::string>(), tensor_from(e)});

    Layout layout = make_layout(schema, codes.class_labels.size());
    Pipeline model(std::move(layout), std::move(pc), std::move(stats), std::move(params));
    return TrainedModel{std::move(schema), std::move(codes), tc, fractions, std::move(model)};
  } catch (const json::exception& e) {
    throw DataError(fmt::format("checkpoint: {}", e.what()));
  } catch (const ShapeError& e) {
    throw DataError(fmt::format("checkpoint: {}", e.what()));
  }
}

TrainedModel load_checkpoint(const std::filesystem::path& path, const Schema* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open checkpoint '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str(), expected);
}

}  // namespace maskfe
