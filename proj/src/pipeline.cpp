#include "maskfe/pipeline.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "maskfe/error.hpp"

namespace maskfe {

namespace tf = transforms;

Layout make_layout(const Schema& schema, std::size_t classes) {
  Layout l;
  for (const ColumnSpec& c : schema.columns)
    if (c.kind == FeatureKind::numerical) l.pool.push_back(c.name);
  for (const ColumnSpec& c : schema.columns) {
    if (c.kind == FeatureKind::temporal) {
      l.pool.push_back(c.name);
      l.temporal.push_back(c.name);
      l.lookback.push_back(c.lookback);
    } else if (c.kind == FeatureKind::categorical) {
      l.categorical.push_back(c.name);
    }
  }
  l.task = schema.task;
  l.outputs = schema.task == TaskType::classification ? classes : 1;
  if (l.outputs == 0) throw DataError("classification task without class labels");
  return l;
}

Layout make_layout(const Dataset& ds) { return make_layout(ds.schema, ds.num_classes()); }

Batch make_batch(const Dataset& ds, std::span<const std::size_t> rows) {
  Batch b;
  b.rows = rows.size();
  b.pool = pool_matrix(ds, rows);
  b.categorical = categorical_scaled(ds, rows);
  const std::size_t C = ds.categorical.size();
  b.codes.resize(rows.size() * C);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < C; ++c) b.codes[i * C + c] = ds.categorical[c].codes[rows[i]];
  for (const TemporalColumn& t : ds.temporal) {
    ad::Tensor w = ad::Tensor::zeros({rows.size(), t.lookback});
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t s = 0; s < t.lookback; ++s) w[i * t.lookback + s] = t.windows.at(rows[i], s);
    b.windows.push_back(std::move(w));
  }
  if (ds.has_target && !ds.y.empty()) {
    for (std::size_t r : rows) b.y.push_back(ds.y[r]);
  }
  return b;
}

Batch make_batch(const Dataset& ds) {
  std::vector<std::size_t> rows(ds.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return make_batch(ds, rows);
}

// ---------------------------------------------------------------------------

struct Pipeline::Inputs {
  ad::Tape* tape;
  ad::Var pool;
  ad::Var candidates;  // pool followed by scaled categoricals
  std::vector<ad::Var> windows;
};

Pipeline::Pipeline(Layout layout, PipelineConfig config, FittedStatistics stats, std::uint64_t seed)
    : layout_(std::move(layout)), config_(std::move(config)), stats_(std::move(stats)) {
  build_units();
  initialize(seed);
}

Pipeline::Pipeline(Layout layout, PipelineConfig config, FittedStatistics stats, std::vector<Parameter> parameters)
    : layout_(std::move(layout)), config_(std::move(config)), stats_(std::move(stats)) {
  build_units();
  if (parameters.size() != params_.size()) {
    throw DataError(fmt::format("model has {} parameters, checkpoint has {}", params_.size(), parameters.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (parameters[i].name != params_[i].name || parameters[i].value.shape() != params_[i].value.shape()) {
      throw DataError(fmt::format("parameter {} is '{}' {} in the checkpoint, expected '{}' {}", i, parameters[i].name,
                                  ad::shape_string(parameters[i].value.shape()), params_[i].name,
                                  ad::shape_string(params_[i].value.shape())));
    }
    params_[i].value = std::move(parameters[i].value);
  }
}

const Parameter& Pipeline::parameter(std::string_view name) const {
  for (const Parameter& p : params_)
    if (p.name == name) return p;
  throw std::out_of_range(fmt::format("no parameter named '{}'", name));
}

std::size_t Pipeline::add_parameter(std::string name, ad::Tensor value) {
  params_.push_back(Parameter{std::move(name), std::move(value)});
  return params_.size() - 1;
}

void Pipeline::build_units() {
  if (config_.h == 0 || config_.h_glb == 0 || config_.h_temporal == 0 || config_.hidden == 0 || config_.instances == 0) {
    throw std::invalid_argument("pipeline: h, h_glb, h_temporal, hidden and instances must be positive");
  }
  const std::size_t P = layout_.pool.size();
  const std::size_t C = layout_.categorical.size();
  std::size_t head_in = 0;

  if (config_.raw_features_only) {
    head_in = P + C;
    for (std::size_t L : layout_.lookback) head_in += L;
    if (head_in == 0) throw DataError("schema has no feature columns");
  } else {
    for (TransformKind kind : config_.tabular) {
      const TransformSpec& spec = transform_spec(kind);
      if (spec.temporal) throw std::invalid_argument(fmt::format("{} is not a tabular transform", spec.name));
      for (std::size_t inst = 0; inst < config_.instances; ++inst) {
        Unit u{kind, inst, 0, 0, 0, 0, {}};
        const std::string prefix = fmt::format("{}.{}", spec.name, inst);
        if (kind == TransformKind::group_by) {
          if (C == 0 || P == 0) continue;
          u.h = 1;
          u.params.push_back(add_parameter(prefix + ".key_mask", ad::Tensor::zeros({C})));
          u.params.push_back(add_parameter(prefix + ".value_mask", ad::Tensor::zeros({P})));
        } else {
          const std::size_t candidates = kind == TransformKind::identity ? P + C : P;
          if (candidates == 0) continue;
          u.h = std::min(config_.h, candidates);
          u.params.push_back(add_parameter(prefix + ".mask", ad::Tensor::zeros({candidates})));
          for (const ParamSpec& ps : spec.params) {
            u.params.push_back(add_parameter(prefix + "." + ps.name, ad::Tensor::filled({P}, ps.init)));
          }
        }
        u.width = output_width(kind, u.h, 0);
        units_.push_back(std::move(u));
      }
    }
    for (std::size_t f = 0; f < layout_.temporal.size(); ++f) {
      const std::size_t L = layout_.lookback[f];
      for (TransformKind kind : config_.temporal) {
        const TransformSpec& spec = transform_spec(kind);
        if (!spec.temporal) throw std::invalid_argument(fmt::format("{} is not a temporal transform", spec.name));
        const std::string prefix = fmt::format("{}.{}", spec.name, layout_.temporal[f]);
        if (kind == TransformKind::temporal_difference) {
          for (std::size_t k : tf::kDifferenceOffsets) {
            if (k < L) units_.push_back(Unit{kind, 0, f, k, 0, 1, {}});
          }
          continue;
        }
        Unit u{kind, 0, f, 0, 0, output_width(kind, 0, L), {}};
        if (kind == TransformKind::temporal_aggregation || kind == TransformKind::temporal_lag) {
          u.h = kind == TransformKind::temporal_lag ? 1 : std::min(config_.h_temporal, L);
          u.params.push_back(add_parameter(prefix + ".mask", ad::Tensor::zeros({L})));
        }
        units_.push_back(std::move(u));
      }
    }
    for (const Unit& u : units_) concat_width_ += u.width;
    if (concat_width_ == 0) throw DataError("no transform applies to the schema's columns");
    h_glb_ = std::min(config_.h_glb, concat_width_);
    global_param_ = add_parameter("global.mask", ad::Tensor::zeros({concat_width_}));
    head_in = h_glb_;
  }
  if (config_.raw_features_only) h_glb_ = head_in;

  head_param_ = add_parameter("head.w1", ad::Tensor::zeros({head_in, config_.hidden}));
  add_parameter("head.b1", ad::Tensor::zeros({config_.hidden}));
  add_parameter("head.w2", ad::Tensor::zeros({config_.hidden, layout_.outputs}));
  add_parameter("head.b2", ad::Tensor::zeros({layout_.outputs}));
}

void Pipeline::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mask(-0.01, 0.01);
  for (Parameter& p : params_) {
    const std::string_view name = p.name;
    if (name.ends_with("mask")) {
      for (double& v : p.value.values()) v = mask(rng);
    } else if (name == "head.w1" || name == "head.w2") {
      const double bound = 1.0 / std::sqrt(static_cast<double>(p.value.shape()[0]));
      std::uniform_real_distribution<double> w(-bound, bound);
      for (double& v : p.value.values()) v = w(rng);
    }
  }
}

std::vector<ad::Var> Pipeline::register_parameters(ad::Tape& tape, bool trainable) const {
  std::vector<ad::Var> vars;
  vars.reserve(params_.size());
  for (const Parameter& p : params_) vars.push_back(trainable ? tape.parameter(p.value) : tape.constant(p.value));
  return vars;
}

void Pipeline::check_batch(const Batch& b) const {
  bool ok = b.pool.rank() == 2 && b.pool.cols() == layout_.pool.size() && b.pool.rows() == b.rows &&
            b.categorical.rank() == 2 && b.categorical.cols() == layout_.categorical.size() &&
            b.windows.size() == layout_.temporal.size();
  for (std::size_t f = 0; ok && f < b.windows.size(); ++f) ok = b.windows[f].cols() == layout_.lookback[f];
  if (!ok) throw DataError("batch does not match the model's schema");
  if (b.rows == 0) throw DataError("empty batch");
}

ad::Var Pipeline::head(std::span<const ad::Var> p, ad::Var x) const {
  const std::size_t n = x.shape()[0];
  const ad::Var hidden =
      ad::relu(ad::add(ad::matmul(x, p[head_param_]), ad::broadcast_rows(p[head_param_ + 1], n)));
  return ad::add(ad::matmul(hidden, p[head_param_ + 2]), ad::broadcast_rows(p[head_param_ + 3], n));
}

namespace {

std::string offset_text(std::size_t offset) { return fmt::format("{}", offset); }

}  // namespace

ad::Var Pipeline::unit_forward(const Unit& u, std::span<const ad::Var> p, const Inputs& in, const Batch& batch,
                               std::vector<ColumnInfo>* info) const {
  ad::Tape& tape = *in.tape;
  const TransformSpec& spec = transform_spec(u.kind);
  const std::size_t n = batch.rows;

  if (spec.temporal) {
    const ad::Var window = in.windows[u.feature];
    const std::size_t L = layout_.lookback[u.feature];
    const std::string& name = layout_.temporal[u.feature];
    auto describe = [&](std::vector<InputRef> inputs, std::vector<std::string> extra) {
      if (info == nullptr) return;
      std::vector<std::string> feats{name};
      info->push_back(ColumnInfo{u.kind, render_provenance(spec.name, feats, extra), std::move(inputs), {}, 0, 1.0});
    };
    switch (u.kind) {
      case TransformKind::temporal_aggregation:
      case TransformKind::temporal_lag: {
        const MaskedSelection sel = temporal_mask_forward(p[u.params[0]], u.h, window);
        std::vector<InputRef> inputs;
        std::vector<std::string> offsets;
        for (std::size_t j = 0; j < u.h; ++j) {
          const std::size_t off = L - 1 - sel.mask.indices[j];
          inputs.push_back(InputRef{name, off, sel.mask.weights[j]});
          offsets.push_back(offset_text(off));
        }
        describe(std::move(inputs), std::move(offsets));
        return u.kind == TransformKind::temporal_lag ? tf::temporal_lag(sel.selected) : tf::temporal_aggregation(sel.selected);
      }
      case TransformKind::temporal_standard_normalization:
      case TransformKind::temporal_differencing:
        for (std::size_t j = 0; j < L; ++j) describe({InputRef{name, L - 1 - j, 1.0}}, {offset_text(L - 1 - j)});
        return u.kind == TransformKind::temporal_differencing ? tf::temporal_differencing(window)
                                                                : tf::temporal_standard_normalization(window);
      case TransformKind::relative_temporal_mean:
        describe({InputRef{name, std::nullopt, 1.0}}, {});
        return tf::relative_temporal_mean(window);
      case TransformKind::temporal_difference:
        describe({InputRef{name, 0, 1.0}, InputRef{name, u.k, 1.0}}, {offset_text(u.k)});
        return tf::temporal_difference_k(window, u.k);
      case TransformKind::temporal_mean:
        describe({InputRef{name, std::nullopt, 1.0}}, {});
        return tf::temporal_mean(window);
      default:
        break;
    }
    throw std::logic_error("unhandled temporal transform");
  }

  const std::size_t P = layout_.pool.size();
  const std::size_t C = layout_.categorical.size();

  if (u.kind == TransformKind::group_by) {
    const ad::Var key_logits = p[u.params[0]];
    const ad::Var value_logits = p[u.params[1]];
    const std::size_t key = top_h_select(key_logits.value().values(), 1)[0];
    const std::size_t column = top_h_select(value_logits.value().values(), 1)[0];
    const std::size_t ki[] = {key};
    const std::size_t vi[] = {column};
    const ad::Var kw = ad::gather(ad::softmax(key_logits), ki);
    const ad::Var vw = ad::gather(ad::softmax(value_logits), vi);
    ad::Tensor means = ad::Tensor::zeros({n, 1});
    const tf::GroupMeanTable& table = stats_.group_means.at(key);
    for (std::size_t r = 0; r < n; ++r) means[r] = table.lookup(batch.codes[r * C + key], column);
    if (info != nullptr) {
      const std::vector<std::string> feats{layout_.categorical[key], layout_.pool[column]};
      info->push_back(ColumnInfo{u.kind, render_provenance(spec.name, feats),
                                 {InputRef{feats[0], std::nullopt, kw.value()[0]}, InputRef{feats[1], std::nullopt, vw.value()[0]}},
                                 {}, 0, 1.0});
    }
    return tf::group_by(tape, means, ad::mul(kw, vw));
  }

  const bool identity = u.kind == TransformKind::identity;
  const MaskedSelection sel = mask_forward(p[u.params[0]], u.h, identity ? in.candidates : in.pool);
  const std::vector<std::size_t>& idx = sel.mask.indices;
  auto name_of = [&](std::size_t i) -> const std::string& { return i < P ? layout_.pool[i] : layout_.categorical[i - P]; };
  auto gathered = [&](std::size_t k) { return ad::gather(p[u.params[k]], idx); };

  ad::Var out;
  std::vector<std::vector<double>> constants(u.h);
  switch (u.kind) {
    case TransformKind::polynomial: {
      const ad::Var coef = gathered(1);
      const ad::Var degree = gathered(2);
      out = tf::polynomial(sel.selected, coef, degree);
      for (std::size_t j = 0; j < u.h; ++j) constants[j] = {coef.value()[j], tf::degree_from_raw(degree.value()[j])};
      break;
    }
    case TransformKind::logarithm:
      out = tf::logarithm(sel.selected);
      break;
    case TransformKind::custom_z_scale: {
      const ad::Var scale = gathered(1);
      const ad::Var shift = gathered(2);
      out = tf::custom_z_scale(sel.selected, scale, shift);
      for (std::size_t j = 0; j < u.h; ++j) constants[j] = {tf::positive_from_raw(scale.value()[j]), shift.value()[j]};
      break;
    }
    case TransformKind::additive_aggregation:
      out = tf::additive_aggregation(sel.selected);
      break;
    case TransformKind::multiplicative_aggregation:
      out = tf::multiplicative_aggregation(sel.selected);
      break;
    case TransformKind::gaussian: {
      const ad::Var mean = gathered(1);
      const ad::Var sd = gathered(2);
      out = tf::gaussian(sel.selected, mean, sd);
      for (std::size_t j = 0; j < u.h; ++j) constants[j] = {mean.value()[j], tf::positive_from_raw(sd.value()[j])};
      break;
    }
    case TransformKind::quantile: {
      std::vector<tf::QuantileCuts> cuts;
      for (std::size_t i : idx) cuts.push_back(stats_.quantile_cuts.at(i));
      out = tf::quantile(tape, sel.raw, cuts, sel.weights);
      for (std::size_t j = 0; j < u.h; ++j) constants[j] = {cuts[j].cuts.begin(), cuts[j].cuts.end()};
      break;
    }
    case TransformKind::identity:
      out = tf::identity(sel.selected);
      break;
    default:
      throw std::logic_error("unhandled tabular transform");
  }

  if (info != nullptr) {
    auto push = [&](std::vector<std::string> feats, std::vector<InputRef> inputs, std::vector<double> consts) {
      std::vector<std::string> rendered;
      for (double c : consts) rendered.push_back(format_constant(c));
      info->push_back(ColumnInfo{u.kind, render_provenance(spec.name, feats, rendered), std::move(inputs), std::move(consts), 0, 1.0});
    };
    if (u.width == 1) {
      std::vector<std::string> feats;
      std::vector<InputRef> inputs;
      for (std::size_t j = 0; j < u.h; ++j) {
        feats.push_back(name_of(idx[j]));
        inputs.push_back(InputRef{name_of(idx[j]), std::nullopt, sel.mask.weights[j]});
      }
      push(std::move(feats), std::move(inputs), {});
    } else {
      for (std::size_t j = 0; j < u.h; ++j) {
        push({name_of(idx[j])}, {InputRef{name_of(idx[j]), std::nullopt, sel.mask.weights[j]}}, constants[j]);
      }
    }
  }
  return out;
}

ForwardResult Pipeline::forward(ad::Tape& tape, std::span<const ad::Var> p, const Batch& batch, bool describe) const {
  check_batch(batch);
  if (p.size() != params_.size()) throw std::invalid_argument("forward: parameter count mismatch");
  const std::size_t n = batch.rows;
  ForwardResult result;

  if (config_.raw_features_only) {
    ad::Tensor x = ad::Tensor::zeros({n, h_glb_});
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t c = 0;
      for (double v : std::span(batch.pool.values()).subspan(r * batch.pool.cols(), batch.pool.cols())) x[r * h_glb_ + c++] = v;
      for (std::size_t j = 0; j < batch.categorical.cols(); ++j) x[r * h_glb_ + c++] = batch.categorical.at(r, j);
      for (const ad::Tensor& w : batch.windows)
        for (std::size_t s = 0; s < w.cols(); ++s) x[r * h_glb_ + c++] = w.at(r, s);
    }
    result.engineered = tape.constant(std::move(x));
    result.output = head(p, result.engineered);
    return result;
  }

  Inputs in{&tape, tape.constant(batch.pool), {}, {}};
  if (layout_.categorical.empty()) {
    in.candidates = in.pool;
  } else {
    const ad::Var parts[] = {in.pool, tape.constant(batch.categorical)};
    in.candidates = ad::concat(parts, 1);
  }
  for (const ad::Tensor& w : batch.windows) in.windows.push_back(tape.constant(w));

  std::vector<ad::Var> blocks;
  std::vector<ColumnInfo> infos;
  for (const Unit& u : units_) {
    const ad::Var block = unit_forward(u, p, in, batch, describe ? &infos : nullptr);
    if (!block.value().all_finite()) {
      throw NumericError(fmt::format("non-finite values produced by {} ({})", transform_name(u.kind),
                                     u.params.empty() ? std::string("no parameters") : params_[u.params[0]].name));
    }
    blocks.push_back(block);
  }
  const ad::Var concatenated = ad::concat(blocks, 1);
  const MaskedSelection sel = global_mask_forward(p[global_param_], h_glb_, concatenated);
  result.engineered = sel.selected;
  result.global = sel.mask;
  result.output = head(p, sel.selected);
  if (describe) {
    for (std::size_t j = 0; j < h_glb_; ++j) {
      ColumnInfo c = infos.at(sel.mask.indices[j]);
      c.position = sel.mask.indices[j];
      c.global_weight = sel.mask.weights[j];
      result.columns.push_back(std::move(c));
    }
  }
  if (!result.output.value().all_finite()) throw NumericError("non-finite values produced by the prediction head");
  return result;
}

ad::Tensor Pipeline::predict(const Batch& batch) const {
  ad::Tape tape;
  const std::vector<ad::Var> p = register_parameters(tape, false);
  return forward(tape, p, batch).output.value();
}

std::pair<ad::Tensor, std::vector<ColumnInfo>> Pipeline::engineer(const Batch& batch) const {
  ad::Tape tape;
  const std::vector<ad::Var> p = register_parameters(tape, false);
  ForwardResult r = forward(tape, p, batch, true);
  return {r.engineered.value(), std::move(r.columns)};
}

ad::Var task_loss(ad::Tape& tape, ad::Var output, std::span<const double> y, TaskType task) {
  const ad::Shape& s = output.shape();
  if (s.size() != 2 || s[0] != y.size()) {
    throw ShapeError(fmt::format("loss: output {} for {} targets", ad::shape_string(s), y.size()));
  }
  const std::size_t n = s[0];
  if (n == 0) throw DataError("loss: empty batch");
  if (task == TaskType::classification) {
    const std::size_t classes = s[1];
    ad::Tensor onehot = ad::Tensor::zeros({n, classes});
    for (std::size_t r = 0; r < n; ++r) {
      const double label = y[r];
      if (!(label >= 0.0) || label >= static_cast<double>(classes) || label != std::floor(label)) {
        throw DataError(fmt::format("loss: label {} outside [0, {})", label, classes));
      }
      onehot[r * classes + static_cast<std::size_t>(label)] = 1.0;
    }
    const ad::Var picked = ad::mul(ad::log_softmax(output), tape.constant(std::move(onehot)));
    return ad::scale(ad::sum(picked), -1.0 / static_cast<double>(n));
  }
  if (s[1] != 1) throw ShapeError(fmt::format("loss: regression output must be (n,1), got {}", ad::shape_string(s)));
  const ad::Var target = tape.constant(ad::Tensor::matrix(n, 1, std::vector<double>(y.begin(), y.end())));
  return ad::mean(ad::abs(ad::sub(output, target)));
}

}  // namespace maskfe
