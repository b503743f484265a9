#include "maskfe/transforms.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "maskfe/error.hpp"

namespace maskfe {

namespace {

using FK = FeatureKind;

const std::vector<TransformSpec>& spec_table() {
  static const std::vector<TransformSpec> table = [] {
    const double unit_raw = transforms::softplus_inverse(1.0);
    const std::vector<FK> numeric{FK::numerical, FK::temporal};
    const std::vector<FK> temporal{FK::temporal};
    return std::vector<TransformSpec>{
        {TransformKind::polynomial, "Polynomial", false, true, {{"coefficient", 1.0}, {"degree", 0.0}}, numeric},
        {TransformKind::logarithm, "Logarithm", false, true, {}, numeric},
        {TransformKind::custom_z_scale, "CustomZScale", false, true, {{"scale", unit_raw}, {"shift", 0.0}}, numeric},
        {TransformKind::additive_aggregation, "AdditiveAggregation", false, true, {}, numeric},
        {TransformKind::multiplicative_aggregation, "MultiplicativeAggregation", false, true, {}, numeric},
        {TransformKind::gaussian, "Gaussian", false, true, {{"mean", 0.0}, {"std", unit_raw}}, numeric},
        {TransformKind::quantile, "QuantileTransform", false, true, {}, numeric},
        {TransformKind::group_by, "GroupBy", false, true, {}, {FK::categorical, FK::numerical, FK::temporal}},
        {TransformKind::identity, "Identity", false, true, {}, {FK::numerical, FK::categorical, FK::temporal}},
        {TransformKind::temporal_aggregation, "TemporalAggregation", true, true, {}, temporal},
        {TransformKind::temporal_standard_normalization, "TemporalStandardNormalization", true, false, {}, temporal},
        {TransformKind::temporal_differencing, "TemporalDifferencing", true, false, {}, temporal},
        {TransformKind::temporal_lag, "TemporalLag", true, true, {}, temporal},
        {TransformKind::relative_temporal_mean, "RelativeTemporalMean", true, false, {}, temporal},
        {TransformKind::temporal_difference, "TemporalDifference", true, false, {}, temporal},
        {TransformKind::temporal_mean, "TemporalMean", true, false, {}, temporal},
    };
  }();
  return table;
}

}  // namespace

const TransformSpec& transform_spec(TransformKind kind) { return spec_table().at(static_cast<std::size_t>(kind)); }

std::string_view transform_name(TransformKind kind) { return transform_spec(kind).name; }

std::optional<TransformKind> parse_transform_kind(std::string_view name) {
  for (const TransformSpec& s : spec_table()) {
    if (s.name == name) return s.kind;
  }
  return std::nullopt;
}

std::vector<TransformKind> tabular_transform_kinds() {
  std::vector<TransformKind> out;
  for (const TransformSpec& s : spec_table())
    if (!s.temporal) out.push_back(s.kind);
  return out;
}

std::vector<TransformKind> temporal_transform_kinds() {
  std::vector<TransformKind> out;
  for (const TransformSpec& s : spec_table())
    if (s.temporal) out.push_back(s.kind);
  return out;
}

std::size_t output_width(TransformKind kind, std::size_t h, std::size_t lookback) {
  switch (kind) {
    case TransformKind::polynomial:
    case TransformKind::logarithm:
    case TransformKind::custom_z_scale:
    case TransformKind::gaussian:
    case TransformKind::quantile:
    case TransformKind::identity:
      return h;
    case TransformKind::temporal_standard_normalization:
    case TransformKind::temporal_differencing:
      return lookback;
    default:
      return 1;
  }
}

namespace transforms {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double softplus_inverse(double y) { return y + std::log(-std::expm1(-y)); }

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double degree_from_raw(double raw) { return kMinDegree + kDegreeSpan * logistic(raw); }

double raw_for_degree(double degree) {
  const double p = (degree - kMinDegree) / kDegreeSpan;
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument(fmt::format("degree {} outside (0.5, 3.0)", degree));
  return std::log(p / (1.0 - p));
}

double positive_from_raw(double raw) { return softplus(raw) + kDivisorEps; }

namespace {

std::size_t rows_of(ad::Var x, const char* op) {
  if (x.value().rank() != 2) {
    throw ShapeError(fmt::format("{}: expected (n,h) input, got {}", op, ad::shape_string(x.shape())));
  }
  return x.shape()[0];
}

void require_param_width(const char* op, ad::Var x, ad::Var p) {
  if (p.value().rank() != 1 || p.value().size() != x.shape()[1]) {
    throw ShapeError(fmt::format("{}: parameter {} does not match input {}", op, ad::shape_string(p.shape()),
                                 ad::shape_string(x.shape())));
  }
}

ad::Var column(ad::Var v, std::size_t n) { return ad::reshape(v, {n, 1}); }

}  // namespace

ad::Var polynomial(ad::Var x, ad::Var coef, ad::Var degree_raw) {
  const std::size_t n = rows_of(x, "polynomial");
  require_param_width("polynomial", x, coef);
  require_param_width("polynomial", x, degree_raw);
  ad::Tensor signs = x.value();
  for (double& v : signs.values()) v = static_cast<double>((v > 0) - (v < 0));
  const ad::Var degree = ad::add_scalar(ad::scale(ad::sigmoid(degree_raw), kDegreeSpan), kMinDegree);
  const ad::Var magnitude = ad::pow(ad::abs(ad::add_scalar(x, kPolynomialEps)), ad::broadcast_rows(degree, n));
  const ad::Var signed_power = ad::mul(x.tape()->constant(std::move(signs)), magnitude);
  return ad::mul(signed_power, ad::broadcast_rows(coef, n));
}

ad::Var logarithm(ad::Var x) {
  rows_of(x, "logarithm");
  return ad::log(ad::add_scalar(ad::abs(x), kLogEps));
}

ad::Var custom_z_scale(ad::Var x, ad::Var scale_raw, ad::Var shift) {
  const std::size_t n = rows_of(x, "custom_z_scale");
  require_param_width("custom_z_scale", x, scale_raw);
  require_param_width("custom_z_scale", x, shift);
  const ad::Var divisor = ad::add_scalar(ad::softplus(scale_raw), kDivisorEps);
  return ad::div(ad::sub(x, ad::broadcast_rows(shift, n)), ad::broadcast_rows(divisor, n));
}

ad::Var additive_aggregation(ad::Var x) {
  const std::size_t n = rows_of(x, "additive_aggregation");
  return column(ad::sum_axis(x, 1), n);
}

ad::Var multiplicative_aggregation(ad::Var x) {
  const std::size_t n = rows_of(x, "multiplicative_aggregation");
  return column(ad::prod_axis(x, 1), n);
}

ad::Var gaussian(ad::Var x, ad::Var mean, ad::Var std_raw) {
  const std::size_t n = rows_of(x, "gaussian");
  require_param_width("gaussian", x, mean);
  require_param_width("gaussian", x, std_raw);
  const ad::Var sd = ad::add_scalar(ad::softplus(std_raw), kDivisorEps);
  const ad::Var two_var = ad::scale(ad::square(sd), 2.0);
  const ad::Var centered = ad::sub(x, ad::broadcast_rows(mean, n));
  return ad::exp(ad::neg(ad::div(ad::square(centered), ad::broadcast_rows(two_var, n))));
}

ad::Var identity(ad::Var x) {
  rows_of(x, "identity");
  return x;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw DataError("percentile: empty column");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

QuantileCuts fit_quantile_cuts(std::span<const double> column) {
  if (column.empty()) throw DataError("quantile transform: cannot fit on an empty column");
  return QuantileCuts{{percentile(column, 0.25), percentile(column, 0.5), percentile(column, 0.75)}};
}

int quantile_bucket(const QuantileCuts& cuts, double v) {
  int bucket = 0;
  for (double c : cuts.cuts) bucket += (c < v) ? 1 : 0;
  return bucket;
}

ad::Var quantile(ad::Tape& tape, const ad::Tensor& raw, std::span<const QuantileCuts> cuts, ad::Var weights) {
  if (raw.rank() != 2 || raw.cols() != cuts.size() || weights.value().size() != cuts.size()) {
    throw ShapeError(fmt::format("quantile: input {} with {} cut sets and {} weights", ad::shape_string(raw.shape()),
                                 cuts.size(), weights.value().size()));
  }
  const std::size_t n = raw.rows(), h = raw.cols();
  ad::Tensor buckets = ad::Tensor::zeros({n, h});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < h; ++j) buckets[r * h + j] = quantile_bucket(cuts[j], raw[r * h + j]) / 3.0;
  return ad::mul(tape.constant(std::move(buckets)), ad::broadcast_rows(weights, n));
}

double GroupMeanTable::lookup(std::size_t level, std::size_t column) const {
  if (level < levels && seen[level]) return means[level * columns + column];
  return global[column];
}

GroupMeanTable fit_group_means(std::span<const std::size_t> codes, std::size_t levels, std::span<const double> values,
                               std::size_t columns, std::span<const std::size_t> rows) {
  if (rows.empty()) throw DataError("group_by: cannot fit on an empty training split");
  GroupMeanTable t;
  t.levels = levels;
  t.columns = columns;
  t.means.assign(levels * columns, 0.0);
  t.seen.assign(levels, 0);
  t.global.assign(columns, 0.0);
  std::vector<double> counts(levels, 0.0);
  for (std::size_t r : rows) {
    const std::size_t level = codes[r];
    if (level >= levels) throw DataError(fmt::format("group_by: code {} out of range for {} levels", level, levels));
    counts[level] += 1.0;
    for (std::size_t c = 0; c < columns; ++c) {
      t.means[level * columns + c] += values[r * columns + c];
      t.global[c] += values[r * columns + c];
    }
  }
  for (std::size_t l = 0; l < levels; ++l) {
    if (counts[l] == 0.0) continue;
    t.seen[l] = 1;
    for (std::size_t c = 0; c < columns; ++c) t.means[l * columns + c] /= counts[l];
  }
  for (double& g : t.global) g /= static_cast<double>(rows.size());
  return t;
}

ad::Var group_by(ad::Tape& tape, const ad::Tensor& means, ad::Var weight) {
  if (means.rank() != 2 || means.cols() != 1 || weight.value().size() != 1) {
    throw ShapeError(fmt::format("group_by: means {} / weight {}", ad::shape_string(means.shape()),
                                 ad::shape_string(weight.shape())));
  }
  return ad::mul(tape.constant(means), ad::broadcast_rows(ad::reshape(weight, {1}), means.rows()));
}

ad::Var temporal_aggregation(ad::Var weighted_steps) {
  const std::size_t n = rows_of(weighted_steps, "temporal_aggregation");
  return column(ad::sum_axis(weighted_steps, 1), n);
}

ad::Var temporal_standard_normalization(ad::Var window) {
  rows_of(window, "temporal_standard_normalization");
  const std::size_t L = window.shape()[1];
  const ad::Var centered = ad::sub(window, ad::broadcast_cols(ad::mean_axis(window, 1), L));
  const ad::Var variance = ad::mean_axis(ad::square(centered), 1);
  const ad::Var sd = ad::add_scalar(ad::sqrt(ad::add_scalar(variance, kVarianceFloor)), kStdEps);
  return ad::div(centered, ad::broadcast_cols(sd, L));
}

ad::Var temporal_differencing(ad::Var window) {
  const std::size_t n = rows_of(window, "temporal_differencing");
  const std::size_t L = window.shape()[1];
  const ad::Var pad = window.tape()->constant(ad::Tensor::zeros({n, 1}));
  if (L < 2) return pad;
  const ad::Var diffs = ad::sub(ad::slice_cols(window, 1, L), ad::slice_cols(window, 0, L - 1));
  const ad::Var parts[] = {pad, diffs};
  return ad::concat(parts, 1);
}

ad::Var temporal_lag(ad::Var weighted_step) {
  rows_of(weighted_step, "temporal_lag");
  if (weighted_step.shape()[1] != 1) {
    throw ShapeError(fmt::format("temporal_lag: expects one selected step, got {}", ad::shape_string(weighted_step.shape())));
  }
  return weighted_step;
}

ad::Var relative_temporal_mean(ad::Var window) {
  const std::size_t n = rows_of(window, "relative_temporal_mean");
  return column(ad::mean_axis(temporal_standard_normalization(window), 1), n);
}

ad::Var temporal_difference_k(ad::Var window, std::size_t k) {
  rows_of(window, "temporal_difference_k");
  const std::size_t L = window.shape()[1];
  if (k == 0 || k >= L) throw std::invalid_argument(fmt::format("temporal_difference_k: offset {} invalid for L={}", k, L));
  return ad::sub(ad::slice_cols(window, L - 1, L), ad::slice_cols(window, L - 1 - k, L - k));
}

ad::Var temporal_mean(ad::Var window) {
  const std::size_t n = rows_of(window, "temporal_mean");
  return column(ad::mean_axis(window, 1), n);
}

}  // namespace transforms

std::string format_constant(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  return fmt::format("{:.4g}", v);
}

std::string render_provenance(std::string_view name, std::span<const std::string> features,
                              std::span<const std::string> constants) {
  std::string out(name);
  out += '(';
  bool first = true;
  for (const auto* list : {&features, &constants}) {
    for (const std::string& s : *list) {
      if (!first) out += ", ";
      out += s;
      first = false;
    }
  }
  out += ')';
  return out;
}

std::string provenance_slug(std::string_view provenance) {
  std::string out;
  for (char c : provenance) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) != 0;
    if (keep) {
      out += c;
    } else if (c == '.' ) {
      out += 'p';
    } else if (c == '-') {
      out += 'm';
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

}  // namespace maskfe
