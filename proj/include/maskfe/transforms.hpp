#pragma once

// The transform bank.
//
// Every transform consumes the weighted selection produced by a mask and
// returns a block of new columns. Learnable parameters are stored per
// candidate feature (one value per mask position) and gathered at the
// selected indices, so a coefficient stays attached to its feature when the
// selection changes.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maskfe/autodiff.hpp"

namespace maskfe {

enum class TransformKind {
  polynomial,
  logarithm,
  custom_z_scale,
  additive_aggregation,
  multiplicative_aggregation,
  gaussian,
  quantile,
  group_by,
  identity,
  temporal_aggregation,
  temporal_standard_normalization,
  temporal_differencing,
  temporal_lag,
  relative_temporal_mean,
  temporal_difference,
  temporal_mean,
};

enum class FeatureKind { numerical, categorical, temporal };

struct ParamSpec {
  std::string name;
  double init;  // every entry starts at this value
};

struct TransformSpec {
  TransformKind kind;
  std::string_view name;  // provenance name, e.g. "TemporalLag"
  bool temporal;          // operates on lookback windows
  bool masked;            // consumes a mask selection (else the raw window)
  std::vector<ParamSpec> params;
  std::vector<FeatureKind> accepts;
};

const TransformSpec& transform_spec(TransformKind kind);
std::string_view transform_name(TransformKind kind);
std::optional<TransformKind> parse_transform_kind(std::string_view name);

std::vector<TransformKind> tabular_transform_kinds();
std::vector<TransformKind> temporal_transform_kinds();

// Columns produced for a selection width h (tabular) or window length L.
std::size_t output_width(TransformKind kind, std::size_t h, std::size_t lookback);

namespace transforms {

inline constexpr double kPolynomialEps = 1e-8;
inline constexpr double kLogEps = 1e-6;
inline constexpr double kDivisorEps = 1e-6;
inline constexpr double kStdEps = 1e-6;
// Added under the square root of the window variance so a constant window
// has a finite derivative.
inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kMinDegree = 0.5;
inline constexpr double kDegreeSpan = 2.5;

double softplus(double x);
double softplus_inverse(double y);
double logistic(double x);
// Polynomial degree 0.5 + 2.5 * logistic(raw).
double degree_from_raw(double raw);
double raw_for_degree(double degree);
// softplus(raw) + 1e-6: the positive divisor / std used by z-scaling and the Gaussian.
double positive_from_raw(double raw);

// x: (n,h). coef, degree_raw: (h).
// c * sign(x) * |x + 1e-8|^deg with deg = 0.5 + 2.5 * logistic(degree_raw).
ad::Var polynomial(ad::Var x, ad::Var coef, ad::Var degree_raw);
// ln(|x| + 1e-6)
ad::Var logarithm(ad::Var x);
// (x - shift) / (softplus(scale_raw) + 1e-6)
ad::Var custom_z_scale(ad::Var x, ad::Var scale_raw, ad::Var shift);
// Row sums / products, (n,1).
ad::Var additive_aggregation(ad::Var x);
ad::Var multiplicative_aggregation(ad::Var x);
// exp(-(x - mean)^2 / (2 (softplus(std_raw) + 1e-6)^2))
ad::Var gaussian(ad::Var x, ad::Var mean, ad::Var std_raw);
ad::Var identity(ad::Var x);

struct QuantileCuts {
  std::array<double, 3> cuts{};  // 25th, 50th, 75th percentile
};

// Linear-interpolation percentile, q in [0, 1]. Throws DataError when empty.
double percentile(std::span<const double> values, double q);
QuantileCuts fit_quantile_cuts(std::span<const double> column);
// Number of cut points strictly below v, in {0,1,2,3}.
int quantile_bucket(const QuantileCuts& cuts, double v);

// raw: (n,h) unweighted selected columns; cuts: one per selected column.
// Bucket / 3 times the mask weight; the bucketing itself carries no gradient.
ad::Var quantile(ad::Tape& tape, const ad::Tensor& raw, std::span<const QuantileCuts> cuts, ad::Var weights);

// Per-level training means of every candidate value column for one
// categorical key column.
struct GroupMeanTable {
  std::size_t levels = 0;
  std::size_t columns = 0;
  std::vector<double> means;   // levels x columns
  std::vector<char> seen;      // level had training rows
  std::vector<double> global;  // columns

  // Training mean for the level, or the global mean for unseen levels.
  double lookup(std::size_t level, std::size_t column) const;
};

// codes: key per row; values: (rows, columns) row-major; rows lists the
// training rows to use. Throws DataError if `rows` is empty.
GroupMeanTable fit_group_means(std::span<const std::size_t> codes, std::size_t levels, std::span<const double> values,
                               std::size_t columns, std::span<const std::size_t> rows);

// means: (n,1) looked-up group means; weight: product of key and value mask
// weights, shape (1).
ad::Var group_by(ad::Tape& tape, const ad::Tensor& means, ad::Var weight);

// ---- temporal, windows are (n,L) with column L-1 the current step ----------
ad::Var temporal_aggregation(ad::Var weighted_steps);
ad::Var temporal_standard_normalization(ad::Var window);
ad::Var temporal_differencing(ad::Var window);
ad::Var temporal_lag(ad::Var weighted_step);
ad::Var relative_temporal_mean(ad::Var window);
ad::Var temporal_difference_k(ad::Var window, std::size_t k);
ad::Var temporal_mean(ad::Var window);

// Offsets instantiated for temporal_difference.
inline constexpr std::array<std::size_t, 3> kDifferenceOffsets{1, 2, 7};

}  // namespace transforms

// Constants rendered with 4 significant digits.
std::string format_constant(double v);
// Name(feat_1, ..., feat_h[, const...])
std::string render_provenance(std::string_view name, std::span<const std::string> features,
                              std::span<const std::string> constants = {});
// Provenance reduced to [A-Za-z0-9_] for use as a CSV header.
std::string provenance_slug(std::string_view provenance);

}  // namespace maskfe
