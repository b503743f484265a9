#pragma once

#include <functional>
#include <span>
#include <vector>

#include "maskfe/autodiff.hpp"

namespace maskfe::ad {

// Builds a scalar on `tape` from leaves holding the supplied parameter values.
using ScalarFunction = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_coordinate = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients of `f` against central differences over
/// every coordinate of every parameter. The per-coordinate error is
/// |a - c| / (|a| + |c| + floor); a floor near the difference quotient's
/// rounding noise keeps vanishing gradients from dominating. `eps` must lie
/// in [1e-6, 1e-4].
/// Throws NumericError naming the coordinate if f evaluates non-finite.
GradCheckResult finite_difference_check(const ScalarFunction& f, std::span<const Tensor> params, double eps,
                                        double floor = 1e-12);

double finite_difference_check(const std::function<Var(Tape&, Var)>& f, const Tensor& theta, double eps,
                               double floor = 1e-12);

}  // namespace maskfe::ad
