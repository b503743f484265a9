#include "maskfe/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "maskfe/error.hpp"

namespace maskfe::ad {

namespace {

double evaluate(const ScalarFunction& f, const std::vector<Tensor>& values, std::size_t p, std::size_t i) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(values.size());
  for (const Tensor& v : values) leaves.push_back(tape.parameter(v));
  const double out = f(tape, leaves).value().item();
  if (!std::isfinite(out)) {
    throw NumericError(fmt::format("finite_difference_check: non-finite value perturbing parameter {} coordinate {}", p, i));
  }
  return out;
}

}  // namespace

GradCheckResult finite_difference_check(const ScalarFunction& f, std::span<const Tensor> params, double eps, double floor) {
  if (!(eps >= 1e-6 && eps <= 1e-4)) {
    throw std::invalid_argument(fmt::format("finite_difference_check: eps {} outside [1e-6, 1e-4]", eps));
  }
  std::vector<Tensor> values(params.begin(), params.end());

  Tape tape;
  std::vector<Var> leaves;
  for (const Tensor& v : values) leaves.push_back(tape.parameter(v));
  const Var loss = f(tape, leaves);
  if (!std::isfinite(loss.value().item())) throw NumericError("finite_difference_check: non-finite value at theta");
  const Gradients grads = tape.backward(loss);

  GradCheckResult result;
  for (std::size_t p = 0; p < values.size(); ++p) {
    const Tensor analytic = grads[leaves[p]];
    for (std::size_t i = 0; i < values[p].size(); ++i) {
      const double saved = values[p][i];
      values[p][i] = saved + eps;
      const double up = evaluate(f, values, p, i);
      values[p][i] = saved - eps;
      const double down = evaluate(f, values, p, i);
      values[p][i] = saved;

      const double central = (up - down) / (2.0 * eps);
      const double a = analytic[i];
      const double err = std::abs(a - central) / (std::abs(a) + std::abs(central) + floor);
      ++result.coordinates;
      if (err > result.max_relative_error || result.coordinates == 1) {
        result.max_relative_error = err;
        result.worst_param = p;
        result.worst_coordinate = i;
        result.analytic = a;
        result.numeric = central;
      }
    }
  }
  return result;
}

double finite_difference_check(const std::function<Var(Tape&, Var)>& f, const Tensor& theta, double eps, double floor) {
  const ScalarFunction wrapped = [&f](Tape& tape, std::span<const Var> params) { return f(tape, params[0]); };
  return finite_difference_check(wrapped, std::span<const Tensor>(&theta, 1), eps, floor).max_relative_error;
}

}  // namespace maskfe::ad
