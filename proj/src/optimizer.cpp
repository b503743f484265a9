#include "maskfe/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace maskfe {

void Adam::step(std::vector<Parameter>& params, std::span<const ad::Tensor> grads) {
  if (grads.size() != params.size()) throw std::invalid_argument("adam: gradient count does not match parameters");
  if (m_.empty()) {
    for (const Parameter& p : params) {
      m_.push_back(ad::Tensor::zeros(p.value.shape()));
      v_.push_back(ad::Tensor::zeros(p.value.shape()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value.values();
    auto g = grads[i].values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    if (g.size() != w.size()) throw std::invalid_argument("adam: gradient shape mismatch for " + params[i].name);
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      w[j] -= config_.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.eps);
    }
  }
}

}  // namespace maskfe
