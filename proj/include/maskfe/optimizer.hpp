#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "maskfe/pipeline.hpp"

namespace maskfe {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // One update; grads[i] matches params[i].value in shape.
  void step(std::vector<Parameter>& params, std::span<const ad::Tensor> grads);
  std::size_t steps() const { return t_; }

 private:
  AdamConfig config_;
  std::size_t t_ = 0;
  std::vector<ad::Tensor> m_, v_;
};

}  // namespace maskfe
