#include "maskfe/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "maskfe/error.hpp"

namespace maskfe {

MaskParameters MaskParameters::uniform(std::size_t length, std::size_t h, std::mt19937_64& rng, double scale) {
  if (h == 0 || h > length) throw std::invalid_argument(fmt::format("mask: h={} invalid for length {}", h, length));
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> v(length);
  for (double& x : v) x = dist(rng);
  return MaskParameters{ad::Tensor::vector(std::move(v)), h};
}

std::vector<std::size_t> top_h_select(std::span<const double> logits, std::size_t h) {
  if (h == 0 || h > logits.size()) {
    throw std::invalid_argument(fmt::format("top_h_select: h={} invalid for {} logits", h, logits.size()));
  }
  std::vector<std::size_t> order(logits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h), order.end(),
                    [&](std::size_t a, std::size_t b) { return logits[a] > logits[b] || (logits[a] == logits[b] && a < b); });
  order.resize(h);
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

std::vector<double> softmax_values(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i] - mx));
  for (double& v : p) v /= z;
  return p;
}

}  // namespace

MaskOutput mask_output(std::span<const double> logits, std::size_t h) {
  MaskOutput out;
  out.indices = top_h_select(logits, h);
  // Same arithmetic as ad::softmax so tape and value-only paths agree bitwise.
  const std::vector<double> p = softmax_values(logits);
  for (std::size_t i : out.indices) out.weights.push_back(p[i]);
  return out;
}

MaskedSelection mask_forward(ad::Var logits, std::size_t h, ad::Var x) {
  const ad::Tensor& lv = logits.value();
  if (lv.rank() != 1) throw ShapeError(fmt::format("mask_forward: logits must be a vector, got {}", ad::shape_string(lv.shape())));
  if (x.value().rank() != 2 || x.shape()[1] != lv.size()) {
    throw ShapeError(fmt::format("mask_forward: {} logits do not match input {}", lv.size(), ad::shape_string(x.shape())));
  }
  ad::Tape& tape = *logits.tape();
  const std::size_t n = x.shape()[0];
  const std::size_t d = lv.size();

  MaskedSelection out;
  out.mask.indices = top_h_select(lv.values(), h);

  const ad::Var probs = ad::softmax(logits);
  std::vector<double> keep(d, 0.0);
  for (std::size_t i : out.mask.indices) keep[i] = 1.0;
  const ad::Var dense = ad::mul(probs, tape.constant(ad::Tensor::vector(std::move(keep))));
  const ad::Var weighted = ad::mul(x, ad::broadcast_rows(dense, n));
  out.selected = ad::gather_cols(weighted, out.mask.indices);
  out.weights = ad::gather(probs, out.mask.indices);
  for (std::size_t j = 0; j < h; ++j) out.mask.weights.push_back(out.weights.value()[j]);

  out.raw = ad::Tensor::zeros({n, h});
  const ad::Tensor& xv = x.value();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < h; ++j) out.raw[r * h + j] = xv[r * d + out.mask.indices[j]];
  return out;
}

MaskedSelection global_mask_forward(ad::Var logits, std::size_t h_glb, ad::Var x_glb) {
  return mask_forward(logits, h_glb, x_glb);
}

MaskedSelection temporal_mask_forward(ad::Var logits, std::size_t h_t, ad::Var window) {
  return mask_forward(logits, h_t, window);
}

}  // namespace maskfe
