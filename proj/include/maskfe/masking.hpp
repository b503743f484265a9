#pragma once

// Learnable importance masks.
//
// A mask is a vector of logits over candidate positions (input features for
// local masks, concatenated transformed columns for the global mask, window
// steps for temporal masks). The forward pass takes a softmax over all
// logits, keeps the probabilities at the h largest logits and discards the
// rest without renormalizing. Discarded logits still receive gradient through
// the softmax normalizer.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "maskfe/autodiff.hpp"

namespace maskfe {

struct MaskParameters {
  ad::Tensor logits;
  std::size_t h = 1;

  // Logits i.i.d. uniform on [-scale, scale].
  static MaskParameters uniform(std::size_t length, std::size_t h, std::mt19937_64& rng, double scale = 0.01);
};

struct MaskOutput {
  std::vector<std::size_t> indices;  // strictly increasing
  std::vector<double> weights;       // softmax probability at each index
};

/// Indices of the h largest values, ties broken toward the smaller index,
/// returned in ascending order. Throws std::invalid_argument if h exceeds the
/// length or is zero.
std::vector<std::size_t> top_h_select(std::span<const double> logits, std::size_t h);

// Value-only evaluation of a mask (no tape).
MaskOutput mask_output(std::span<const double> logits, std::size_t h);

struct MaskedSelection {
  MaskOutput mask;
  ad::Var weights;   // (h) kept probabilities, differentiable w.r.t. logits
  ad::Var selected;  // (n,h) selected columns scaled by their weights
  ad::Tensor raw;    // (n,h) selected columns before weighting
};

/// Applies a mask to the columns of `x` (n, d). The dense mask (zeros at
/// discarded positions) multiplies every column before the kept ones are
/// gathered, so the result is exactly h columns wide.
MaskedSelection mask_forward(ad::Var logits, std::size_t h, ad::Var x);

// Same mechanics over the concatenated transformed features.
MaskedSelection global_mask_forward(ad::Var logits, std::size_t h_glb, ad::Var x_glb);

// Same mechanics along the time axis of a (n, L) window block.
MaskedSelection temporal_mask_forward(ad::Var logits, std::size_t h_t, ad::Var window);

}  // namespace maskfe
