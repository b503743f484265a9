#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "maskfe/masking.hpp"

using namespace maskfe;
using ad::Tape;
using ad::Tensor;

TEST_CASE("top-h selection") {
  CHECK(top_h_select(std::vector<double>{0.5, 0.1, 0.9}, 2) == std::vector<std::size_t>{0, 2});
  CHECK(top_h_select(std::vector<double>{1, 1, 1, 1}, 2) == std::vector<std::size_t>{0, 1});
  CHECK(top_h_select(std::vector<double>{3, 1, 2}, 3) == std::vector<std::size_t>{0, 1, 2});
  CHECK_THROWS_AS(top_h_select(std::vector<double>{1, 2}, 3), std::invalid_argument);
  CHECK_THROWS_AS(top_h_select(std::vector<double>{1, 2}, 0), std::invalid_argument);
}

TEST_CASE("mask weights are softmax probabilities without renormalization") {
  MaskOutput m = mask_output(std::vector<double>{0, 0, 0, 0}, 2);
  CHECK(m.indices == std::vector<std::size_t>{0, 1});
  CHECK(m.weights[0] == doctest::Approx(0.25));
  CHECK(m.weights[1] == doctest::Approx(0.25));

  m = mask_output(std::vector<double>{2, 0, 0}, 1);
  CHECK(m.indices == std::vector<std::size_t>{0});
  CHECK(m.weights[0] == doctest::Approx(0.7870).epsilon(1e-4));
  CHECK(m.weights[0] == doctest::Approx(std::exp(2.0) / (std::exp(2.0) + 2)));
}

TEST_CASE("masked selection scales the kept columns") {
  Tape t;
  auto logits = t.parameter(Tensor::vector({1, 0, 2}));
  auto x = t.constant(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  MaskedSelection s = mask_forward(logits, 2, x);
  CHECK(s.mask.indices == std::vector<std::size_t>{0, 2});
  CHECK(s.selected.shape() == ad::Shape{2, 2});
  CHECK(s.raw == Tensor::matrix(2, 2, {1, 3, 4, 6}));
  const double z = std::exp(1.0) + 1 + std::exp(2.0);
  CHECK(s.selected.value().at(1, 1) == doctest::Approx(6 * std::exp(2.0) / z));
}

TEST_CASE("discarded logits still get gradient through the normalizer") {
  Tape t;
  auto logits = t.parameter(Tensor::vector({1, 0, 2}));
  auto x = t.constant(Tensor::matrix(1, 3, {1, 1, 1}));
  MaskedSelection s = mask_forward(logits, 2, x);
  ad::Gradients g = t.backward(ad::sum(s.selected));
  CHECK(g[logits][1] != 0.0);
  CHECK(g[logits][1] < 0.0);
}

TEST_CASE("non-selected columns do not affect the output") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    MaskParameters p = MaskParameters::uniform(7, 3, rng, 1.0);
    std::vector<double> values(5 * 7);
    for (double& v : values) v = nd(rng);
    Tape t1;
    MaskedSelection a = mask_forward(t1.constant(p.logits), 3, t1.constant(Tensor::matrix(5, 7, values)));
    for (std::size_t c = 0; c < 7; ++c) {
      if (std::find(a.mask.indices.begin(), a.mask.indices.end(), c) != a.mask.indices.end()) continue;
      for (std::size_t r = 0; r < 5; ++r) values[r * 7 + c] = nd(rng) * 100;
    }
    Tape t2;
    MaskedSelection b = mask_forward(t2.constant(p.logits), 3, t2.constant(Tensor::matrix(5, 7, values)));
    CHECK(a.selected.value() == b.selected.value());
  }
}

TEST_CASE("global mask keeps the smallest indices under uniform logits") {
  Tape t;
  auto x = t.constant(Tensor::filled({3, 40}, 1.0));
  MaskedSelection s = global_mask_forward(t.parameter(Tensor::zeros({40})), 16, x);
  CHECK(s.selected.shape() == ad::Shape{3, 16});
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(s.mask.indices[i] == i);
    CHECK(s.mask.weights[i] == doctest::Approx(1.0 / 40));
  }
}

TEST_CASE("dominant logit is always selected") {
  std::vector<double> logits(40, 0.0);
  logits[33] = 5.0;
  const MaskOutput m = mask_output(logits, 16);
  CHECK(std::find(m.indices.begin(), m.indices.end(), 33) != m.indices.end());
}

TEST_CASE("temporal mask over a window") {
  Tape t;
  auto w = t.constant(Tensor::matrix(1, 8, {1, 2, 3, 4, 5, 6, 7, 8}));
  MaskedSelection s = temporal_mask_forward(t.parameter(Tensor::zeros({8})), 5, w);
  CHECK(s.mask.indices == std::vector<std::size_t>{0, 1, 2, 3, 4});
  for (double v : s.mask.weights) CHECK(v == doctest::Approx(0.125));
  CHECK(s.selected.value().at(0, 4) == doctest::Approx(5 * 0.125));
}

TEST_CASE("uniform initialization stays within the scale") {
  std::mt19937_64 rng(3);
  MaskParameters p = MaskParameters::uniform(100, 5, rng);
  CHECK(p.h == 5);
  for (double v : p.logits.values()) CHECK(std::abs(v) <= 0.01);
}
