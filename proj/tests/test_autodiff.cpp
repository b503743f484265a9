#include <doctest.h>

#include <cmath>

#include "maskfe/autodiff.hpp"
#include "maskfe/error.hpp"
#include "maskfe/gradcheck.hpp"

using namespace maskfe;
using namespace maskfe::ad;

TEST_CASE("matmul shape") {
  Tape t;
  Var a = t.constant(Tensor::zeros({2, 3}));
  Var b = t.constant(Tensor::zeros({3, 4}));
  CHECK(matmul(a, b).shape() == Shape{2, 4});
  CHECK_THROWS_AS(matmul(b, b), ShapeError);
}

TEST_CASE("softmax of equal logits is uniform") {
  Tape t;
  Var s = softmax(t.constant(Tensor::vector({0, 0, 0})));
  for (double v : s.value().values()) CHECK(v == doctest::Approx(1.0 / 3));
}

TEST_CASE("sum") {
  Tape t;
  CHECK(sum(t.constant(Tensor::vector({1, 2, 3}))).value().item() == 6.0);
}

TEST_CASE("gradient of a bilinear form") {
  Tape t;
  Var w = t.parameter(Tensor::vector({1, 2}));
  Var x = t.constant(Tensor::vector({3, 4}));
  Var loss = sum(mul(w, x));
  Gradients g = t.backward(loss);
  CHECK(g[w] == Tensor::vector({3, 4}));
  CHECK_FALSE(g.reached(x));
}

TEST_CASE("softmax jacobian at the origin") {
  Tape t;
  Var z = t.parameter(Tensor::vector({0, 0}));
  Var first = gather(softmax(z), std::vector<std::size_t>{0});
  Gradients g = t.backward(sum(first));
  CHECK(g[z][0] == doctest::Approx(0.25));
  CHECK(g[z][1] == doctest::Approx(-0.25));
}

TEST_CASE("unused parameter gets a zero gradient") {
  Tape t;
  Var a = t.parameter(Tensor::vector({1, 2}));
  Var b = t.parameter(Tensor::vector({5}));
  Gradients g = t.backward(sum(square(a)));
  CHECK(g[b] == Tensor::vector({0}));
}

TEST_CASE("backward is repeatable") {
  Tape t;
  Var a = t.parameter(Tensor::vector({0.3, -1.2, 2.0}));
  Var loss = sum(mul(exp(a), sigmoid(a)));
  Gradients g1 = t.backward(loss);
  Gradients g2 = t.backward(loss);
  CHECK(g1[a] == g2[a]);
}

TEST_CASE("shared subexpressions accumulate") {
  Tape t;
  Var x = t.parameter(Tensor::scalar(3.0));
  Var y = mul(x, x);
  Gradients g = t.backward(add(y, x));
  CHECK(g[x].item() == doctest::Approx(7.0));
}

TEST_CASE("product along an axis has exact gradients with zeros") {
  Tape t;
  Var x = t.parameter(Tensor::matrix(2, 3, {2, 3, 4, 0, 5, 6}));
  Var p = prod_axis(x, 1);
  CHECK(p.value() == Tensor::vector({24, 0}));
  Gradients g = t.backward(sum(p));
  CHECK(g[x] == Tensor::matrix(2, 3, {12, 8, 6, 30, 0, 0}));
}

TEST_CASE("axis reductions") {
  Tape t;
  Var x = t.parameter(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK(sum_axis(x, 0).value() == Tensor::vector({5, 7, 9}));
  CHECK(sum_axis(x, 1).value() == Tensor::vector({6, 15}));
  CHECK(mean_axis(x, 1).value() == Tensor::vector({2, 5}));
  Gradients g = t.backward(sum(mul(sum_axis(x, 0), t.constant(Tensor::vector({1, 2, 3})))));
  CHECK(g[x] == Tensor::matrix(2, 3, {1, 2, 3, 1, 2, 3}));
  CHECK_THROWS_AS(sum_axis(x, 2), ShapeError);
}

TEST_CASE("log_softmax matches log of softmax") {
  Tape t;
  Var z = t.constant(Tensor::matrix(2, 3, {1, 2, 3, -1, 0, 4}));
  const Tensor a = log_softmax(z).value();
  const Tensor b = softmax(z).value();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(std::log(b[i])));
}

TEST_CASE("concat, gather_cols and slice_cols route gradients") {
  Tape t;
  Var a = t.parameter(Tensor::matrix(2, 1, {1, 2}));
  Var b = t.parameter(Tensor::matrix(2, 2, {3, 4, 5, 6}));
  std::vector<Var> parts{a, b};
  Var c = concat(parts, 1);
  CHECK(c.value() == Tensor::matrix(2, 3, {1, 3, 4, 2, 5, 6}));
  Var picked = gather_cols(c, std::vector<std::size_t>{0, 2});
  CHECK(picked.value() == Tensor::matrix(2, 2, {1, 4, 2, 6}));
  CHECK(slice_cols(c, 1, 2).value() == Tensor::matrix(2, 1, {3, 5}));
  Gradients g = t.backward(sum(picked));
  CHECK(g[a] == Tensor::matrix(2, 1, {1, 1}));
  CHECK(g[b] == Tensor::matrix(2, 2, {0, 1, 0, 1}));
}

TEST_CASE("broadcasting sums gradients back") {
  Tape t;
  Var v = t.parameter(Tensor::vector({1, 2}));
  Var m = broadcast_rows(v, 3);
  CHECK(m.shape() == Shape{3, 2});
  Gradients g = t.backward(sum(m));
  CHECK(g[v] == Tensor::vector({3, 3}));
}

TEST_CASE("backward requires a scalar loss") {
  Tape t;
  Var v = t.parameter(Tensor::vector({1, 2}));
  CHECK_THROWS_AS(t.backward(v), ShapeError);
}

TEST_CASE("finite differences of x squared") {
  const double err = finite_difference_check([](Tape&, Var x) { return sum(square(x)); }, Tensor::scalar(3.0), 1e-5);
  CHECK(err < 1e-6);
}

TEST_CASE("finite difference step is bounded") {
  auto f = [](Tape&, Var x) { return sum(square(x)); };
  CHECK_THROWS_AS(finite_difference_check(f, Tensor::scalar(3.0), 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(finite_difference_check(f, Tensor::scalar(3.0), 1e-8), std::invalid_argument);
}

TEST_CASE("finite differences over a small network") {
  const Tensor w = Tensor::matrix(3, 2, {0.2, -0.4, 0.7, 0.1, -0.3, 0.5});
  const Tensor x = Tensor::matrix(4, 3, {1, 2, -1, 0.5, -0.3, 0.8, -1.1, 0.4, 0.2, 0.9, -0.7, 1.3});
  ScalarFunction f = [&](Tape& t, std::span<const Var> p) {
    Var h = sigmoid(matmul(t.constant(x), p[0]));
    return mean(log_softmax(mul(h, broadcast_rows(p[1], 4))));
  };
  std::vector<Tensor> params{w, Tensor::vector({1.5, -0.5})};
  const GradCheckResult r = finite_difference_check(f, params, 1e-6);
  CHECK(r.coordinates == 8);
  CHECK(r.max_relative_error < 1e-6);
}
