#include "maskfe/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "maskfe/error.hpp"

namespace maskfe::ad {

// ---------------------------------------------------------------------------
// Tape

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::parameter(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardRule rule) {
  bool needs = false;
  for (std::size_t p : parents) needs = needs || nodes_[p].requires_grad;
  if (!needs) rule = nullptr;
  nodes_.push_back(Node{std::move(value), std::move(parents), std::move(rule), needs});
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(Var loss) const {
  if (loss.tape() != this) throw Error("backward: loss belongs to a different tape");
  const Tensor& l = value(loss.id());
  if (l.size() != 1) {
    throw ShapeError(fmt::format("backward: loss must be scalar, got shape {}", shape_string(l.shape())));
  }
  std::vector<Tensor> grads(nodes_.size());
  GradSink sink(*this, grads);
  if (nodes_[loss.id()].requires_grad) {
    grads[loss.id()] = Tensor::filled(l.shape(), 1.0);
  }
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.rule || grads[i].shape() != node.value.shape()) continue;
    node.rule(grads[i], sink);
    if (i != loss.id()) grads[i] = Tensor();
  }
  return Gradients(*this, std::move(grads));
}

Tensor* GradSink::buffer(std::size_t parent) {
  if (!tape_.requires_grad(parent)) return nullptr;
  Tensor& g = grads_[parent];
  const Tensor& v = tape_.value(parent);
  if (g.shape() != v.shape()) g = Tensor::zeros(v.shape());
  return &g;
}

void GradSink::accumulate(std::size_t parent, const Tensor& g) {
  Tensor* buf = buffer(parent);
  if (buf == nullptr) return;
  auto dst = buf->values();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Gradients::Gradients(const Tape& tape, std::vector<Tensor> grads) : tape_(&tape), grads_(std::move(grads)) {}

bool Gradients::reached(Var v) const {
  return v.id() < grads_.size() && grads_[v.id()].shape() == tape_->value(v.id()).shape();
}

Tensor Gradients::operator[](Var v) const {
  if (reached(v)) return grads_[v.id()];
  return Tensor::zeros(tape_->value(v.id()).shape());
}

// ---------------------------------------------------------------------------
// helpers

namespace {

Tape& tape_of(Var a, const char* op) {
  if (a.tape() == nullptr) throw Error(fmt::format("{}: uninitialized variable", op));
  return *a.tape();
}

Tape& tape_of(Var a, Var b, const char* op) {
  Tape& t = tape_of(a, op);
  if (b.tape() != &t) throw Error(fmt::format("{}: operands live on different tapes", op));
  return t;
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(fmt::format("{}: shape mismatch {} vs {}", op, shape_string(a.shape()), shape_string(b.shape())));
  }
}

void require_matrix(const char* op, Var a) {
  if (a.value().rank() != 2) {
    throw ShapeError(fmt::format("{}: expected a matrix, got shape {}", op, shape_string(a.shape())));
  }
}

// Elementwise unary op where the derivative is expressed from input x and
// output y.
template <class F, class D>
Var unary(Var a, const char* op, F f, D dfdx) {
  Tape& t = tape_of(a, op);
  const Tensor& x = a.value();
  Tensor out = x;
  for (double& v : out.values()) v = f(v);
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.record(std::move(out), {ia}, [&t, ia, io, dfdx](const Tensor& g, GradSink& s) {
    Tensor* buf = s.buffer(ia);
    if (buf == nullptr) return;
    const auto x = t.value(ia).values();
    const auto y = t.value(io).values();
    auto dst = buf->values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * dfdx(x[i], y[i]);
  });
}

double stable_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sign(double x) { return (x > 0) - (x < 0); }

}  // namespace

// ---------------------------------------------------------------------------
// elementwise binary

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b, "add");
  require_same_shape("add", a, b);
  Tensor out = a.value();
  auto bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](const Tensor& g, GradSink& s) {
    s.accumulate(ia, g);
    s.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b, "sub");
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  auto bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](const Tensor& g, GradSink& s) {
    s.accumulate(ia, g);
    if (Tensor* buf = s.buffer(ib)) {
      for (std::size_t i = 0; i < buf->size(); ++i) (*buf)[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b, "mul");
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  auto bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [&t, ia, ib](const Tensor& g, GradSink& s) {
    if (Tensor* buf = s.buffer(ia)) {
      auto bv = t.value(ib).values();
      for (std::size_t i = 0; i < buf->size(); ++i) (*buf)[i] += g[i] * bv[i];
    }
    if (Tensor* buf = s.buffer(ib)) {
      auto av = t.value(ia).values();
      for (std::size_t i = 0; i < buf->size(); ++i) (*buf)[i] += g[i] * av[i];
    }
  });
}

Var div(Var a, Var b) {
  Tape& t = tape_of(a, b, "div");
  require_same_shape("div", a, b);
  Tensor out = a.value();
  auto bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  const std::size_t io = t.size();
  return t.record(std::move(out), {ia, ib}, [&t, ia, ib, io](const Tensor& g, GradSink& s) {
    auto bv = t.value(ib).values();
    if (Tensor* buf = s.buffer(ia)) {
      for (std::size_t i = 0; i < buf->size(); ++i) (*buf)[i] += g[i] / bv[i];
    }
    if (Tensor* buf = s.buffer(ib)) {
      auto ov = t.value(io).values();
      for (std::size_t i = 0; i < buf->size(); ++i) (*buf)[i] -= g[i] * ov[i] / bv[i];
    }
  });
}

Var pow(Var base, Var exponent) {
  Tape& t = tape_of(base, exponent, "pow");
  require_same_shape("pow", base, exponent);
  Tensor out = base.value();
  auto ev = exponent.value().values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::pow(out[i], ev[i]);
  const std::size_t ib = base.id(), ie = exponent.id();
  const std::size_t io = t.size();
  return t.record(std::move(out), {ib, ie}, [&t, ib, ie, io](const Tensor& g, GradSink& s) {
    auto bv = t.value(ib).values();
    auto ev = t.value(ie).values();
    if (Tensor* buf = s.buffer(ib)) {
      for (std::size_t i = 0; i < buf->size(); ++i) (*buf)[i] += g[i] * ev[i] * std::pow(bv[i], ev[i] - 1.0);
    }
    if (Tensor* buf = s.buffer(ie)) {
      auto ov = t.value(io).values();
      for (std::size_t i = 0; i < buf->size(); ++i) (*buf)[i] += g[i] * ov[i] * std::log(bv[i]);
    }
  });
}

Var pow(Var base, double exponent) {
  return unary(
      base, "pow", [exponent](double x) { return std::pow(x, exponent); },
      [exponent](double x, double) { return exponent * std::pow(x, exponent - 1.0); });
}

// ---------------------------------------------------------------------------
// elementwise unary

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double factor) {
  return unary(a, "scale", [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double c) {
  return unary(a, "add_scalar", [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var exp(Var a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var abs(Var a) {
  return unary(a, "abs", [](double x) { return std::abs(x); }, [](double x, double) { return sign(x); });
}

Var sqrt(Var a) {
  return unary(a, "sqrt", [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var square(Var a) {
  return unary(a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sigmoid(Var a) {
  return unary(a, "sigmoid", logistic, [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Var a) {
  return unary(a, "softplus", stable_softplus, [](double x, double) { return logistic(x); });
}

Var relu(Var a) {
  return unary(a, "relu", [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// broadcasting

Var broadcast_rows(Var v, std::size_t rows) {
  Tape& t = tape_of(v, "broadcast_rows");
  const Shape& s = v.shape();
  const bool ok = s.size() == 1 || (s.size() == 2 && s[0] == 1);
  if (!ok) throw ShapeError(fmt::format("broadcast_rows: expected (m) or (1,m), got {}", shape_string(s)));
  const std::size_t m = s.back();
  Tensor out = Tensor::zeros({rows, m});
  auto src = v.value().values();
  for (std::size_t r = 0; r < rows; ++r) std::copy(src.begin(), src.end(), out.values().begin() + r * m);
  const std::size_t iv = v.id();
  return t.record(std::move(out), {iv}, [iv, rows, m](const Tensor& g, GradSink& sink) {
    Tensor* buf = sink.buffer(iv);
    if (buf == nullptr) return;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < m; ++c) (*buf)[c] += g[r * m + c];
  });
}

Var broadcast_cols(Var v, std::size_t cols) {
  Tape& t = tape_of(v, "broadcast_cols");
  const Shape& s = v.shape();
  const bool ok = s.size() == 1 || (s.size() == 2 && s[1] == 1);
  if (!ok) throw ShapeError(fmt::format("broadcast_cols: expected (n) or (n,1), got {}", shape_string(s)));
  const std::size_t n = s[0];
  Tensor out = Tensor::zeros({n, cols});
  auto src = v.value().values();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = src[r];
  const std::size_t iv = v.id();
  return t.record(std::move(out), {iv}, [iv, n, cols](const Tensor& g, GradSink& sink) {
    Tensor* buf = sink.buffer(iv);
    if (buf == nullptr) return;
    for (std::size_t r = 0; r < n; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c) acc += g[r * cols + c];
      (*buf)[r] += acc;
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tape& t = tape_of(a, "reshape");
  if (element_count(shape) != a.value().size()) {
    throw ShapeError(fmt::format("reshape: cannot view {} as {}", shape_string(a.shape()), shape_string(shape)));
  }
  Tensor out(std::move(shape), std::vector<double>(a.value().values().begin(), a.value().values().end()));
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia](const Tensor& g, GradSink& s) {
    if (Tensor* buf = s.buffer(ia)) {
      for (std::size_t i = 0; i < buf->size(); ++i) (*buf)[i] += g[i];
    }
  });
}

// ---------------------------------------------------------------------------
// linear algebra and reductions

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b, "matmul");
  if (a.value().rank() != 2 || b.value().rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ShapeError(
        fmt::format("matmul: incompatible shapes {} x {}", shape_string(a.shape()), shape_string(b.shape())));
  }
  const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
  Tensor out = Tensor::zeros({n, m});
  const auto av = a.value().values();
  const auto bv = b.value().values();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = out.values().data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [&t, ia, ib, n, k, m](const Tensor& g, GradSink& s) {
    const auto av = t.value(ia).values();
    const auto bv = t.value(ib).values();
    if (Tensor* da = s.buffer(ia)) {
      // dA = G * B^T
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = g.values().data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = bv.data() + p * m;
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
          (*da)[i * k + p] += acc;
        }
      }
    }
    if (Tensor* db = s.buffer(ib)) {
      // dB = A^T * G
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = g.values().data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          if (aip == 0.0) continue;
          double* drow = db->values().data() + p * m;
          for (std::size_t j = 0; j < m; ++j) drow[j] += aip * grow[j];
        }
      }
    }
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a, "sum");
  double acc = 0.0;
  for (double v : a.value().values()) acc += v;
  const std::size_t ia = a.id();
  return t.record(Tensor::scalar(acc), {ia}, [ia](const Tensor& g, GradSink& s) {
    if (Tensor* buf = s.buffer(ia)) {
      for (double& v : buf->values()) v += g[0];
    }
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

namespace {

struct AxisLayout {
  std::size_t groups;  // length of the result
  std::size_t length;  // elements reduced per group
  std::size_t group_stride;
  std::size_t elem_stride;
  std::size_t index(std::size_t g, std::size_t e) const { return g * group_stride + e * elem_stride; }
};

AxisLayout axis_layout(const char* op, Var a, std::size_t axis) {
  require_matrix(op, a);
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  if (axis == 0) return {m, n, 1, m};
  if (axis == 1) return {n, m, m, 1};
  throw ShapeError(fmt::format("{}: axis {} out of range for {}", op, axis, shape_string(a.shape())));
}

// Visits (group, flat index) pairs in memory order.
template <class F>
void for_each_in_order(const AxisLayout& L, F&& f) {
  if (L.group_stride == 1) {
    for (std::size_t e = 0; e < L.length; ++e)
      for (std::size_t g = 0; g < L.groups; ++g) f(g, L.index(g, e));
  } else {
    for (std::size_t g = 0; g < L.groups; ++g)
      for (std::size_t e = 0; e < L.length; ++e) f(g, L.index(g, e));
  }
}

}  // namespace

Var sum_axis(Var a, std::size_t axis) {
  Tape& t = tape_of(a, "sum_axis");
  const AxisLayout L = axis_layout("sum_axis", a, axis);
  Tensor out = Tensor::zeros({L.groups});
  const auto av = a.value().values();
  for_each_in_order(L, [&](std::size_t g, std::size_t i) { out[g] += av[i]; });
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia, L](const Tensor& up, GradSink& s) {
    Tensor* buf = s.buffer(ia);
    if (buf == nullptr) return;
    for_each_in_order(L, [&](std::size_t g, std::size_t i) { (*buf)[i] += up[g]; });
  });
}

Var mean_axis(Var a, std::size_t axis) {
  const AxisLayout L = axis_layout("mean_axis", a, axis);
  if (L.length == 0) throw ShapeError("mean_axis: empty axis");
  return scale(sum_axis(a, axis), 1.0 / static_cast<double>(L.length));
}

Var prod_axis(Var a, std::size_t axis) {
  Tape& t = tape_of(a, "prod_axis");
  const AxisLayout L = axis_layout("prod_axis", a, axis);
  Tensor out = Tensor::filled({L.groups}, 1.0);
  const auto av = a.value().values();
  for (std::size_t g = 0; g < L.groups; ++g)
    for (std::size_t e = 0; e < L.length; ++e) out[g] *= av[L.index(g, e)];
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [&t, ia, L](const Tensor& up, GradSink& s) {
    Tensor* buf = s.buffer(ia);
    if (buf == nullptr) return;
    const auto av = t.value(ia).values();
    // Product of all other entries via prefix/suffix products (exact with zeros).
    std::vector<double> prefix(L.length + 1), suffix(L.length + 1);
    for (std::size_t g = 0; g < L.groups; ++g) {
      prefix[0] = 1.0;
      for (std::size_t e = 0; e < L.length; ++e) prefix[e + 1] = prefix[e] * av[L.index(g, e)];
      suffix[L.length] = 1.0;
      for (std::size_t e = L.length; e-- > 0;) suffix[e] = suffix[e + 1] * av[L.index(g, e)];
      for (std::size_t e = 0; e < L.length; ++e) (*buf)[L.index(g, e)] += up[g] * prefix[e] * suffix[e + 1];
    }
  });
}

namespace {

// Row layout for softmax: vectors are a single row.
std::pair<std::size_t, std::size_t> rows_and_width(const char* op, Var a) {
  const Shape& s = a.shape();
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  throw ShapeError(fmt::format("{}: expected vector or matrix, got {}", op, shape_string(s)));
}

}  // namespace

Var softmax(Var a) {
  Tape& t = tape_of(a, "softmax");
  const auto [rows, width] = rows_and_width("softmax", a);
  Tensor out = a.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.values().data() + r * width;
    const double mx = *std::max_element(row, row + width);
    double z = 0.0;
    for (std::size_t j = 0; j < width; ++j) z += (row[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < width; ++j) row[j] /= z;
  }
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.record(std::move(out), {ia}, [&t, ia, io, rows, width](const Tensor& g, GradSink& s) {
    Tensor* buf = s.buffer(ia);
    if (buf == nullptr) return;
    const auto y = t.value(io).values();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * width;
      double dot = 0.0;
      for (std::size_t j = 0; j < width; ++j) dot += g[o + j] * y[o + j];
      for (std::size_t j = 0; j < width; ++j) (*buf)[o + j] += y[o + j] * (g[o + j] - dot);
    }
  });
}

Var log_softmax(Var a) {
  Tape& t = tape_of(a, "log_softmax");
  const auto [rows, width] = rows_and_width("log_softmax", a);
  Tensor out = a.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.values().data() + r * width;
    const double mx = *std::max_element(row, row + width);
    double z = 0.0;
    for (std::size_t j = 0; j < width; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < width; ++j) row[j] -= lse;
  }
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.record(std::move(out), {ia}, [&t, ia, io, rows, width](const Tensor& g, GradSink& s) {
    Tensor* buf = s.buffer(ia);
    if (buf == nullptr) return;
    const auto y = t.value(io).values();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * width;
      double gsum = 0.0;
      for (std::size_t j = 0; j < width; ++j) gsum += g[o + j];
      for (std::size_t j = 0; j < width; ++j) (*buf)[o + j] += g[o + j] - std::exp(y[o + j]) * gsum;
    }
  });
}

// ---------------------------------------------------------------------------
// structural

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Tape& t = tape_of(parts[0], "concat");
  for (const Var& p : parts) tape_of(parts[0], p, "concat");
  const std::size_t rank = parts[0].value().rank();
  std::vector<std::size_t> ids;
  std::vector<std::size_t> widths;
  if (rank == 1 && axis == 0) {
    std::vector<double> vals;
    for (const Var& p : parts) {
      if (p.value().rank() != 1) throw ShapeError(fmt::format("concat: mixed ranks, got {}", shape_string(p.shape())));
      vals.insert(vals.end(), p.value().values().begin(), p.value().values().end());
      ids.push_back(p.id());
      widths.push_back(p.value().size());
    }
    return t.record(Tensor::vector(std::move(vals)), ids, [ids, widths](const Tensor& g, GradSink& s) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (Tensor* buf = s.buffer(ids[k])) {
          for (std::size_t i = 0; i < widths[k]; ++i) (*buf)[i] += g[off + i];
        }
        off += widths[k];
      }
    });
  }
  if (rank == 2 && axis == 1) {
    const std::size_t n = parts[0].shape()[0];
    std::size_t total = 0;
    for (const Var& p : parts) {
      if (p.value().rank() != 2 || p.shape()[0] != n) {
        throw ShapeError(fmt::format("concat: row mismatch {} vs {}", shape_string(parts[0].shape()),
                                     shape_string(p.shape())));
      }
      ids.push_back(p.id());
      widths.push_back(p.shape()[1]);
      total += p.shape()[1];
    }
    Tensor out = Tensor::zeros({n, total});
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto src = parts[k].value().values();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < widths[k]; ++c) out[r * total + off + c] = src[r * widths[k] + c];
      off += widths[k];
    }
    return t.record(std::move(out), ids, [ids, widths, n, total](const Tensor& g, GradSink& s) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (Tensor* buf = s.buffer(ids[k])) {
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < widths[k]; ++c) (*buf)[r * widths[k] + c] += g[r * total + off + c];
        }
        off += widths[k];
      }
    });
  }
  throw ShapeError(fmt::format("concat: unsupported rank {} / axis {}", rank, axis));
}

Var gather(Var v, std::span<const std::size_t> indices) {
  Tape& t = tape_of(v, "gather");
  if (v.value().rank() != 1) throw ShapeError(fmt::format("gather: expected vector, got {}", shape_string(v.shape())));
  const std::size_t len = v.value().size();
  std::vector<double> vals;
  vals.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= len) throw ShapeError(fmt::format("gather: index {} out of range for {}", i, shape_string(v.shape())));
    vals.push_back(v.value()[i]);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  const std::size_t iv = v.id();
  return t.record(Tensor::vector(std::move(vals)), {iv}, [iv, idx](const Tensor& g, GradSink& s) {
    if (Tensor* buf = s.buffer(iv)) {
      for (std::size_t j = 0; j < idx.size(); ++j) (*buf)[idx[j]] += g[j];
    }
  });
}

Var gather_cols(Var m, std::span<const std::size_t> indices) {
  Tape& t = tape_of(m, "gather_cols");
  require_matrix("gather_cols", m);
  const std::size_t n = m.shape()[0], w = m.shape()[1], h = indices.size();
  for (std::size_t i : indices) {
    if (i >= w) throw ShapeError(fmt::format("gather_cols: column {} out of range for {}", i, shape_string(m.shape())));
  }
  Tensor out = Tensor::zeros({n, h});
  const auto src = m.value().values();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < h; ++j) out[r * h + j] = src[r * w + indices[j]];
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  const std::size_t im = m.id();
  return t.record(std::move(out), {im}, [im, idx, n, w, h](const Tensor& g, GradSink& s) {
    if (Tensor* buf = s.buffer(im)) {
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < h; ++j) (*buf)[r * w + idx[j]] += g[r * h + j];
    }
  });
}

Var slice_cols(Var m, std::size_t begin, std::size_t end) {
  require_matrix("slice_cols", m);
  if (begin > end || end > m.shape()[1]) {
    throw ShapeError(fmt::format("slice_cols: range [{}, {}) invalid for {}", begin, end, shape_string(m.shape())));
  }
  std::vector<std::size_t> idx(end - begin);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
  return gather_cols(m, idx);
}

}  // namespace maskfe::ad
