#include "maskfe/gaussian_approx.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "maskfe/error.hpp"
#include "maskfe/parallel.hpp"

namespace maskfe::gauss {

double evaluate(const Component& g, std::span<const double> x) {
  double q = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) q += (x[d] - g.mu[d]) * (x[d] - g.mu[d]);
  return g.c * std::exp(-q / (2.0 * g.s * g.s));
}

double GaussianSum::operator()(std::span<const double> x) const {
  double acc = 0.0;
  for (const Component& g : components) acc += evaluate(g, x);
  return acc;
}

const std::vector<Target>& corpus() {
  static const std::vector<Target> targets{
      {"sin", 1, [](std::span<const double> x) { return std::sin(x[0]); }},
      {"abs", 1, [](std::span<const double> x) { return std::sqrt(x[0] * x[0] + 0.01); }},
      {"step", 1, [](std::span<const double> x) { return 1.0 / (1.0 + std::exp(-5.0 * x[0])); }},
      {"ripple", 2, [](std::span<const double> x) { return std::cos(std::hypot(x[0], x[1])); }},
  };
  return targets;
}

const Target& find_target(std::string_view id) {
  for (const Target& t : corpus())
    if (t.id == id) return t;
  throw std::invalid_argument(fmt::format("unknown target '{}' (sin, abs, step, ripple)", id));
}

std::vector<double> axis(double N, std::size_t resolution) {
  if (resolution < 2) throw std::invalid_argument("axis: resolution must be at least 2");
  std::vector<double> out(resolution);
  for (std::size_t i = 0; i < resolution; ++i) {
    out[i] = -N + 2.0 * N * static_cast<double>(i) / static_cast<double>(resolution - 1);
  }
  return out;
}

namespace {

// Values over a grid that is the product of `xs` and `ys` (ys = {0} in 1-D).
struct Grid {
  std::vector<double> xs, ys;
  std::vector<double> values;  // xs.size() x ys.size()
};

Grid make_grid(const Target& t, double N, std::size_t resolution) {
  Grid g{axis(N, resolution), t.dim == 2 ? axis(N, resolution) : std::vector<double>{0.0}, {}};
  g.values.reserve(g.xs.size() * g.ys.size());
  for (double x : g.xs) {
    for (double y : g.ys) {
      const double p[] = {x, y};
      g.values.push_back(t.f(std::span(p, t.dim)));
    }
  }
  return g;
}

}  // namespace

GaussianSum fit_gaussian_sum(const Target& target, std::size_t K, double N, std::uint64_t seed, const FitConfig& cfg) {
  if (K == 0) throw std::invalid_argument("fit_gaussian_sum: K must be at least 1");
  if (cfg.resolution < 256) throw std::invalid_argument("fit_gaussian_sum: need at least 256 grid points per axis");
  if (!(N > 0.0)) throw std::invalid_argument("fit_gaussian_sum: N must be positive");
  const std::size_t dim = target.dim;
  const Grid grid = make_grid(target, N, cfg.resolution);
  const std::size_t nx = grid.xs.size(), ny = grid.ys.size();
  const double M = static_cast<double>(nx * ny);

  // Per component: c, mu (dim), log s.
  const std::size_t stride = dim + 2;
  std::vector<double> theta(K * stride);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> centre(-N, N);
  for (std::size_t i = 0; i < K; ++i) {
    theta[i * stride] = 0.0;
    for (std::size_t d = 0; d < dim; ++d) theta[i * stride + 1 + d] = centre(rng);
    theta[i * stride + 1 + dim] = std::log(2.0 * N / static_cast<double>(K));
  }

  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0), grad(theta.size());
  std::vector<double> err(nx * ny);
  std::vector<double> ex(K * nx), ey(K * ny);
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    for (std::size_t i = 0; i < K; ++i) {
      const double s = std::exp(theta[i * stride + 1 + dim]);
      const double inv = 1.0 / (2.0 * s * s);
      for (std::size_t a = 0; a < nx; ++a) {
        const double dx = grid.xs[a] - theta[i * stride + 1];
        ex[i * nx + a] = std::exp(-dx * dx * inv);
      }
      for (std::size_t b = 0; b < ny; ++b) {
        const double dy = dim == 2 ? grid.ys[b] - theta[i * stride + 2] : 0.0;
        ey[i * ny + b] = std::exp(-dy * dy * inv);
      }
    }
    double loss = 0.0;
    for (std::size_t a = 0; a < nx; ++a) {
      for (std::size_t b = 0; b < ny; ++b) {
        double f = 0.0;
        for (std::size_t i = 0; i < K; ++i) f += theta[i * stride] * ex[i * nx + a] * ey[i * ny + b];
        const double e = f - grid.values[a * ny + b];
        err[a * ny + b] = e;
        loss += e * e;
      }
    }
    if (!std::isfinite(loss)) {
      throw NumericError(fmt::format("fit_gaussian_sum: loss diverged at iteration {}; try a smaller learning rate", it));
    }
    for (std::size_t i = 0; i < K; ++i) {
      const double c = theta[i * stride];
      const double mx = theta[i * stride + 1];
      const double my = dim == 2 ? theta[i * stride + 2] : 0.0;
      const double s = std::exp(theta[i * stride + 1 + dim]);
      const double s2 = s * s;
      double g_c = 0.0, g_mx = 0.0, g_my = 0.0, g_r = 0.0;
      for (std::size_t a = 0; a < nx; ++a) {
        // Row sums over y of e * ey, e * ey * dy and e * ey * dy^2.
        double r0 = 0.0, r1 = 0.0, r2 = 0.0;
        for (std::size_t b = 0; b < ny; ++b) {
          const double w = err[a * ny + b] * ey[i * ny + b];
          const double dy = dim == 2 ? grid.ys[b] - my : 0.0;
          r0 += w;
          r1 += w * dy;
          r2 += w * dy * dy;
        }
        const double dx = grid.xs[a] - mx;
        const double e_x = ex[i * nx + a];
        g_c += e_x * r0;
        g_mx += e_x * r0 * dx;
        g_my += e_x * r1;
        g_r += e_x * (r0 * dx * dx + r2);
      }
      const double k = 2.0 / M;
      grad[i * stride] = k * g_c;
      grad[i * stride + 1] = k * c * g_mx / s2;
      if (dim == 2) grad[i * stride + 2] = k * c * g_my / s2;
      grad[i * stride + 1 + dim] = k * c * g_r / s2;
    }
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(it));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(it));
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * grad[j];
      v[j] = b2 * v[j] + (1.0 - b2) * grad[j] * grad[j];
      theta[j] -= cfg.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
    }
  }

  GaussianSum out{dim, {}};
  for (std::size_t i = 0; i < K; ++i) {
    Component g;
    g.c = theta[i * stride];
    g.mu.assign(theta.begin() + static_cast<std::ptrdiff_t>(i * stride + 1),
                theta.begin() + static_cast<std::ptrdiff_t>(i * stride + 1 + dim));
    g.s = std::exp(theta[i * stride + 1 + dim]);
    out.components.push_back(std::move(g));
  }
  return out;
}

double uniform_error(const Target& target, const GaussianSum& sum, double N, std::size_t resolution) {
  const Grid grid = make_grid(target, N, resolution);
  double worst = 0.0;
  for (std::size_t a = 0; a < grid.xs.size(); ++a) {
    for (std::size_t b = 0; b < grid.ys.size(); ++b) {
      const double p[] = {grid.xs[a], grid.ys[b]};
      worst = std::max(worst, std::abs(grid.values[a * grid.ys.size() + b] - sum(std::span(p, target.dim))));
    }
  }
  return worst;
}

Component product(const Component& a, const Component& b) {
  if (a.mu.size() != b.mu.size()) throw std::invalid_argument("product: dimension mismatch");
  const double pa = 1.0 / (a.s * a.s), pb = 1.0 / (b.s * b.s);
  const double s2 = 1.0 / (pa + pb);
  Component out;
  double q = 0.0;
  for (std::size_t d = 0; d < a.mu.size(); ++d) {
    out.mu.push_back(s2 * (a.mu[d] * pa + b.mu[d] * pb));
    q += (a.mu[d] - b.mu[d]) * (a.mu[d] - b.mu[d]);
  }
  out.s = std::sqrt(s2);
  out.c = a.c * b.c * std::exp(-q / (2.0 * (a.s * a.s + b.s * b.s)));
  return out;
}

GaussianSum product(const GaussianSum& a, const GaussianSum& b) {
  if (a.dim != b.dim) throw std::invalid_argument("product: dimension mismatch");
  GaussianSum out{a.dim, {}};
  for (const Component& x : a.components)
    for (const Component& y : b.components) out.components.push_back(product(x, y));
  return out;
}

bool AlgebraReport::passed(double tolerance) const {
  return product_error < tolerance && closure_error < tolerance && separates && positive;
}

AlgebraReport verify_algebra(std::uint64_t seed, std::size_t trials) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-3.0, 3.0), width(0.5, 2.0), coef(-2.0, 2.0);
  auto random_component = [&](std::size_t dim) {
    Component g{coef(rng), {}, width(rng)};
    for (std::size_t d = 0; d < dim; ++d) g.mu.push_back(coord(rng));
    return g;
  };
  auto random_point = [&](std::size_t dim) {
    std::vector<double> x(dim);
    for (double& v : x) v = coord(rng);
    return x;
  };

  AlgebraReport r;
  r.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t dim = 1 + t % 2;
    const Component a = random_component(dim), b = random_component(dim);
    const Component ab = product(a, b);
    GaussianSum sa{dim, {}}, sb{dim, {}};
    for (int k = 0; k < 3; ++k) {
      sa.components.push_back(random_component(dim));
      sb.components.push_back(random_component(dim));
    }
    const GaussianSum sab = product(sa, sb);
    for (int k = 0; k < 16; ++k) {
      const std::vector<double> x = random_point(dim);
      r.product_error = std::max(r.product_error, std::abs(evaluate(a, x) * evaluate(b, x) - evaluate(ab, x)));
      r.closure_error = std::max(r.closure_error, std::abs(sa(x) * sb(x) - sab(x)));
    }
    // A positive Gaussian centred at x is larger at x than at any y != x.
    const std::vector<double> x = random_point(dim);
    std::vector<double> y = random_point(dim);
    if (y == x) y[0] += 1.0;
    const Component at_x{1.0, x, width(rng)};
    r.separates = r.separates && evaluate(at_x, x) > evaluate(at_x, y);
    const Component positive{std::abs(a.c) + 0.1, a.mu, a.s};
    r.positive = r.positive && evaluate(positive, random_point(dim)) > 0.0;
  }
  return r;
}

ApproximationReport approximate(const Target& target, std::span<const std::size_t> K, double N, std::size_t seeds,
                                std::uint64_t seed, const FitConfig& config) {
  if (seeds == 0) throw std::invalid_argument("approximate: need at least one seed");
  for (std::size_t i = 1; i < K.size(); ++i) {
    if (K[i] <= K[i - 1]) throw std::invalid_argument("approximate: K values must be strictly increasing");
  }
  ApproximationReport r;
  r.target = target.id;
  r.N = N;
  r.resolution = config.resolution;
  r.K.assign(K.begin(), K.end());
  r.errors.assign(K.size(), std::vector<double>(seeds, 0.0));
  parallel_for(K.size() * seeds, [&](std::size_t job) {
    const std::size_t k = job / seeds, s = job % seeds;
    const GaussianSum fit = fit_gaussian_sum(target, K[k], N, seed + s, config);
    r.errors[k][s] = uniform_error(target, fit, N, config.resolution);
  });
  for (const std::vector<double>& e : r.errors) {
    std::vector<double> sorted = e;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    r.medians.push_back(n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]));
  }
  return r;
}

std::string report_csv(std::span<const ApproximationReport> reports) {
  std::string out = "target,N,resolution,K,median_uniform_error,uniform_errors\n";
  for (const ApproximationReport& r : reports) {
    for (std::size_t k = 0; k < r.K.size(); ++k) {
      std::vector<std::string> each;
      for (double e : r.errors[k]) each.push_back(fmt::format("{:.6g}", e));
      out += fmt::format("{},{},{},{},{:.6g},{}\n", r.target, r.N, r.resolution, r.K[k], r.medians[k], fmt::join(each, ";"));
    }
  }
  return out;
}

}  // namespace maskfe::gauss
