#pragma once

// Weighted sums of isotropic Gaussians c * exp(-|x - mu|^2 / (2 s^2)) in one
// or two dimensions, fitted to targets on the box [-N, N]^dim.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace maskfe::gauss {

struct Component {
  double c = 0.0;
  std::vector<double> mu;
  double s = 1.0;
};

double evaluate(const Component& g, std::span<const double> x);

struct GaussianSum {
  std::size_t dim = 1;
  std::vector<Component> components;

  double operator()(std::span<const double> x) const;
};

struct Target {
  std::string id;
  std::size_t dim = 1;
  std::function<double(std::span<const double>)> f;
};

// sin, abs (sqrt(x^2 + 0.01)), step (logistic(5x)), ripple (cos |x| in 2-D).
const std::vector<Target>& corpus();
// Throws std::invalid_argument for an unknown id.
const Target& find_target(std::string_view id);

struct FitConfig {
  std::size_t resolution = 256;  // grid points per axis, endpoints included
  std::size_t iterations = 4000;
  double lr = 0.02;
};

// `resolution` evenly spaced points on [-N, N].
std::vector<double> axis(double N, std::size_t resolution);

/// Adam on the mean squared grid error over (c, mu, log s). Centers start
/// uniform on the box, widths at 2N/K, coefficients at zero. Throws
/// std::invalid_argument for K = 0 or a coarse grid, NumericError on
/// divergence.
GaussianSum fit_gaussian_sum(const Target& target, std::size_t K, double N, std::uint64_t seed, const FitConfig& config = {});

// max |g - sum| over the grid.
double uniform_error(const Target& target, const GaussianSum& sum, double N, std::size_t resolution);

// Closed form of the pointwise product.
Component product(const Component& a, const Component& b);
GaussianSum product(const GaussianSum& a, const GaussianSum& b);

struct AlgebraReport {
  std::size_t trials = 0;
  double product_error = 0.0;  // max |f1 f2 - product| over sampled points
  double closure_error = 0.0;  // same for sums of three components each
  bool separates = true;
  bool positive = true;

  bool passed(double tolerance = 1e-9) const;
};

AlgebraReport verify_algebra(std::uint64_t seed, std::size_t trials = 200);

struct ApproximationReport {
  std::string target;
  double N = 3.0;
  std::size_t resolution = 256;
  std::vector<std::size_t> K;
  std::vector<std::vector<double>> errors;  // [K][seed]
  std::vector<double> medians;
};

// Fits every (K, seed) pair, seeds seed..seed+seeds-1, on worker threads.
ApproximationReport approximate(const Target& target, std::span<const std::size_t> K, double N, std::size_t seeds,
                                std::uint64_t seed, const FitConfig& config = {});

std::string report_csv(std::span<const ApproximationReport> reports);

}  // namespace maskfe::gauss
