#include "stbeta/numerics.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace stbeta {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoefficients = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7,
};
constexpr double kHalfLogTwoPi = 0.91893853320467274178032973640562;
constexpr double kLogPi = 1.1447298858494001741434273513531;

}  // namespace

double log_gamma(double x) {
  if (std::isnan(x)) {
    return x;
  }
  if (x <= 0.0) {
    if (x == std::floor(x)) {
      return std::numeric_limits<double>::infinity();
    }
  }
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x).
    return kLogPi - std::log(std::abs(std::sin(std::numbers::pi * x))) - log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double series = kLanczosCoefficients[0];
  for (std::size_t i = 1; i < kLanczosCoefficients.size(); ++i) {
    series += kLanczosCoefficients[i] / (z + static_cast<double>(i));
  }
  const double t = z + kLanczosG + 0.5;
  return kHalfLogTwoPi + (z + 0.5) * std::log(t) - t + std::log(series);
}

double log_beta_function(double a, double b) {
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double gamma_log_density(double x, double shape, double rate) {
  if (!(x > 0.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  return shape * std::log(rate) - log_gamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double beta_distribution_log_density(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta_function(a, b);
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) {
    return b;
  }
  if (b == -std::numeric_limits<double>::infinity()) {
    return a;
  }
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

double log_mean_exp(std::span<const double> values) {
  const double hi = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(hi)) {
    return hi;
  }
  double acc = 0.0;
  for (double v : values) {
    acc += std::exp(v - hi);
  }
  return hi + std::log(acc / static_cast<double>(values.size()));
}

}  // namespace stbeta
