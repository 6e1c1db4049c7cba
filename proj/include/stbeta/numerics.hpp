#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace stbeta {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

/**
 * Natural log of the Gamma function for x > 0.
 *
 * Lanczos approximation with g = 7 and the nine Godfrey coefficients
 * (listed in numerics.cpp); reflection is used below 0.5. Relative accuracy
 * is about 1e-15 over the positive axis, and the result does not depend on
 * the platform libm, so log-densities agree bit-for-bit between builds that
 * share the same floating point model.
 */
double log_gamma(double x);

/// log B(a, b) = lgamma(a) + lgamma(b) - lgamma(a + b).
double log_beta_function(double a, double b);

/// log N(x; mean, variance).
inline double normal_log_density(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(variance) + d * d / variance);
}

/// Gamma(shape, rate) log density at x > 0.
double gamma_log_density(double x, double shape, double rate);

/// Beta(a, b) log density at x in (0, 1).
double beta_distribution_log_density(double x, double a, double b);

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// 1 / (1 + exp(-x)) without overflow for any finite x.
inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(exp(a) + exp(b)).
double log_add_exp(double a, double b);

/// log(mean(exp(values))); values must be non-empty.
double log_mean_exp(std::span<const double> values);

}  // namespace stbeta
