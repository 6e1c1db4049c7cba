#pragma once

#include "stbeta/rng.hpp"

namespace stbeta {

/// Spike-and-slab constants. The spike SD `tau` is derived so that the two
/// Normal components intersect at +/- zeta; the slab SD is c * tau.
struct SsvsConstants {
  double c = 4000.0;
  double zeta = 0.001;
  double tau = 0.0;

  static SsvsConstants from(double c, double zeta);
  double spike_variance() const { return tau * tau; }
  double slab_variance() const { return c * c * tau * tau; }
};

/// tau = zeta / sqrt(2 log(c) c^2 / (c^2 - 1)); throws std::domain_error
/// unless c > 1 and zeta > 0.
double derive_spike_sd(double c, double zeta);

/// log N(beta; 0, tau^2) when omega = 0, log N(beta; 0, c^2 tau^2) when 1.
double ssvs_coef_log_prior(double beta, int omega, const SsvsConstants& constants);

/// P(omega = 1 | beta, theta), evaluated with log-sum-exp.
double inclusion_probability(double beta, double theta, const SsvsConstants& constants);

int gibbs_omega(double beta, double theta, const SsvsConstants& constants, Rng& rng);

/// Draw from Beta(1 + omega, 2 - omega).
double gibbs_theta(int omega, Rng& rng);

}  // namespace stbeta
