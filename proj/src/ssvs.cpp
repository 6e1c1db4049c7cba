#include "stbeta/ssvs.hpp"

#include <cmath>
#include <stdexcept>

#include "stbeta/numerics.hpp"

namespace stbeta {

double derive_spike_sd(double c, double zeta) {
  if (!(c > 1.0)) {
    throw std::domain_error("slab scaling c must exceed 1");
  }
  if (!(zeta > 0.0)) {
    throw std::domain_error("threshold zeta must be positive");
  }
  const double c2 = c * c;
  return zeta / std::sqrt(2.0 * std::log(c) * c2 / (c2 - 1.0));
}

SsvsConstants SsvsConstants::from(double c, double zeta) {
  return SsvsConstants{c, zeta, derive_spike_sd(c, zeta)};
}

double ssvs_coef_log_prior(double beta, int omega, const SsvsConstants& constants) {
  return normal_log_density(beta, 0.0,
                            omega == 0 ? constants.spike_variance() : constants.slab_variance());
}

double inclusion_probability(double beta, double theta, const SsvsConstants& constants) {
  const double log_in = std::log(theta) + ssvs_coef_log_prior(beta, 1, constants);
  const double log_out = std::log1p(-theta) + ssvs_coef_log_prior(beta, 0, constants);
  return std::exp(log_in - log_add_exp(log_in, log_out));
}

int gibbs_omega(double beta, double theta, const SsvsConstants& constants, Rng& rng) {
  return rng.bernoulli(inclusion_probability(beta, theta, constants)) ? 1 : 0;
}

double gibbs_theta(int omega, Rng& rng) {
  return rng.beta(1.0 + omega, 2.0 - omega);
}

}  // namespace stbeta
