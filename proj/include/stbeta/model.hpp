#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stbeta/ingest.hpp"
#include "stbeta/spatial.hpp"
#include "stbeta/ssvs.hpp"

namespace stbeta {

/// Model variants: gender effect (fixed / random) x prior on rho
/// (Beta(1,1) on (0,1) / standard Normal).
enum class Variant { kM1, kM2, kM3, kM4 };

std::string to_string(Variant v);
/// Accepts "M1".."M4"; throws ConfigError otherwise.
Variant parse_variant(const std::string& text);
bool has_random_group_effect(Variant v);
bool rho_on_unit_interval(Variant v);

struct SamplerSettings {
  std::size_t iterations = 150000;
  std::size_t chains = 2;
  std::size_t burn_in = 50000;
  std::size_t thinning = 10;
  std::uint64_t seed = 20250101;
  double target_acceptance = 0.44;
  std::size_t adaptation_window = 50;
  /// Iteration index after which proposal scales are frozen; defaults to
  /// burn_in when left at 0.
  std::size_t adaptation_cutoff = 0;
  bool parallel_chains = true;

  std::size_t retained_per_chain() const { return (iterations - burn_in) / thinning; }
  std::size_t effective_adaptation_cutoff() const {
    return adaptation_cutoff == 0 ? burn_in : adaptation_cutoff;
  }
  /// Throws ConfigError when an invariant is broken.
  void validate() const;
};

struct ModelConfig {
  Variant variant = Variant::kM1;
  SsvsConstants ssvs = SsvsConstants::from(4000.0, 0.001);
  double phi_scale = 50.0;       // a in phi = (a B)^2
  double phi_epsilon = 0.1;      // B ~ Beta(1 + eps, 1 + eps)
  double precision_shape = 0.5;  // Gamma hyperprior of tau_psi and tau_alpha
  double precision_rate = 0.0005;
  double gamma_variance = 100.0;
  double group_mean_variance = 4.0;  // mu_s ~ N(0, 4)
  double group_variance_lower = 1.0;  // sigma2_s ~ U(lower, upper)
  double group_variance_upper = 10.0;
  bool spatial_effect = true;
  bool temporal_effect = true;
  bool group_effect = true;
  SamplerSettings sampler;

  void validate() const;
};

/**
 * One point in parameter space.
 *
 * phi is not stored: it is (a * b_latent)^2 for the configured a. Under the
 * random-group variants `gamma` is unused and gamma_s / gamma_mu /
 * gamma_sigma2 hold one entry per group.
 */
struct ParamState {
  double beta0 = 0.0;
  double gamma = 0.0;
  std::vector<double> gamma_s;
  std::vector<double> gamma_mu;
  std::vector<double> gamma_sigma2;
  std::vector<double> beta;
  std::vector<int> omega;
  std::vector<double> theta;
  SpatialEffect spatial;
  std::vector<double> alpha;
  double rho = 0.5;
  double tau_alpha = 1.0;
  double b_latent = 0.5;

  double phi(const ModelConfig& config) const {
    const double ab = config.phi_scale * b_latent;
    return ab * ab;
  }
  /// Group-specific intercept xi_s.
  double group_intercept(std::size_t group, const ModelConfig& config) const;
};

/// Deterministic starting point: beta0 = logit(mean rate), effects zero,
/// rho = 0.5, B = 0.5, unit precisions, omega = 0, theta = 0.5.
ParamState initial_state(const ModelConfig& config, const Panel& panel);

double inv_logit(double eta);

/// beta0 + x'beta + psi_i + alpha_t + group term for panel row `row`.
double linear_predictor(const ParamState& state, const ModelConfig& config, const Panel& panel,
                        std::size_t row);

/// log Beta(y; mu phi, (1 - mu) phi). Throws std::domain_error when y is not
/// strictly inside (0,1) or the shapes are not positive.
double beta_log_density(double y, double mu, double phi);

double log_likelihood(const ParamState& state, const ModelConfig& config, const Panel& panel);

/// log N(alpha_1; 0, 1/tau) + sum_t log N(alpha_t; rho alpha_{t-1}, 1/tau).
double ar1_log_prior(std::span<const double> alpha, double rho, double tau_alpha);

/// Sum of every prior term (beta0 flat). Returns -infinity outside the
/// support (rho, sigma2_s, theta, B, precisions).
double log_prior(const ParamState& state, const ModelConfig& config, const RegionGraph& graph);

double log_posterior(const ParamState& state, const ModelConfig& config, const Panel& panel,
                     const RegionGraph& graph);

/// Names and positions of the scalar columns recorded for each draw.
class ParameterLayout {
 public:
  ParameterLayout(const ModelConfig& config, std::size_t regions, std::size_t times,
                  std::size_t groups, std::size_t covariates);

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  /// Throws std::out_of_range for unknown names.
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const;

  void pack(const ParamState& state, const ModelConfig& config, std::span<double> out) const;
  /// Rebuilds a state from a recorded draw. theta is not recorded and comes
  /// back as 0.5; B is recovered from phi.
  ParamState unpack(std::span<const double> draw, const ModelConfig& config) const;

  std::size_t regions() const { return regions_; }
  std::size_t times() const { return times_; }
  std::size_t groups() const { return groups_; }
  std::size_t covariates() const { return covariates_; }

 private:
  bool random_group_;
  bool spatial_;
  bool temporal_;
  std::size_t regions_;
  std::size_t times_;
  std::size_t groups_;
  std::size_t covariates_;
  std::vector<std::string> names_;
};

}  // namespace stbeta
