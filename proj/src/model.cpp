#include "stbeta/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "stbeta/errors.hpp"
#include "stbeta/numerics.hpp"

namespace stbeta {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kM1:
      return "M1";
    case Variant::kM2:
      return "M2";
    case Variant::kM3:
      return "M3";
    case Variant::kM4:
      return "M4";
  }
  return "M1";
}

Variant parse_variant(const std::string& text) {
  if (text == "M1") return Variant::kM1;
  if (text == "M2") return Variant::kM2;
  if (text == "M3") return Variant::kM3;
  if (text == "M4") return Variant::kM4;
  throw ConfigError("invalid model variant '" + text + "' (expected M1, M2, M3 or M4)");
}

bool has_random_group_effect(Variant v) { return v == Variant::kM3 || v == Variant::kM4; }
bool rho_on_unit_interval(Variant v) { return v == Variant::kM1 || v == Variant::kM3; }

void SamplerSettings::validate() const {
  if (iterations == 0) throw ConfigError("mcmc.iterations must be positive");
  if (chains == 0) throw ConfigError("mcmc.chains must be positive");
  if (burn_in >= iterations) throw ConfigError("mcmc.burn_in must be below mcmc.iterations");
  if (thinning == 0) throw ConfigError("mcmc.thinning must be at least 1");
  if (retained_per_chain() == 0) throw ConfigError("no draws would be retained");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
    throw ConfigError("mcmc.target_acceptance must lie in (0,1)");
  if (adaptation_window == 0) throw ConfigError("mcmc.adaptation_window must be positive");
  if (effective_adaptation_cutoff() > burn_in)
    throw ConfigError("mcmc.adaptation_cutoff must not exceed the burn-in");
}

void ModelConfig::validate() const {
  if (!(ssvs.c > 1.0)) throw ConfigError("model.c must exceed 1");
  if (!(ssvs.zeta > 0.0)) throw ConfigError("model.zeta must be positive");
  if (!(phi_scale > 0.0)) throw ConfigError("model.a must be positive");
  if (!(phi_epsilon >= 0.0)) throw ConfigError("model.epsilon must be non-negative");
  if (!(precision_shape > 0.0 && precision_rate > 0.0))
    throw ConfigError("precision hyperprior shape and rate must be positive");
  if (!(gamma_variance > 0.0)) throw ConfigError("model.gamma_variance must be positive");
  if (!(group_mean_variance > 0.0))
    throw ConfigError("model.group_mean_variance must be positive");
  if (!(group_variance_upper > group_variance_lower && group_variance_lower >= 0.0))
    throw ConfigError("group variance bounds must satisfy 0 <= lower < upper");
  sampler.validate();
}

double ParamState::group_intercept(std::size_t group, const ModelConfig& config) const {
  if (!config.group_effect) {
    return beta0;
  }
  if (has_random_group_effect(config.variant)) {
    return beta0 + gamma_s.at(group);
  }
  return group == 0 ? beta0 : beta0 + gamma;
}

ParamState initial_state(const ModelConfig& config, const Panel& panel) {
  ParamState s;
  double mean_rate = 0.5;
  if (!panel.rows.empty()) {
    mean_rate = std::accumulate(panel.rows.begin(), panel.rows.end(), 0.0,
                                [](double acc, const Observation& o) { return acc + o.rate; }) /
                static_cast<double>(panel.rows.size());
  }
  s.beta0 = logit(mean_rate);
  s.gamma = 0.0;
  if (has_random_group_effect(config.variant)) {
    const std::size_t g = panel.group_count();
    s.gamma_s.assign(g, 0.0);
    s.gamma_mu.assign(g, 0.0);
    s.gamma_sigma2.assign(g, 0.5 * (config.group_variance_lower + config.group_variance_upper));
  }
  const std::size_t p = panel.covariate_count();
  s.beta.assign(p, 0.0);
  s.omega.assign(p, 0);
  s.theta.assign(p, 0.5);
  s.spatial.psi.assign(panel.region_count(), 0.0);
  s.spatial.tau_psi = 1.0;
  s.alpha.assign(panel.time_count(), 0.0);
  s.rho = 0.5;
  s.tau_alpha = 1.0;
  s.b_latent = 0.5;
  return s;
}

double inv_logit(double eta) { return logistic(eta); }

double linear_predictor(const ParamState& state, const ModelConfig& config, const Panel& panel,
                        std::size_t row) {
  const Observation& obs = panel.rows[row];
  double eta = state.group_intercept(obs.group, config);
  const auto r = static_cast<Eigen::Index>(row);
  for (std::size_t k = 0; k < state.beta.size(); ++k) {
    eta += panel.covariates(r, static_cast<Eigen::Index>(k)) * state.beta[k];
  }
  if (config.spatial_effect) {
    eta += state.spatial.psi[obs.region];
  }
  if (config.temporal_effect) {
    eta += state.alpha[obs.time];
  }
  return eta;
}

double beta_log_density(double y, double mu, double phi) {
  if (!(y > 0.0 && y < 1.0)) {
    throw std::domain_error("Beta density evaluated outside (0,1)");
  }
  const double a = mu * phi;
  const double b = (1.0 - mu) * phi;
  if (!(a > 0.0 && b > 0.0)) {
    throw std::domain_error("Beta shapes must be positive");
  }
  return log_gamma(phi) - log_gamma(a) - log_gamma(b) + (a - 1.0) * std::log(y) +
         (b - 1.0) * std::log1p(-y);
}

double log_likelihood(const ParamState& state, const ModelConfig& config, const Panel& panel) {
  const double phi = state.phi(config);
  double total = 0.0;
  for (std::size_t r = 0; r < panel.size(); ++r) {
    const double mu = inv_logit(linear_predictor(state, config, panel, r));
    total += beta_log_density(panel.rows[r].rate, mu, phi);
  }
  return total;
}

double ar1_log_prior(std::span<const double> alpha, double rho, double tau_alpha) {
  if (!(tau_alpha > 0.0)) {
    throw std::domain_error("tau_alpha must be positive");
  }
  if (alpha.empty()) {
    return 0.0;
  }
  const double variance = 1.0 / tau_alpha;
  double total = normal_log_density(alpha[0], 0.0, variance);
  for (std::size_t t = 1; t < alpha.size(); ++t) {
    total += normal_log_density(alpha[t], rho * alpha[t - 1], variance);
  }
  return total;
}

double log_prior(const ParamState& state, const ModelConfig& config, const RegionGraph& graph) {
  double total = 0.0;  // beta0: flat

  if (config.group_effect) {
    if (has_random_group_effect(config.variant)) {
      const double width = config.group_variance_upper - config.group_variance_lower;
      for (std::size_t s = 0; s < state.gamma_s.size(); ++s) {
        const double s2 = state.gamma_sigma2[s];
        if (!(s2 >= config.group_variance_lower && s2 <= config.group_variance_upper)) {
          return kNegInf;
        }
        total += normal_log_density(state.gamma_s[s], state.gamma_mu[s], s2);
        total += normal_log_density(state.gamma_mu[s], 0.0, config.group_mean_variance);
        total -= std::log(width);
      }
    } else {
      total += normal_log_density(state.gamma, 0.0, config.gamma_variance);
    }
  }

  for (std::size_t k = 0; k < state.beta.size(); ++k) {
    const double theta = state.theta[k];
    if (!(theta > 0.0 && theta < 1.0)) {
      return kNegInf;
    }
    const int omega = state.omega[k];
    total += ssvs_coef_log_prior(state.beta[k], omega, config.ssvs);
    total += omega == 1 ? std::log(theta) : std::log1p(-theta);
  }

  if (config.spatial_effect) {
    if (!(state.spatial.tau_psi > 0.0)) {
      return kNegInf;
    }
    total += icar_log_prior(state.spatial.psi, state.spatial.tau_psi, graph);
    total += gamma_log_density(state.spatial.tau_psi, config.precision_shape,
                               config.precision_rate);
  }

  if (config.temporal_effect) {
    if (!(state.tau_alpha > 0.0)) {
      return kNegInf;
    }
    if (rho_on_unit_interval(config.variant)) {
      if (!(state.rho > 0.0 && state.rho < 1.0)) {
        return kNegInf;
      }
      // Beta(1,1) density is 1 on (0,1).
    } else {
      total += normal_log_density(state.rho, 0.0, 1.0);
    }
    total += ar1_log_prior(state.alpha, state.rho, state.tau_alpha);
    total += gamma_log_density(state.tau_alpha, config.precision_shape, config.precision_rate);
  }

  const double shape = 1.0 + config.phi_epsilon;
  if (!(state.b_latent > 0.0 && state.b_latent < 1.0)) {
    return kNegInf;
  }
  total += beta_distribution_log_density(state.b_latent, shape, shape);
  return total;
}

double log_posterior(const ParamState& state, const ModelConfig& config, const Panel& panel,
                     const RegionGraph& graph) {
  const double prior = log_prior(state, config, graph);
  if (prior == kNegInf) {
    return kNegInf;
  }
  return prior + log_likelihood(state, config, panel);
}

ParameterLayout::ParameterLayout(const ModelConfig& config, std::size_t regions, std::size_t times,
                                 std::size_t groups, std::size_t covariates)
    : random_group_(config.group_effect && has_random_group_effect(config.variant)),
      spatial_(config.spatial_effect),
      temporal_(config.temporal_effect),
      regions_(regions),
      times_(times),
      groups_(groups),
      covariates_(covariates) {
  auto indexed = [](const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i + 1) + "]";
  };
  names_.push_back("beta0");
  if (config.group_effect) {
    if (random_group_) {
      for (std::size_t s = 0; s < groups; ++s) names_.push_back(indexed("gamma", s));
      for (std::size_t s = 0; s < groups; ++s) names_.push_back(indexed("gamma_mu", s));
      for (std::size_t s = 0; s < groups; ++s) names_.push_back(indexed("gamma_sigma2", s));
    } else {
      names_.push_back("gamma");
    }
  }
  for (std::size_t k = 0; k < covariates; ++k) names_.push_back(indexed("beta", k));
  for (std::size_t k = 0; k < covariates; ++k) names_.push_back(indexed("omega", k));
  if (spatial_) {
    for (std::size_t i = 0; i < regions; ++i) names_.push_back(indexed("psi", i));
  }
  if (temporal_) {
    for (std::size_t t = 0; t < times; ++t) names_.push_back(indexed("alpha", t));
    names_.push_back("rho");
  }
  if (spatial_) names_.push_back("tau_psi");
  if (temporal_) names_.push_back("tau_alpha");
  names_.push_back("phi");
}

std::size_t ParameterLayout::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) {
    throw std::out_of_range("no parameter named '" + name + "'");
  }
  return static_cast<std::size_t>(it - names_.begin());
}

bool ParameterLayout::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

void ParameterLayout::pack(const ParamState& state, const ModelConfig& config,
                           std::span<double> out) const {
  std::size_t i = 0;
  out[i++] = state.beta0;
  if (config.group_effect) {
    if (random_group_) {
      for (double v : state.gamma_s) out[i++] = v;
      for (double v : state.gamma_mu) out[i++] = v;
      for (double v : state.gamma_sigma2) out[i++] = v;
    } else {
      out[i++] = state.gamma;
    }
  }
  for (double v : state.beta) out[i++] = v;
  for (int v : state.omega) out[i++] = static_cast<double>(v);
  if (spatial_) {
    for (double v : state.spatial.psi) out[i++] = v;
  }
  if (temporal_) {
    for (double v : state.alpha) out[i++] = v;
    out[i++] = state.rho;
  }
  if (spatial_) out[i++] = state.spatial.tau_psi;
  if (temporal_) out[i++] = state.tau_alpha;
  out[i++] = state.phi(config);
}

ParamState ParameterLayout::unpack(std::span<const double> draw, const ModelConfig& config) const {
  ParamState s;
  std::size_t i = 0;
  s.beta0 = draw[i++];
  if (config.group_effect) {
    if (random_group_) {
      s.gamma_s.assign(draw.begin() + static_cast<std::ptrdiff_t>(i),
                       draw.begin() + static_cast<std::ptrdiff_t>(i + groups_));
      i += groups_;
      s.gamma_mu.assign(draw.begin() + static_cast<std::ptrdiff_t>(i),
                        draw.begin() + static_cast<std::ptrdiff_t>(i + groups_));
      i += groups_;
      s.gamma_sigma2.assign(draw.begin() + static_cast<std::ptrdiff_t>(i),
                            draw.begin() + static_cast<std::ptrdiff_t>(i + groups_));
      i += groups_;
    } else {
      s.gamma = draw[i++];
    }
  }
  s.beta.assign(draw.begin() + static_cast<std::ptrdiff_t>(i),
                draw.begin() + static_cast<std::ptrdiff_t>(i + covariates_));
  i += covariates_;
  s.omega.resize(covariates_);
  for (std::size_t k = 0; k < covariates_; ++k) s.omega[k] = draw[i++] > 0.5 ? 1 : 0;
  s.theta.assign(covariates_, 0.5);
  if (spatial_) {
    s.spatial.psi.assign(draw.begin() + static_cast<std::ptrdiff_t>(i),
                         draw.begin() + static_cast<std::ptrdiff_t>(i + regions_));
    i += regions_;
  } else {
    s.spatial.psi.assign(regions_, 0.0);
  }
  if (temporal_) {
    s.alpha.assign(draw.begin() + static_cast<std::ptrdiff_t>(i),
                   draw.begin() + static_cast<std::ptrdiff_t>(i + times_));
    i += times_;
    s.rho = draw[i++];
  } else {
    s.alpha.assign(times_, 0.0);
  }
  if (spatial_) s.spatial.tau_psi = draw[i++];
  if (temporal_) s.tau_alpha = draw[i++];
  s.b_latent = std::sqrt(draw[i++]) / config.phi_scale;
  return s;
}

}  // namespace stbeta
