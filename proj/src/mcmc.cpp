#include "stbeta/mcmc.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

#include "stbeta/errors.hpp"
#include "stbeta/numerics.hpp"
#include "stbeta/ssvs.hpp"

namespace stbeta {

std::size_t PosteriorDraws::total_draws() const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < chain_count(); ++c) n += draws_in_chain(c);
  return n;
}

bool PosteriorDraws::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::size_t PosteriorDraws::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    throw std::out_of_range("draws have no parameter '" + name + "'");
  }
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> PosteriorDraws::chain_column(std::size_t chain, const std::string& name) const {
  const std::size_t col = index_of(name);
  const std::size_t n = draws_in_chain(chain);
  std::vector<double> out(n);
  for (std::size_t d = 0; d < n; ++d) out[d] = chain_values[chain][d * names.size() + col];
  return out;
}

std::vector<double> PosteriorDraws::pooled(const std::string& name) const {
  std::vector<double> out;
  out.reserve(total_draws());
  for (std::size_t c = 0; c < chain_count(); ++c) {
    const auto column = chain_column(c, name);
    out.insert(out.end(), column.begin(), column.end());
  }
  return out;
}

double adapt_scale(const AcceptanceWindow& window, double scale, double target_acceptance,
                   std::size_t round) {
  if (window.proposed == 0) {
    return scale;
  }
  const double k = static_cast<double>(std::max<std::size_t>(round, 1));
  const double step = std::min(1.0, 3.0 * std::pow(k, -0.6));
  const double updated = scale * std::exp(step * (window.rate() - target_acceptance));
  return std::clamp(updated, 1e-8, 1e4);
}

GammaConditional tau_psi_conditional(std::span<const double> psi, const RegionGraph& graph,
                                     double shape, double rate) {
  const double q = icar_quadform(psi, graph) + isolated_sum_of_squares(psi, graph);
  return {shape + icar_precision_exponent(graph), rate + 0.5 * q};
}

GammaConditional tau_alpha_conditional(std::span<const double> alpha, double rho, double shape,
                                       double rate) {
  double ss = 0.0;
  for (std::size_t t = 0; t < alpha.size(); ++t) {
    const double r = t == 0 ? alpha[0] : alpha[t] - rho * alpha[t - 1];
    ss += r * r;
  }
  return {shape + 0.5 * static_cast<double>(alpha.size()), rate + 0.5 * ss};
}

double gibbs_tau_psi(std::span<const double> psi, const RegionGraph& graph, double shape,
                     double rate, Rng& rng) {
  const auto cond = tau_psi_conditional(psi, graph, shape, rate);
  return rng.gamma(cond.shape, cond.rate);
}

double gibbs_tau_alpha(std::span<const double> alpha, double rho, double shape, double rate,
                       Rng& rng) {
  const auto cond = tau_alpha_conditional(alpha, rho, shape, rate);
  return rng.gamma(cond.shape, cond.rate);
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kRefreshInterval = 100;

struct Proposal {
  double scale = 0.1;
  AcceptanceWindow window;
  std::size_t rounds = 0;

  void adapt(double target) {
    if (window.proposed == 0) return;
    ++rounds;
    scale = adapt_scale(window, scale, target, rounds);
    window.reset();
  }
};

// One chain of the Metropolis-within-Gibbs sampler. Keeps the linear
// predictor and per-row log-likelihood cached so each univariate update only
// touches the rows it affects.
class ChainSampler {
 public:
  ChainSampler(const ModelConfig& config, const Panel& panel, const RegionGraph& graph,
               std::size_t chain)
      : config_(config),
        panel_(panel),
        graph_(graph),
        chain_(chain),
        rng_(derive_seed(config.sampler.seed, StreamPurpose::kChain, chain)),
        n_(panel.size()),
        p_(panel.covariate_count()) {
    log_y_.resize(n_);
    log1m_y_.resize(n_);
    for (std::size_t r = 0; r < n_; ++r) {
      log_y_[r] = std::log(panel.rows[r].rate);
      log1m_y_[r] = std::log1p(-panel.rows[r].rate);
    }
    rows_by_region_.resize(panel.region_count());
    rows_by_time_.resize(panel.time_count());
    rows_by_group_.resize(panel.group_count());
    for (std::size_t r = 0; r < n_; ++r) {
      rows_by_region_[panel.rows[r].region].push_back(r);
      rows_by_time_[panel.rows[r].time].push_back(r);
      rows_by_group_[panel.rows[r].group].push_back(r);
    }
    eta_.resize(n_);
    ll_.resize(n_);
    scratch_.resize(n_);

    beta_spike_.resize(p_);
    beta_slab_.resize(p_);
    for (std::size_t k = 0; k < p_; ++k) {
      beta_spike_[k].scale = 2.4 * config.ssvs.tau;
      beta_slab_[k].scale = 0.1;
    }
    psi_.resize(panel.region_count());
    alpha_.resize(panel.time_count());
    const std::size_t groups = panel.group_count();
    gamma_s_.resize(groups);
    gamma_mu_.resize(groups);
    gamma_sigma2_.resize(groups);
    for (auto& prop : gamma_mu_) prop.scale = 0.5;
    for (auto& prop : gamma_sigma2_) prop.scale = 0.5;
    rho_.scale = rho_on_unit_interval(config.variant) ? 0.5 : 0.1;
  }

  void initialize() {
    state_ = initial_state(config_, panel_);
    Rng jitter(derive_seed(config_.sampler.seed, StreamPurpose::kInitialization, chain_));
    constexpr int kMaxAttempts = 20;
    double lp = log_posterior_or_neg_inf();
    for (int attempt = 0; !std::isfinite(lp) && attempt < kMaxAttempts; ++attempt) {
      state_ = initial_state(config_, panel_);
      state_.beta0 += jitter.normal(0.0, 0.5);
      state_.b_latent = 0.05 + 0.9 * jitter.uniform();
      lp = log_posterior_or_neg_inf();
    }
    if (!std::isfinite(lp)) {
      throw SamplingError("chain " + std::to_string(chain_ + 1) +
                          ": log posterior is not finite at the initial state after " +
                          std::to_string(kMaxAttempts) + " re-draws (beta0=" +
                          std::to_string(state_.beta0) + ", phi=" +
                          std::to_string(state_.phi(config_)) + ")");
    }
    refresh();
  }

  void iterate(std::size_t iteration) {
    update_beta0();
    if (config_.group_effect) {
      if (has_random_group_effect(config_.variant)) {
        update_random_group();
      } else {
        update_gamma();
      }
    }
    for (std::size_t k = 0; k < p_; ++k) update_beta(k);
    for (std::size_t k = 0; k < p_; ++k) {
      state_.omega[k] = gibbs_omega(state_.beta[k], state_.theta[k], config_.ssvs, rng_);
    }
    for (std::size_t k = 0; k < p_; ++k) state_.theta[k] = gibbs_theta(state_.omega[k], rng_);
    if (config_.spatial_effect) {
      for (std::size_t i = 0; i < psi_.size(); ++i) update_psi(i);
      state_.beta0 += center_in_place(state_.spatial.psi);
      state_.spatial.tau_psi = gibbs_tau_psi(state_.spatial.psi, graph_, config_.precision_shape,
                                             config_.precision_rate, rng_);
    }
    if (config_.temporal_effect) {
      for (std::size_t t = 0; t < alpha_.size(); ++t) update_alpha(t);
      state_.tau_alpha = gibbs_tau_alpha(state_.alpha, state_.rho, config_.precision_shape,
                                         config_.precision_rate, rng_);
      update_rho();
    }
    update_b_latent();

    const std::size_t done = iteration + 1;
    const auto& s = config_.sampler;
    if (done % s.adaptation_window == 0 && done <= s.effective_adaptation_cutoff()) {
      adapt_all();
    }
    if (done % kRefreshInterval == 0) {
      refresh();
    }
  }

  const ParamState& state() const { return state_; }
  double cached_log_likelihood() const {
    double total = 0.0;
    for (double v : ll_) total += v;
    return total;
  }

 private:
  double log_posterior_or_neg_inf() const {
    try {
      const double lp = log_posterior(state_, config_, panel_, graph_);
      return std::isnan(lp) ? kNegInf : lp;
    } catch (const std::domain_error&) {
      return kNegInf;
    }
  }

  double row_log_density(double eta, std::size_t r, double phi, double log_gamma_phi) const {
    const double a = logistic(eta) * phi;
    const double b = logistic(-eta) * phi;
    if (!(a > 0.0 && b > 0.0)) return kNegInf;
    return log_gamma_phi - log_gamma(a) - log_gamma(b) + (a - 1.0) * log_y_[r] +
           (b - 1.0) * log1m_y_[r];
  }

  void refresh() {
    phi_ = state_.phi(config_);
    log_gamma_phi_ = log_gamma(phi_);
    for (std::size_t r = 0; r < n_; ++r) {
      eta_[r] = linear_predictor(state_, config_, panel_, r);
      ll_[r] = row_log_density(eta_[r], r, phi_, log_gamma_phi_);
    }
  }

  // Log-likelihood change when eta_r moves by delta for every r in rows;
  // proposed row values land in scratch_.
  double shift_rows(std::span<const std::size_t> rows, double delta) {
    double change = 0.0;
    for (std::size_t r : rows) {
      scratch_[r] = row_log_density(eta_[r] + delta, r, phi_, log_gamma_phi_);
      change += scratch_[r] - ll_[r];
    }
    return change;
  }

  double shift_all(double delta) {
    double change = 0.0;
    for (std::size_t r = 0; r < n_; ++r) {
      scratch_[r] = row_log_density(eta_[r] + delta, r, phi_, log_gamma_phi_);
      change += scratch_[r] - ll_[r];
    }
    return change;
  }

  void commit_rows(std::span<const std::size_t> rows, double delta) {
    for (std::size_t r : rows) {
      eta_[r] += delta;
      ll_[r] = scratch_[r];
    }
  }

  void commit_all(double delta) {
    for (std::size_t r = 0; r < n_; ++r) {
      eta_[r] += delta;
      ll_[r] = scratch_[r];
    }
  }

  void update_beta0() {
    const double current = state_.beta0;
    const auto out = rw_step(
        current, 0.0, [&](double x) { return shift_all(x - current); }, beta0_.scale, rng_);
    beta0_.window.record(out.accepted);
    if (out.accepted) {
      commit_all(out.value - current);
      state_.beta0 = out.value;
    }
  }

  void update_gamma() {
    if (rows_by_group_.size() < 2) {
      // No rows carry the shift; the coordinate follows its prior.
      const double current = state_.gamma;
      const double var = config_.gamma_variance;
      const double here = normal_log_density(current, 0.0, var);
      const auto out = rw_step(
          current, here, [&](double x) { return normal_log_density(x, 0.0, var); },
          gamma_.scale, rng_);
      gamma_.window.record(out.accepted);
      state_.gamma = out.value;
      return;
    }
    const auto& rows = rows_by_group_[1];
    const double current = state_.gamma;
    const double var = config_.gamma_variance;
    const double here = normal_log_density(current, 0.0, var);
    const auto out = rw_step(
        current, here,
        [&](double x) { return normal_log_density(x, 0.0, var) + shift_rows(rows, x - current); },
        gamma_.scale, rng_);
    gamma_.window.record(out.accepted);
    if (out.accepted) {
      commit_rows(rows, out.value - current);
      state_.gamma = out.value;
    }
  }

  void update_random_group() {
    const double lower = config_.group_variance_lower;
    const double width = config_.group_variance_upper - lower;
    for (std::size_t s = 0; s < rows_by_group_.size(); ++s) {
      {
        const auto& rows = rows_by_group_[s];
        const double current = state_.gamma_s[s];
        const double mu = state_.gamma_mu[s];
        const double var = state_.gamma_sigma2[s];
        const double here = normal_log_density(current, mu, var);
        const auto out = rw_step(
            current, here,
            [&](double x) { return normal_log_density(x, mu, var) + shift_rows(rows, x - current); },
            gamma_s_[s].scale, rng_);
        gamma_s_[s].window.record(out.accepted);
        if (out.accepted) {
          commit_rows(rows, out.value - current);
          state_.gamma_s[s] = out.value;
        }
      }
      {
        const double g = state_.gamma_s[s];
        const double var = state_.gamma_sigma2[s];
        const double mean_var = config_.group_mean_variance;
        auto target = [&](double m) {
          return normal_log_density(g, m, var) + normal_log_density(m, 0.0, mean_var);
        };
        const auto out = rw_step(state_.gamma_mu[s], target, gamma_mu_[s].scale, rng_);
        gamma_mu_[s].window.record(out.accepted);
        state_.gamma_mu[s] = out.value;
      }
      {
        // sigma2 = lower + width * logistic(z); uniform prior plus Jacobian.
        const double g = state_.gamma_s[s];
        const double m = state_.gamma_mu[s];
        auto target = [&](double z) {
          const double u = logistic(z);
          const double s2 = lower + width * u;
          if (!(u > 0.0 && u < 1.0)) return kNegInf;
          return normal_log_density(g, m, s2) + std::log(u) + std::log1p(-u);
        };
        const double z0 = logit((state_.gamma_sigma2[s] - lower) / width);
        const auto out = rw_step(z0, target, gamma_sigma2_[s].scale, rng_);
        gamma_sigma2_[s].window.record(out.accepted);
        if (out.accepted) state_.gamma_sigma2[s] = lower + width * logistic(out.value);
      }
    }
  }

  void update_beta(std::size_t k) {
    const int omega = state_.omega[k];
    Proposal& prop = omega == 0 ? beta_spike_[k] : beta_slab_[k];
    const double current = state_.beta[k];
    const double* x = panel_.covariates.col(static_cast<Eigen::Index>(k)).data();
    const double here = ssvs_coef_log_prior(current, omega, config_.ssvs);
    auto target = [&](double b) {
      const double delta = b - current;
      double change = 0.0;
      for (std::size_t r = 0; r < n_; ++r) {
        scratch_[r] = row_log_density(eta_[r] + delta * x[r], r, phi_, log_gamma_phi_);
        change += scratch_[r] - ll_[r];
      }
      return ssvs_coef_log_prior(b, omega, config_.ssvs) + change;
    };
    const auto out = rw_step(current, here, target, prop.scale, rng_);
    prop.window.record(out.accepted);
    if (out.accepted) {
      const double delta = out.value - current;
      for (std::size_t r = 0; r < n_; ++r) {
        eta_[r] += delta * x[r];
        ll_[r] = scratch_[r];
      }
      state_.beta[k] = out.value;
    }
  }

  double psi_prior_term(std::size_t i, double value) const {
    const double tau = state_.spatial.tau_psi;
    const auto nb = graph_.neighbours(i);
    if (nb.empty()) return -0.5 * tau * value * value;
    double ss = 0.0;
    for (std::size_t j : nb) {
      const double d = value - state_.spatial.psi[j];
      ss += d * d;
    }
    return -0.5 * tau * ss;
  }

  void update_psi(std::size_t i) {
    const auto& rows = rows_by_region_[i];
    const double current = state_.spatial.psi[i];
    const double here = psi_prior_term(i, current);
    const auto out = rw_step(
        current, here,
        [&](double v) { return psi_prior_term(i, v) + shift_rows(rows, v - current); },
        psi_[i].scale, rng_);
    psi_[i].window.record(out.accepted);
    if (out.accepted) {
      commit_rows(rows, out.value - current);
      state_.spatial.psi[i] = out.value;
    }
  }

  double alpha_prior_term(std::size_t t, double value) const {
    const double tau = state_.tau_alpha;
    const double rho = state_.rho;
    const auto& a = state_.alpha;
    const double own = t == 0 ? value : value - rho * a[t - 1];
    double ss = own * own;
    if (t + 1 < a.size()) {
      const double next = a[t + 1] - rho * value;
      ss += next * next;
    }
    return -0.5 * tau * ss;
  }

  void update_alpha(std::size_t t) {
    const auto& rows = rows_by_time_[t];
    const double current = state_.alpha[t];
    const double here = alpha_prior_term(t, current);
    const auto out = rw_step(
        current, here,
        [&](double v) { return alpha_prior_term(t, v) + shift_rows(rows, v - current); },
        alpha_[t].scale, rng_);
    alpha_[t].window.record(out.accepted);
    if (out.accepted) {
      commit_rows(rows, out.value - current);
      state_.alpha[t] = out.value;
    }
  }

  void update_rho() {
    const auto& alpha = state_.alpha;
    const double tau = state_.tau_alpha;
    if (rho_on_unit_interval(config_.variant)) {
      // logit scale; Beta(1,1) density is constant, Jacobian rho (1 - rho).
      auto target = [&](double z) {
        const double r = logistic(z);
        if (!(r > 0.0 && r < 1.0)) return kNegInf;
        return ar1_log_prior(alpha, r, tau) + std::log(r) + std::log1p(-r);
      };
      const auto out = rw_step(logit(state_.rho), target, rho_.scale, rng_);
      rho_.window.record(out.accepted);
      if (out.accepted) state_.rho = logistic(out.value);
    } else {
      auto target = [&](double r) {
        return ar1_log_prior(alpha, r, tau) + normal_log_density(r, 0.0, 1.0);
      };
      const auto out = rw_step(state_.rho, target, rho_.scale, rng_);
      rho_.window.record(out.accepted);
      state_.rho = out.value;
    }
  }

  void update_b_latent() {
    const double shape = 1.0 + config_.phi_epsilon;
    const double a = config_.phi_scale;
    auto prior = [&](double b) {
      return beta_distribution_log_density(b, shape, shape) + std::log(b) + std::log1p(-b);
    };
    const double z0 = logit(state_.b_latent);
    const double here = prior(state_.b_latent);
    double proposed_phi = phi_;
    double proposed_lg = log_gamma_phi_;
    auto target = [&](double z) {
      const double b = logistic(z);
      if (!(b > 0.0 && b < 1.0)) return kNegInf;
      proposed_phi = (a * b) * (a * b);
      proposed_lg = log_gamma(proposed_phi);
      double change = 0.0;
      for (std::size_t r = 0; r < n_; ++r) {
        scratch_[r] = row_log_density(eta_[r], r, proposed_phi, proposed_lg);
        change += scratch_[r] - ll_[r];
      }
      return prior(b) + change;
    };
    const auto out = rw_step(z0, here, target, b_latent_.scale, rng_);
    b_latent_.window.record(out.accepted);
    if (out.accepted) {
      state_.b_latent = logistic(out.value);
      phi_ = proposed_phi;
      log_gamma_phi_ = proposed_lg;
      std::copy(scratch_.begin(), scratch_.end(), ll_.begin());
    }
  }

  void adapt_all() {
    const double target = config_.sampler.target_acceptance;
    beta0_.adapt(target);
    gamma_.adapt(target);
    for (auto& prop : gamma_s_) prop.adapt(target);
    for (auto& prop : gamma_mu_) prop.adapt(target);
    for (auto& prop : gamma_sigma2_) prop.adapt(target);
    for (auto& prop : beta_spike_) prop.adapt(target);
    for (auto& prop : beta_slab_) prop.adapt(target);
    for (auto& prop : psi_) prop.adapt(target);
    for (auto& prop : alpha_) prop.adapt(target);
    rho_.adapt(target);
    b_latent_.adapt(target);
  }

  const ModelConfig& config_;
  const Panel& panel_;
  const RegionGraph& graph_;
  std::size_t chain_;
  Rng rng_;
  std::size_t n_;
  std::size_t p_;

  std::vector<double> log_y_;
  std::vector<double> log1m_y_;
  std::vector<std::vector<std::size_t>> rows_by_region_;
  std::vector<std::vector<std::size_t>> rows_by_time_;
  std::vector<std::vector<std::size_t>> rows_by_group_;

  ParamState state_;
  std::vector<double> eta_;
  std::vector<double> ll_;
  std::vector<double> scratch_;
  double phi_ = 1.0;
  double log_gamma_phi_ = 0.0;

  Proposal beta0_;
  Proposal gamma_;
  std::vector<Proposal> gamma_s_;
  std::vector<Proposal> gamma_mu_;
  std::vector<Proposal> gamma_sigma2_;
  std::vector<Proposal> beta_spike_;
  std::vector<Proposal> beta_slab_;
  std::vector<Proposal> psi_;
  std::vector<Proposal> alpha_;
  Proposal rho_;
  Proposal b_latent_;
};

void run_chain(const ModelConfig& config, const Panel& panel, const RegionGraph& graph,
               const ParameterLayout& layout, std::size_t chain, std::vector<double>& values,
               std::vector<std::size_t>& iterations) {
  const auto& s = config.sampler;
  ChainSampler sampler(config, panel, graph, chain);
  sampler.initialize();
  const std::size_t width = layout.size();
  values.assign(s.retained_per_chain() * width, 0.0);
  iterations.clear();
  iterations.reserve(s.retained_per_chain());
  std::size_t slot = 0;
  for (std::size_t it = 0; it < s.iterations; ++it) {
    sampler.iterate(it);
    if (it >= s.burn_in && (it + 1 - s.burn_in) % s.thinning == 0 &&
        slot < s.retained_per_chain()) {
      layout.pack(sampler.state(), config,
                  std::span<double>(values).subspan(slot * width, width));
      iterations.push_back(it + 1);
      ++slot;
    }
  }
}

}  // namespace

PosteriorDraws run_sampler(const ModelConfig& config, const Panel& panel, const RegionGraph& graph,
                           RunMetadata metadata) {
  config.validate();
  if (config.spatial_effect && graph.region_count() != panel.region_count()) {
    throw SamplingError("adjacency graph and panel disagree on the number of regions");
  }
  if (!has_random_group_effect(config.variant) && config.group_effect &&
      panel.group_count() > 2) {
    throw SamplingError("the fixed group effect supports at most two groups");
  }
  const ParameterLayout layout(config, panel.region_count(), panel.time_count(),
                               panel.group_count(), panel.covariate_count());
  const auto& s = config.sampler;

  PosteriorDraws draws;
  draws.names = layout.names();
  draws.chain_values.resize(s.chains);
  draws.iterations.resize(s.chains);

  std::vector<std::exception_ptr> errors(s.chains);
  auto work = [&](std::size_t c) {
    try {
      run_chain(config, panel, graph, layout, c, draws.chain_values[c], draws.iterations[c]);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (s.parallel_chains && s.chains > 1) {
    std::vector<std::thread> workers;
    workers.reserve(s.chains);
    for (std::size_t c = 0; c < s.chains; ++c) workers.emplace_back(work, c);
    for (auto& w : workers) w.join();
  } else {
    for (std::size_t c = 0; c < s.chains; ++c) work(c);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  metadata.seed = s.seed;
  metadata.variant = to_string(config.variant);
  metadata.spatial_effect = config.spatial_effect;
  metadata.temporal_effect = config.temporal_effect;
  metadata.group_effect = config.group_effect;
  metadata.phi_scale = config.phi_scale;
  metadata.region_names = panel.region_names;
  metadata.year_labels = panel.year_labels;
  metadata.group_labels = panel.group_labels;
  metadata.covariate_names = panel.covariate_names;
  metadata.iterations = s.iterations;
  metadata.burn_in = s.burn_in;
  metadata.thinning = s.thinning;
  metadata.chains = s.chains;
  metadata.retained_per_chain = s.retained_per_chain();
  if (config.spatial_effect) {
    std::string isolated;
    for (std::size_t i : graph.isolated()) {
      isolated += (isolated.empty() ? "" : ";") + graph.region_names()[i];
    }
    metadata.notes.emplace_back("spatial.components", std::to_string(graph.component_count()));
    metadata.notes.emplace_back("spatial.isolated", isolated.empty() ? "none" : isolated);
    metadata.notes.emplace_back("spatial.isolated_prior",
                                "independent N(0, 1/tau_psi), included in sum-to-zero centering");
  }
  draws.metadata = std::move(metadata);
  return draws;
}

}  // namespace stbeta
