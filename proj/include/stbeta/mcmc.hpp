#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stbeta/ingest.hpp"
#include "stbeta/model.hpp"
#include "stbeta/rng.hpp"
#include "stbeta/spatial.hpp"

namespace stbeta {

/// Descriptive facts about a run that travel with its draws.
struct RunMetadata {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string variant = "M1";
  bool spatial_effect = true;
  bool temporal_effect = true;
  bool group_effect = true;
  double phi_scale = 50.0;
  std::vector<std::string> region_names;
  std::vector<int> year_labels;
  std::vector<std::string> group_labels;
  std::vector<std::string> covariate_names;
  std::size_t iterations = 0;
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
  std::size_t chains = 0;
  std::size_t retained_per_chain = 0;
  /// Free-form key/value notes (conventions, scaling recipe, PCA details).
  std::vector<std::pair<std::string, std::string>> notes;
  /// The configuration as key = value text.
  std::string config_text;
};

/**
 * Retained post-burn-in draws. chain_values[c] is row-major
 * (draw x parameter) with `names.size()` columns.
 */
struct PosteriorDraws {
  std::vector<std::string> names;
  std::vector<std::vector<double>> chain_values;
  std::vector<std::vector<std::size_t>> iterations;
  RunMetadata metadata;

  std::size_t chain_count() const { return chain_values.size(); }
  std::size_t parameter_count() const { return names.size(); }
  std::size_t draws_in_chain(std::size_t chain) const {
    return names.empty() ? 0 : chain_values[chain].size() / names.size();
  }
  std::size_t total_draws() const;
  bool has(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;
  std::vector<double> chain_column(std::size_t chain, const std::string& name) const;
  /// All chains concatenated in chain order.
  std::vector<double> pooled(const std::string& name) const;
  std::span<const double> draw(std::size_t chain, std::size_t index) const {
    return std::span<const double>(chain_values[chain]).subspan(index * names.size(),
                                                                names.size());
  }
};

struct RwOutcome {
  double value = 0.0;
  double log_target = 0.0;
  bool accepted = false;
};

/**
 * One random-walk Metropolis step with N(0, scale^2) proposal.
 *
 * `log_target` is evaluated only at the proposal; `current_log_target` must
 * be finite. Accepts when log(u) < log_target(proposal) - current_log_target.
 * Constrained coordinates are handled by the caller, who passes the target on
 * the unconstrained scale including the log-Jacobian.
 */
template <class LogTarget>
RwOutcome rw_step(double current, double current_log_target, LogTarget&& log_target, double scale,
                  Rng& rng) {
  const double proposal = current + scale * rng.normal();
  const double proposed_log_target = log_target(proposal);
  const double log_u = std::log(rng.uniform());
  if (std::isfinite(proposed_log_target) && log_u < proposed_log_target - current_log_target) {
    return {proposal, proposed_log_target, true};
  }
  return {current, current_log_target, false};
}

template <class LogTarget>
RwOutcome rw_step(double current, LogTarget&& log_target, double scale, Rng& rng) {
  const double here = log_target(current);
  return rw_step(current, here, log_target, scale, rng);
}

struct AcceptanceWindow {
  std::size_t accepted = 0;
  std::size_t proposed = 0;

  void record(bool was_accepted) {
    ++proposed;
    if (was_accepted) ++accepted;
  }
  double rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
  void reset() { accepted = proposed = 0; }
};

/**
 * Robbins-Monro multiplicative scale update.
 *
 *   scale' = scale * exp(step_k * (rate - target)),  step_k = min(1, 3 k^-0.6)
 *
 * where k >= 1 counts the adaptation rounds seen by this proposal. The result
 * is clamped to [1e-8, 1e4]. An empty window leaves the scale unchanged.
 */
double adapt_scale(const AcceptanceWindow& window, double scale, double target_acceptance,
                   std::size_t round);

struct GammaConditional {
  double shape = 1.0;
  double rate = 1.0;
  double mean() const { return shape / rate; }
};

/// Gamma(shape + (R - G)/2 + n_iso/2, rate + [Q(psi) + sum_iso psi^2]/2).
GammaConditional tau_psi_conditional(std::span<const double> psi, const RegionGraph& graph,
                                     double shape, double rate);
/// Gamma(shape + T/2, rate + [alpha_1^2 + sum (alpha_t - rho alpha_{t-1})^2]/2).
GammaConditional tau_alpha_conditional(std::span<const double> alpha, double rho, double shape,
                                       double rate);

double gibbs_tau_psi(std::span<const double> psi, const RegionGraph& graph, double shape,
                     double rate, Rng& rng);
double gibbs_tau_alpha(std::span<const double> alpha, double rho, double shape, double rate,
                       Rng& rng);

/// Runs every chain of config.sampler and returns the retained draws.
/// Deterministic for fixed (seed, chains, config, inputs); chains may run on
/// separate threads. Throws SamplingError when no finite starting point is
/// found.
PosteriorDraws run_sampler(const ModelConfig& config, const Panel& panel, const RegionGraph& graph,
                           RunMetadata metadata = {});

struct ParameterDiagnostics {
  std::string name;
  std::optional<double> rhat;  // absent with a single chain or zero variance
  double ess = 0.0;
};

/// Split-chain potential scale reduction factor (halves of every chain).
/// Requires at least two sequences of length >= 4 after splitting.
std::optional<double> split_rhat(const std::vector<std::vector<double>>& chains);

/// Multi-chain effective sample size: autocorrelations combined across
/// chains, summed with Geyer's initial monotone positive-pair sequence.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

std::vector<ParameterDiagnostics> diagnostics(const PosteriorDraws& draws);

}  // namespace stbeta
