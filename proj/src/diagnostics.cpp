#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stbeta/mcmc.hpp"

namespace stbeta {

namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x, double mean) {
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

}  // namespace

std::optional<double> split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) {
    return std::nullopt;
  }
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const auto& c : chains) n = std::min(n, c.size());
  const std::size_t half = n / 2;
  if (half < 2) {
    return std::nullopt;
  }
  std::vector<double> means;
  std::vector<double> variances;
  for (const auto& c : chains) {
    // First and last `half` draws of the common length; a middle draw of an
    // odd-length chain is dropped.
    const std::span<const double> first(c.data(), half);
    const std::span<const double> second(c.data() + (n - half), half);
    for (const auto& part : {first, second}) {
      const double m = mean_of(part);
      means.push_back(m);
      variances.push_back(sample_variance(part, m));
    }
  }
  const double within = mean_of(variances);
  if (!(within > 0.0)) {
    return std::nullopt;
  }
  const double nn = static_cast<double>(half);
  const double between_over_n = sample_variance(means, mean_of(means));
  const double var_plus = (nn - 1.0) / nn * within + between_over_n;
  return std::sqrt(var_plus / within);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 4) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const std::size_t m = chains.size();
  const double nn = static_cast<double>(n);

  std::vector<double> means(m);
  std::vector<double> variances(m);
  for (std::size_t c = 0; c < m; ++c) {
    const std::span<const double> x(chains[c].data(), n);
    means[c] = mean_of(x);
    variances[c] = sample_variance(x, means[c]);
  }
  const double within = mean_of(variances);
  if (!(within > 0.0)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double var_plus = (nn - 1.0) / nn * within;
  if (m > 1) {
    var_plus += sample_variance(means, mean_of(means));
  }

  auto mean_autocov = [&](std::size_t lag) {
    double total = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const double* x = chains[c].data();
      double acc = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) {
        acc += (x[i] - means[c]) * (x[i + lag] - means[c]);
      }
      total += acc / nn;
    }
    return total / static_cast<double>(m);
  };
  auto rho = [&](std::size_t lag) {
    return lag == 0 ? 1.0 : 1.0 - (within - mean_autocov(lag)) / var_plus;
  };

  // Geyer's initial monotone sequence over pairs (rho_2k + rho_2k+1).
  double tau = -1.0;
  double previous_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (!(pair > 0.0)) {
      break;
    }
    pair = std::min(pair, previous_pair);
    tau += 2.0 * pair;
    previous_pair = pair;
  }
  const double total = static_cast<double>(m) * nn;
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

std::vector<ParameterDiagnostics> diagnostics(const PosteriorDraws& draws) {
  std::vector<ParameterDiagnostics> out;
  out.reserve(draws.parameter_count());
  for (const auto& name : draws.names) {
    std::vector<std::vector<double>> chains;
    for (std::size_t c = 0; c < draws.chain_count(); ++c) {
      chains.push_back(draws.chain_column(c, name));
    }
    ParameterDiagnostics d;
    d.name = name;
    d.rhat = split_rhat(chains);
    d.ess = effective_sample_size(chains);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace stbeta
