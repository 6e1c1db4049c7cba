#include "stbeta/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "stbeta/errors.hpp"

namespace stbeta {

RegionGraph::RegionGraph(std::vector<std::string> region_names,
                         const std::vector<std::pair<std::size_t, std::size_t>>& edges)
    : names_(std::move(region_names)), neighbours_(names_.size()) {
  const std::size_t n = names_.size();
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n) {
      throw std::out_of_range("edge references region index out of range");
    }
    if (a == b) {
      throw IngestError("self-loop on region '" + names_[a] + "'");
    }
    neighbours_[a].push_back(b);
    neighbours_[b].push_back(a);
  }
  for (auto& list : neighbours_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  component_.assign(n, n);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (component_[start] != n) {
      continue;
    }
    const std::size_t label = component_count_++;
    component_[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t w : neighbours_[v]) {
        if (component_[w] == n) {
          component_[w] = label;
          stack.push_back(w);
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (neighbours_[i].empty()) {
      isolated_.push_back(i);
    }
  }
}

std::size_t RegionGraph::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) {
    throw std::out_of_range("unknown region '" + name + "'");
  }
  return static_cast<std::size_t>(it - names_.begin());
}

bool RegionGraph::adjacent(std::size_t i, std::size_t j) const {
  return std::binary_search(neighbours_[i].begin(), neighbours_[i].end(), j);
}

std::size_t RegionGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& list : neighbours_) {
    twice += list.size();
  }
  return twice / 2;
}

NormalConditional icar_conditional(std::size_t i, std::span<const double> psi, double tau_psi,
                                   const RegionGraph& graph) {
  const auto nb = graph.neighbours(i);
  if (nb.empty()) {
    throw ContractViolation("icar_conditional called on isolated region '" +
                            graph.region_names()[i] + "'");
  }
  double sum = 0.0;
  for (std::size_t j : nb) {
    sum += psi[j];
  }
  const double degree = static_cast<double>(nb.size());
  return {sum / degree, 1.0 / (degree * tau_psi)};
}

NormalConditional isolated_conditional(double tau_psi) { return {0.0, 1.0 / tau_psi}; }

NormalConditional spatial_conditional(std::size_t i, std::span<const double> psi, double tau_psi,
                                      const RegionGraph& graph) {
  return graph.degree(i) == 0 ? isolated_conditional(tau_psi)
                              : icar_conditional(i, psi, tau_psi, graph);
}

double icar_quadform(std::span<const double> psi, const RegionGraph& graph) {
  double q = 0.0;
  for (std::size_t i = 0; i < graph.region_count(); ++i) {
    for (std::size_t j : graph.neighbours(i)) {
      if (j > i) {
        const double d = psi[i] - psi[j];
        q += d * d;
      }
    }
  }
  return q;
}

double isolated_sum_of_squares(std::span<const double> psi, const RegionGraph& graph) {
  double s = 0.0;
  for (std::size_t i : graph.isolated()) {
    s += psi[i] * psi[i];
  }
  return s;
}

double center_in_place(std::span<double> psi) {
  if (psi.empty()) {
    return 0.0;
  }
  const double mean =
      std::accumulate(psi.begin(), psi.end(), 0.0) / static_cast<double>(psi.size());
  for (double& v : psi) {
    v -= mean;
  }
  return mean;
}

std::vector<double> center_sum_to_zero(std::span<const double> psi) {
  std::vector<double> out(psi.begin(), psi.end());
  center_in_place(out);
  return out;
}

double icar_precision_exponent(const RegionGraph& graph) {
  const double r = static_cast<double>(graph.region_count());
  const double g = static_cast<double>(graph.component_count());
  const double iso = static_cast<double>(graph.isolated().size());
  return 0.5 * (r - g) + 0.5 * iso;
}

double icar_log_prior(std::span<const double> psi, double tau_psi, const RegionGraph& graph) {
  if (!(tau_psi > 0.0)) {
    throw std::domain_error("tau_psi must be positive");
  }
  const double q = icar_quadform(psi, graph) + isolated_sum_of_squares(psi, graph);
  return icar_precision_exponent(graph) * std::log(tau_psi) - 0.5 * tau_psi * q;
}

}  // namespace stbeta
