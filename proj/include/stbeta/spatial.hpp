#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stbeta {

/**
 * Undirected binary neighbourhood structure over R regions.
 *
 * Stored as adjacency lists; W and D are implied (W_ij = 1 iff j is in
 * neighbours(i), D_ii = degree(i)). Construction rejects self-loops and
 * collapses repeated edges.
 */
class RegionGraph {
 public:
  RegionGraph() = default;
  RegionGraph(std::vector<std::string> region_names,
              const std::vector<std::pair<std::size_t, std::size_t>>& edges);

  std::size_t region_count() const { return neighbours_.size(); }
  const std::vector<std::string>& region_names() const { return names_; }
  std::size_t index_of(const std::string& name) const;

  std::span<const std::size_t> neighbours(std::size_t i) const { return neighbours_[i]; }
  std::size_t degree(std::size_t i) const { return neighbours_[i].size(); }
  bool adjacent(std::size_t i, std::size_t j) const;

  /// Component label per region (labels 0..component_count()-1, ordered by
  /// lowest member index).
  const std::vector<std::size_t>& component_of() const { return component_; }
  std::size_t component_count() const { return component_count_; }
  /// Degree-0 regions, ascending.
  const std::vector<std::size_t>& isolated() const { return isolated_; }
  std::size_t edge_count() const;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<std::size_t>> neighbours_;
  std::vector<std::size_t> component_;
  std::size_t component_count_ = 0;
  std::vector<std::size_t> isolated_;
};

struct SpatialEffect {
  std::vector<double> psi;
  double tau_psi = 1.0;
};

struct NormalConditional {
  double mean = 0.0;
  double variance = 1.0;
};

/// Full conditional of psi_i under the ICAR prior: neighbour average and
/// variance 1 / (D_ii tau). Throws ContractViolation for degree-0 regions.
NormalConditional icar_conditional(std::size_t i, std::span<const double> psi, double tau_psi,
                                   const RegionGraph& graph);

/// Conditional used for degree-0 regions: N(0, 1/tau).
NormalConditional isolated_conditional(double tau_psi);

/// Either of the two above depending on the region's degree.
NormalConditional spatial_conditional(std::size_t i, std::span<const double> psi, double tau_psi,
                                      const RegionGraph& graph);

/// psi' (D - W) psi = sum over edges (psi_i - psi_j)^2.
double icar_quadform(std::span<const double> psi, const RegionGraph& graph);

/// Sum of psi_i^2 over degree-0 regions.
double isolated_sum_of_squares(std::span<const double> psi, const RegionGraph& graph);

/// psi - mean(psi).
std::vector<double> center_sum_to_zero(std::span<const double> psi);
/// In-place version; returns the removed mean.
double center_in_place(std::span<double> psi);

/// Exponent multiplying log(tau_psi) in the prior: (R - G)/2 + (isolated)/2.
double icar_precision_exponent(const RegionGraph& graph);

/**
 * ICAR log prior with the isolated-region convention.
 *
 *   ((R - G)/2 + n_iso/2) log tau - (tau/2) [Q(psi) + sum_iso psi_i^2]
 *
 * Q is icar_quadform, G the number of connected components (isolated
 * regions count as components) and n_iso the number of degree-0 regions.
 * All terms free of psi and tau (the 2*pi factors and the pseudo-determinant
 * of D - W) are dropped.
 */
double icar_log_prior(std::span<const double> psi, double tau_psi, const RegionGraph& graph);

}  // namespace stbeta
