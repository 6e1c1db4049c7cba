#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stbeta/ingest.hpp"
#include "stbeta/spatial.hpp"

namespace stbeta {

/// Generative settings for a synthetic panel on a rook-adjacency lattice.
struct SimulationSpec {
  std::size_t grid_rows = 4;
  std::size_t grid_cols = 4;
  std::size_t times = 10;
  std::size_t groups = 2;
  int first_year = 2010;
  /// One coefficient per covariate; covariates are iid N(0, 1).
  std::vector<double> beta = {0.5, -0.4, 0.3, 0, 0, 0, 0, 0, 0, 0};
  double beta0 = -1.0;
  double gamma = 0.8;  // added for group index 1
  double rho = 0.7;
  double tau_psi = 4.0;
  double tau_alpha = 25.0;
  double phi = 40.0;
  std::uint64_t seed = 20250101;

  /// Throws ConfigError for out-of-support values.
  void validate() const;
};

struct SimulationTruth {
  std::vector<double> psi;
  std::vector<double> alpha;
};

struct SimulatedData {
  Panel panel;
  RegionGraph graph;
  SimulationTruth truth;
};

/// Lattice regions are named r<row>_<col> (1-based) and joined to their
/// horizontal and vertical neighbours.
RegionGraph lattice_graph(std::size_t rows, std::size_t cols);

/// Sum-to-zero draw from the ICAR prior with precision tau on a connected
/// graph, through the eigendecomposition of the graph Laplacian.
std::vector<double> sample_icar(const RegionGraph& graph, double tau, std::uint64_t seed);

SimulatedData simulate_panel(const SimulationSpec& spec);

/// Writes panel.csv, adjacency.txt and truth.json into `directory`.
std::vector<std::string> write_simulation(const SimulatedData& data, const SimulationSpec& spec,
                                          const std::string& directory,
                                          const std::string& provenance);

}  // namespace stbeta
