#include "stbeta/simulate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "stbeta/csv.hpp"
#include "stbeta/errors.hpp"
#include "stbeta/model.hpp"
#include "stbeta/rng.hpp"

namespace stbeta {

void SimulationSpec::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (grid_rows == 0 || grid_cols == 0 || grid_rows * grid_cols < 2) {
    throw ConfigError("simulation lattice needs at least two regions");
  }
  if (times < 1) throw ConfigError("simulation needs at least one time");
  if (groups < 1 || groups > 2) throw ConfigError("simulation supports one or two groups");
  if (!(phi > 0.0) || !finite(phi)) throw ConfigError("phi must be positive and finite");
  if (!(tau_psi > 0.0) || !finite(tau_psi)) throw ConfigError("tau_psi must be positive and finite");
  if (!(tau_alpha > 0.0) || !finite(tau_alpha)) {
    throw ConfigError("tau_alpha must be positive and finite");
  }
  if (!finite(rho) || !finite(beta0) || !finite(gamma)) {
    throw ConfigError("rho, beta0 and gamma must be finite");
  }
  for (double b : beta) {
    if (!finite(b)) throw ConfigError("coefficients must be finite");
  }
}

RegionGraph lattice_graph(std::size_t rows, std::size_t cols) {
  std::vector<std::string> names;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      names.push_back("r" + std::to_string(r + 1) + "_" + std::to_string(c + 1));
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(i, i + 1);
      if (r + 1 < rows) edges.emplace_back(i, i + cols);
    }
  }
  return RegionGraph(names, edges);
}

std::vector<double> sample_icar(const RegionGraph& graph, double tau, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(graph.region_count());
  Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < graph.region_count(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    laplacian(ii, ii) = static_cast<double>(graph.degree(i));
    for (std::size_t j : graph.neighbours(i)) laplacian(ii, static_cast<Eigen::Index>(j)) = -1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
  Rng rng(seed);
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lambda = solver.eigenvalues()(j);
    if (lambda > 1e-9) {
      psi += solver.eigenvectors().col(j) * (rng.normal() / std::sqrt(tau * lambda));
    }
  }
  return {psi.data(), psi.data() + n};
}

SimulatedData simulate_panel(const SimulationSpec& spec) {
  spec.validate();
  RegionGraph graph = lattice_graph(spec.grid_rows, spec.grid_cols);
  SimulationTruth truth;
  truth.psi = sample_icar(graph, spec.tau_psi, derive_seed(spec.seed, StreamPurpose::kSimulation, 0));

  Rng rng(derive_seed(spec.seed, StreamPurpose::kSimulation, 1));
  const double alpha_sd = 1.0 / std::sqrt(spec.tau_alpha);
  truth.alpha.resize(spec.times);
  for (std::size_t t = 0; t < spec.times; ++t) {
    const double previous = t == 0 ? 0.0 : spec.rho * truth.alpha[t - 1];
    truth.alpha[t] = previous + alpha_sd * rng.normal();
  }

  Panel panel;
  panel.region_names = graph.region_names();
  for (std::size_t t = 0; t < spec.times; ++t) {
    panel.year_labels.push_back(spec.first_year + static_cast<int>(t));
  }
  panel.group_labels = spec.groups == 2 ? std::vector<std::string>{"female", "male"}
                                        : std::vector<std::string>{"all"};
  for (std::size_t k = 0; k < spec.beta.size(); ++k) {
    panel.covariate_names.push_back("x" + std::to_string(k + 1));
  }
  const std::size_t n = graph.region_count() * spec.times * spec.groups;
  panel.covariates.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.beta.size()));
  std::size_t row = 0;
  for (std::size_t i = 0; i < graph.region_count(); ++i) {
    for (std::size_t t = 0; t < spec.times; ++t) {
      for (std::size_t s = 0; s < spec.groups; ++s, ++row) {
        const auto r = static_cast<Eigen::Index>(row);
        double eta = spec.beta0 + (s == 1 ? spec.gamma : 0.0) + truth.psi[i] + truth.alpha[t];
        for (std::size_t k = 0; k < spec.beta.size(); ++k) {
          const double x = rng.normal();
          panel.covariates(r, static_cast<Eigen::Index>(k)) = x;
          eta += spec.beta[k] * x;
        }
        const double mu = inv_logit(eta);
        double y = 0.0;
        do {
          y = rng.beta(mu * spec.phi, (1.0 - mu) * spec.phi);
        } while (!(y > 0.0 && y < 1.0));
        panel.rows.push_back({i, t, s, y});
      }
    }
  }
  return {std::move(panel), std::move(graph), std::move(truth)};
}

std::vector<std::string> write_simulation(const SimulatedData& data, const SimulationSpec& spec,
                                          const std::string& directory,
                                          const std::string& provenance) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  const Panel& panel = data.panel;
  std::vector<std::string> written;
  auto emit = [&](const std::string& file, const std::string& content) {
    const std::string path = (fs::path(directory) / file).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
    written.push_back(path);
  };

  std::ostringstream csv_text;
  csv_text << provenance << '\n' << "region,year,gender,rate";
  for (const auto& name : panel.covariate_names) csv_text << ',' << name;
  csv_text << '\n';
  for (std::size_t r = 0; r < panel.size(); ++r) {
    const Observation& o = panel.rows[r];
    csv_text << panel.region_names[o.region] << ',' << panel.year_labels[o.time] << ','
             << panel.group_labels[o.group] << ',' << csv::format_double(o.rate);
    for (Eigen::Index k = 0; k < panel.covariates.cols(); ++k) {
      csv_text << ',' << csv::format_double(panel.covariates(static_cast<Eigen::Index>(r), k));
    }
    csv_text << '\n';
  }
  emit("panel.csv", csv_text.str());

  std::ostringstream adjacency;
  adjacency << provenance << '\n';
  for (const auto& name : data.graph.region_names()) adjacency << name << '\n';
  for (std::size_t i = 0; i < data.graph.region_count(); ++i) {
    for (std::size_t j : data.graph.neighbours(i)) {
      if (i < j) adjacency << data.graph.region_names()[i] << ',' << data.graph.region_names()[j] << '\n';
    }
  }
  emit("adjacency.txt", adjacency.str());

  nlohmann::json truth;
  truth["beta0"] = spec.beta0;
  truth["gamma"] = spec.gamma;
  truth["beta"] = spec.beta;
  truth["rho"] = spec.rho;
  truth["tau_psi"] = spec.tau_psi;
  truth["tau_alpha"] = spec.tau_alpha;
  truth["phi"] = spec.phi;
  truth["seed"] = spec.seed;
  truth["psi"] = data.truth.psi;
  truth["alpha"] = data.truth.alpha;
  truth["region_names"] = panel.region_names;
  truth["year_labels"] = panel.year_labels;
  emit("truth.json", truth.dump(2) + "\n");
  return written;
}

}  // namespace stbeta
