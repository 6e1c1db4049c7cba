#pragma once

#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stbeta/ingest.hpp"
#include "stbeta/mcmc.hpp"
#include "stbeta/posterior.hpp"
#include "stbeta/run_config.hpp"
#include "stbeta/spatial.hpp"

namespace stbeta {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitIngest = 3,
  kExitSampling = 4,
  kExitDiagnostics = 5,
};

/// Maps an exception to its exit code (config, ingest, sampling, other).
int exit_code_for(const std::exception& error);

struct PreparedData {
  Panel panel;
  RegionGraph graph;
  /// Scaling constants and PCA facts, carried into the run metadata.
  std::vector<std::pair<std::string, std::string>> notes;
};

/// Loads adjacency and panel, checks the catalog when configured, applies
/// scaling and the optional PCA block.
PreparedData prepare_data(const RunConfig& config);

/// Metadata skeleton carrying the config hash, seed and config text.
RunMetadata run_metadata(const RunConfig& config);

std::string output_directory(const RunConfig& config);

/// Writes diagnostics.csv (parameter, rhat, ess). Returns true when any
/// continuous parameter has rhat above `alarm`.
bool write_diagnostics(const PosteriorDraws& draws, const std::string& path, double alarm,
                       std::vector<std::string>* alarmed = nullptr);

// Each command returns its exit code; failures other than the diagnostics
// alarm propagate as exceptions.
int cmd_fit(const RunConfig& config, std::ostream& log);
int cmd_summarize(const std::string& draws_path, const std::optional<RunConfig>& config,
                  const std::string& directory, std::ostream& log);
int cmd_compare(const RunConfig& config, std::ostream& log);
int cmd_simulate(const RunConfig& config, std::ostream& log);
int cmd_diagnose(const std::string& draws_path, const std::string& directory, double alarm,
                 std::ostream& log);

}  // namespace stbeta
