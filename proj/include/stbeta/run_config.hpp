#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stbeta/ingest.hpp"
#include "stbeta/model.hpp"
#include "stbeta/predict.hpp"
#include "stbeta/simulate.hpp"

namespace stbeta {

/**
 * Run configuration: a flat set of `key = value` entries.
 *
 * Grammar, one entry per line:
 *   key = value      whitespace around key and value is ignored
 *   # comment        full-line or trailing comments
 * Keys are dotted (model.variant, mcmc.seed, scaling.<column>, ...); the
 * full list is in docs/configuration.md. Unknown keys are rejected. Later
 * assignments override earlier ones, so command-line overrides are plain
 * set() calls after loading the file.
 */
class RunConfig {
 public:
  RunConfig() = default;

  /// Throws ConfigError with the origin and line number on malformed input.
  static RunConfig parse(std::string_view text, const std::string& origin = "<config>",
                         const std::string& base_directory = "");
  static RunConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  /// Parses "key=value".
  void set_assignment(const std::string& assignment);
  void erase(const std::string& key) { entries_.erase(key); }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  /// Throws ConfigError when absent.
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list; empty items are dropped.
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  /// A path value resolved against the directory of the loaded file.
  std::string path(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  /// Sorted "key = value" lines, excluding `output`.
  std::string canonical_text() const;
  /// 16 hex digits of FNV-1a 64 over canonical_text().
  std::string hash() const;

 private:
  std::map<std::string, std::string> entries_;
  std::string base_directory_;
};

bool is_known_key(const std::string& key);
std::uint64_t fnv1a64(std::string_view text);

ModelConfig model_config(const RunConfig& config);
PanelSchema panel_schema(const RunConfig& config);
ScalingPolicy scaling_policy(const RunConfig& config);

struct PcaSettings {
  std::vector<std::string> columns;
  PcaOptions options;
  std::string prefix = "pca";
  bool standardize_scores = true;
};

/// Present when pca.columns or pca.group is set.
std::optional<PcaSettings> pca_settings(const RunConfig& config);

SimulationSpec simulation_spec(const RunConfig& config);

struct ComparisonPlan {
  std::vector<ModelConfig> variants;
  std::vector<std::string> labels;
  std::size_t test_time = 0;  // 0 means the last time of the panel
  PointPredictor predictor = PointPredictor::kMean;
};

/// compare.variants (e.g. "M1,M2,M3,M4") applied on top of model_config().
ComparisonPlan comparison_plan(const RunConfig& config);

}  // namespace stbeta
