#include "stbeta/run_config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "stbeta/csv.hpp"
#include "stbeta/errors.hpp"

namespace stbeta {

namespace {

const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys = {
      "panel", "adjacency", "output",
      "columns.region", "columns.year", "columns.group", "columns.rate", "groups",
      "ingest.catalog",
      "scaling.default",
      "pca.columns", "pca.group", "pca.components", "pca.threshold", "pca.prefix",
      "pca.standardize_scores",
      "model.variant", "model.c", "model.zeta", "model.a", "model.epsilon",
      "model.precision_shape", "model.precision_rate", "model.gamma_variance",
      "model.group_mean_variance", "model.group_variance_lower", "model.group_variance_upper",
      "model.spatial", "model.temporal", "model.group",
      "mcmc.iterations", "mcmc.chains", "mcmc.burn_in", "mcmc.thinning", "mcmc.seed",
      "mcmc.target_acceptance", "mcmc.adaptation_window", "mcmc.adaptation_cutoff",
      "mcmc.parallel",
      "diagnostics.rhat_alarm",
      "summary.inclusion_threshold", "summary.per_chain", "summary.density_points",
      "summary.densities",
      "compare.variants", "compare.test_time", "compare.point",
      "simulate.grid_rows", "simulate.grid_cols", "simulate.times", "simulate.groups",
      "simulate.first_year", "simulate.beta", "simulate.beta0", "simulate.gamma",
      "simulate.rho", "simulate.tau_psi", "simulate.tau_alpha", "simulate.phi",
      "simulate.seed",
  };
  return keys;
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(std::string value) {
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
    return value.substr(1, value.size() - 2);
  }
  return value;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw ConfigError("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

}  // namespace

bool is_known_key(const std::string& key) {
  if (known_keys().count(key)) return true;
  return key.starts_with("scaling.") && key.size() > 8;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

RunConfig RunConfig::parse(std::string_view text, const std::string& origin,
                           const std::string& base_directory) {
  RunConfig config;
  config.base_directory_ = base_directory;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string content = csv::trim(strip_comment(line));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = csv::trim(content.substr(0, eq));
    const std::string value = unquote(csv::trim(content.substr(eq + 1)));
    try {
      config.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return config;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto parent = std::filesystem::path(path).parent_path();
  return parse(buffer.str(), path, parent.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw ConfigError("empty config key");
  if (!is_known_key(key)) throw ConfigError("unknown config key '" + key + "'");
  entries_[key] = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  set(csv::trim(assignment.substr(0, eq)), unquote(csv::trim(assignment.substr(eq + 1))));
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::string RunConfig::get_or(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string& value = get(key);
  try {
    const double v = csv::parse_double(value);
    if (!std::isfinite(v)) bad_value(key, value, "a finite number");
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, value, "a number");
  }
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string& value = get(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    bad_value(key, value, "a non-negative integer");
  }
  return out;
}

std::size_t RunConfig::get_size(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string value = get(key);
  std::transform(value.begin(), value.end(), value.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (value == "true" || value == "yes" || value == "on" || value == "1") return true;
  if (value == "false" || value == "no" || value == "off" || value == "0") return false;
  bad_value(key, get(key), "true or false");
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  if (!has(key)) return out;
  for (auto& item : csv::split_record(get(key))) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : get_list(key)) {
    try {
      out.push_back(csv::parse_double(item));
    } catch (const std::invalid_argument&) {
      bad_value(key, item, "a list of numbers");
    }
  }
  return out;
}

std::string RunConfig::path(const std::string& key) const {
  const std::filesystem::path p(get(key));
  if (p.is_absolute() || base_directory_.empty()) return p.string();
  return (std::filesystem::path(base_directory_) / p).string();
}

std::string RunConfig::canonical_text() const {
  std::string out;
  for (const auto& [key, value] : entries_) {
    if (key == "output") continue;
    out += key + " = " + value + "\n";
  }
  return out;
}

std::string RunConfig::hash() const {
  std::array<char, 17> buffer{};
  std::snprintf(buffer.data(), buffer.size(), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buffer.data();
}

ModelConfig model_config(const RunConfig& config) {
  ModelConfig m;
  if (config.has("model.variant")) m.variant = parse_variant(config.get("model.variant"));
  const double c = config.get_double("model.c", m.ssvs.c);
  const double zeta = config.get_double("model.zeta", m.ssvs.zeta);
  try {
    m.ssvs = SsvsConstants::from(c, zeta);
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("SSVS constants: ") + e.what());
  }
  m.phi_scale = config.get_double("model.a", m.phi_scale);
  m.phi_epsilon = config.get_double("model.epsilon", m.phi_epsilon);
  m.precision_shape = config.get_double("model.precision_shape", m.precision_shape);
  m.precision_rate = config.get_double("model.precision_rate", m.precision_rate);
  m.gamma_variance = config.get_double("model.gamma_variance", m.gamma_variance);
  m.group_mean_variance = config.get_double("model.group_mean_variance", m.group_mean_variance);
  m.group_variance_lower = config.get_double("model.group_variance_lower", m.group_variance_lower);
  m.group_variance_upper = config.get_double("model.group_variance_upper", m.group_variance_upper);
  m.spatial_effect = config.get_bool("model.spatial", m.spatial_effect);
  m.temporal_effect = config.get_bool("model.temporal", m.temporal_effect);
  m.group_effect = config.get_bool("model.group", m.group_effect);

  SamplerSettings& s = m.sampler;
  s.iterations = config.get_size("mcmc.iterations", s.iterations);
  s.chains = config.get_size("mcmc.chains", s.chains);
  s.burn_in = config.get_size("mcmc.burn_in", s.burn_in);
  s.thinning = config.get_size("mcmc.thinning", s.thinning);
  s.seed = config.get_u64("mcmc.seed", s.seed);
  s.target_acceptance = config.get_double("mcmc.target_acceptance", s.target_acceptance);
  s.adaptation_window = config.get_size("mcmc.adaptation_window", s.adaptation_window);
  s.adaptation_cutoff = config.get_size("mcmc.adaptation_cutoff", s.adaptation_cutoff);
  s.parallel_chains = config.get_bool("mcmc.parallel", s.parallel_chains);
  m.validate();
  return m;
}

PanelSchema panel_schema(const RunConfig& config) {
  PanelSchema schema;
  schema.region_column = config.get_or("columns.region", schema.region_column);
  schema.year_column = config.get_or("columns.year", schema.year_column);
  schema.group_column = config.get_or("columns.group", schema.group_column);
  schema.rate_column = config.get_or("columns.rate", schema.rate_column);
  if (config.has("groups")) {
    schema.group_labels = config.get_list("groups");
    if (schema.group_labels.empty()) throw ConfigError("config key 'groups' is empty");
  }
  return schema;
}

ScalingPolicy scaling_policy(const RunConfig& config) {
  ScalingPolicy policy;
  try {
    for (const auto& [key, value] : config.entries()) {
      if (!key.starts_with("scaling.")) continue;
      const auto transform = parse_scaling_transform(value);
      if (key == "scaling.default") {
        policy.default_transform = transform;
      } else {
        policy.overrides[key.substr(8)] = transform;
      }
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return policy;
}

std::optional<PcaSettings> pca_settings(const RunConfig& config) {
  if (!config.has("pca.columns") && !config.has("pca.group")) return std::nullopt;
  PcaSettings pca;
  if (config.has("pca.columns")) {
    pca.columns = config.get_list("pca.columns");
  } else {
    const auto group = config.get_size("pca.group", 0);
    pca.columns = catalog_columns_in_group(static_cast<int>(group));
  }
  if (pca.columns.size() < 2) throw ConfigError("a PCA block needs at least two columns");
  if (config.has("pca.components")) {
    pca.options.forced_components = config.get_size("pca.components", 0);
  }
  pca.options.variance_threshold = config.get_double("pca.threshold", pca.options.variance_threshold);
  if (!(pca.options.variance_threshold > 0.0 && pca.options.variance_threshold <= 1.0)) {
    throw ConfigError("pca.threshold must lie in (0, 1]");
  }
  pca.prefix = config.get_or("pca.prefix", pca.prefix);
  pca.standardize_scores = config.get_bool("pca.standardize_scores", pca.standardize_scores);
  return pca;
}

SimulationSpec simulation_spec(const RunConfig& config) {
  SimulationSpec spec;
  spec.grid_rows = config.get_size("simulate.grid_rows", spec.grid_rows);
  spec.grid_cols = config.get_size("simulate.grid_cols", spec.grid_cols);
  spec.times = config.get_size("simulate.times", spec.times);
  spec.groups = config.get_size("simulate.groups", spec.groups);
  spec.first_year = static_cast<int>(config.get_double("simulate.first_year", spec.first_year));
  if (config.has("simulate.beta")) spec.beta = config.get_double_list("simulate.beta");
  spec.beta0 = config.get_double("simulate.beta0", spec.beta0);
  spec.gamma = config.get_double("simulate.gamma", spec.gamma);
  spec.rho = config.get_double("simulate.rho", spec.rho);
  spec.tau_psi = config.get_double("simulate.tau_psi", spec.tau_psi);
  spec.tau_alpha = config.get_double("simulate.tau_alpha", spec.tau_alpha);
  spec.phi = config.get_double("simulate.phi", spec.phi);
  spec.seed = config.get_u64("simulate.seed", config.get_u64("mcmc.seed", spec.seed));
  spec.validate();
  return spec;
}

ComparisonPlan comparison_plan(const RunConfig& config) {
  ComparisonPlan plan;
  const ModelConfig base = model_config(config);
  auto tags = config.get_list("compare.variants");
  if (tags.empty()) tags.push_back(to_string(base.variant));
  for (const auto& tag : tags) {
    ModelConfig variant = base;
    variant.variant = parse_variant(tag);
    variant.validate();
    plan.variants.push_back(variant);
    plan.labels.push_back(tag);
  }
  plan.test_time = config.get_size("compare.test_time", 0);
  const std::string point = config.get_or("compare.point", "mean");
  if (point == "mean") {
    plan.predictor = PointPredictor::kMean;
  } else if (point == "median") {
    plan.predictor = PointPredictor::kMedian;
  } else {
    bad_value("compare.point", point, "mean or median");
  }
  return plan;
}

}  // namespace stbeta
