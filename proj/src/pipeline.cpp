#include "stbeta/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "stbeta/csv.hpp"
#include "stbeta/draws_io.hpp"
#include "stbeta/errors.hpp"
#include "stbeta/predict.hpp"
#include "stbeta/simulate.hpp"

namespace stbeta {

namespace fs = std::filesystem;

namespace {

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

std::string format_scaling(const ColumnScaling& c) {
  return to_string(c.transform) + " center=" + csv::format_double(c.center) +
         " scale=" + csv::format_double(c.scale);
}

ReportOptions report_options(const std::optional<RunConfig>& config) {
  ReportOptions options;
  if (!config) return options;
  options.inclusion_threshold =
      config->get_double("summary.inclusion_threshold", options.inclusion_threshold);
  options.per_chain = config->get_bool("summary.per_chain", options.per_chain);
  options.density_points = config->get_size("summary.density_points", options.density_points);
  options.densities = config->get_bool("summary.densities", options.densities);
  return options;
}

}  // namespace

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error)) return kExitConfig;
  if (dynamic_cast<const IngestError*>(&error)) return kExitIngest;
  if (dynamic_cast<const SamplingError*>(&error)) return kExitSampling;
  return kExitFailure;
}

std::string output_directory(const RunConfig& config) { return config.get_or("output", "out"); }

RunMetadata run_metadata(const RunConfig& config) {
  RunMetadata meta;
  meta.config_hash = config.hash();
  meta.seed = config.get_u64("mcmc.seed", SamplerSettings{}.seed);
  meta.config_text = config.canonical_text();
  return meta;
}

PreparedData prepare_data(const RunConfig& config) {
  PreparedData data;
  const std::string adjacency = config.path("adjacency");
  const auto names = adjacency_region_names(adjacency);
  data.graph = load_adjacency(adjacency, names);
  Panel panel = load_panel(config.path("panel"), panel_schema(config), names);

  const std::string catalog = config.get_or("ingest.catalog", "none");
  if (catalog == "italy") {
    validate_against_catalog(panel, italy_covariate_catalog());
  } else if (catalog != "none") {
    throw ConfigError("ingest.catalog must be 'none' or 'italy', got '" + catalog + "'");
  }

  const ScalingRecipe recipe = fit_scaling(panel, scaling_policy(config));
  panel = recipe.apply(panel);
  for (const auto& column : recipe.columns) {
    data.notes.emplace_back("scaling." + column.name, format_scaling(column));
  }

  if (const auto pca = pca_settings(config)) {
    for (const auto& column : pca->columns) {
      if (std::find(panel.covariate_names.begin(), panel.covariate_names.end(), column) ==
          panel.covariate_names.end()) {
        throw IngestError("PCA column '" + column + "' is not in the panel");
      }
    }
    BlockReduction reduced;
    try {
      reduced = reduce_block(panel, pca->columns, pca->options, pca->prefix,
                             pca->standardize_scores);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("PCA block: ") + e.what());
    }
    panel = std::move(reduced.panel);
    std::string columns;
    for (const auto& c : reduced.block_columns) columns += (columns.empty() ? "" : ";") + c;
    data.notes.emplace_back("pca.columns", columns);
    data.notes.emplace_back("pca.retained", std::to_string(reduced.pca.retained));
    data.notes.emplace_back("pca.cumulative_explained",
                            csv::format_double(reduced.pca.cumulative_explained()));
    if (reduced.score_scaling) {
      for (const auto& column : reduced.score_scaling->columns) {
        data.notes.emplace_back("scaling." + column.name, format_scaling(column));
      }
    }
  }
  data.panel = std::move(panel);
  return data;
}

bool write_diagnostics(const PosteriorDraws& draws, const std::string& path, double alarm,
                       std::vector<std::string>* alarmed) {
  std::ostringstream out;
  out << provenance_comment(draws.metadata) << '\n' << "parameter,rhat,ess\n";
  bool raised = false;
  for (const auto& d : diagnostics(draws)) {
    out << d.name << ',' << (d.rhat ? csv::format_double(*d.rhat) : "NA") << ','
        << csv::format_double(d.ess) << '\n';
    // Inclusion indicators are discrete; their rhat is reported but not alarmed on.
    if (d.rhat && *d.rhat > alarm && !d.name.starts_with("omega[")) {
      raised = true;
      if (alarmed) alarmed->push_back(d.name);
    }
  }
  write_text(path, out.str());
  return raised;
}

int cmd_fit(const RunConfig& config, std::ostream& log) {
  const ModelConfig model = model_config(config);
  const double alarm = config.get_double("diagnostics.rhat_alarm", 1.1);
  PreparedData data = prepare_data(config);
  RunMetadata meta = run_metadata(config);
  meta.notes = data.notes;
  log << "fit: " << data.panel.size() << " rows, " << data.panel.region_count() << " regions, "
      << data.panel.time_count() << " times, " << data.panel.covariate_count() << " covariates, "
      << "variant " << to_string(model.variant) << '\n';

  const auto start = std::chrono::steady_clock::now();
  const PosteriorDraws draws = run_sampler(model, data.panel, data.graph, meta);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  log << "fit: " << draws.chain_count() << " chains x " << draws.draws_in_chain(0)
      << " retained draws in " << elapsed.count() << " s\n";

  const fs::path dir(output_directory(config));
  fs::create_directories(dir);
  write_draws(draws, (dir / "draws.csv").string());
  std::vector<std::string> alarmed;
  const bool raised = write_diagnostics(draws, (dir / "diagnostics.csv").string(), alarm, &alarmed);
  if (raised) {
    log << "fit: rhat above " << alarm << " for";
    for (const auto& name : alarmed) log << ' ' << name;
    log << '\n';
    return kExitDiagnostics;
  }
  return kExitOk;
}

int cmd_summarize(const std::string& draws_path, const std::optional<RunConfig>& config,
                  const std::string& directory, std::ostream& log) {
  const PosteriorDraws draws = read_draws(draws_path);
  if (config && config->hash() != draws.metadata.config_hash) {
    throw ConfigError("draws '" + draws_path + "' were produced by config " +
                      draws.metadata.config_hash + ", not " + config->hash());
  }
  const std::string target =
      directory.empty() ? (fs::path(draws_path).parent_path() / "summary").string() : directory;
  const auto written = summary_report(draws, target, report_options(config));
  log << "summarize: wrote " << written.size() << " tables to " << target << '\n';
  return kExitOk;
}

int cmd_compare(const RunConfig& config, std::ostream& log) {
  const ComparisonPlan plan = comparison_plan(config);
  const PreparedData data = prepare_data(config);
  const std::size_t test_time = plan.test_time == 0 ? data.panel.time_count() : plan.test_time;
  const auto split = temporal_split(data.panel, test_time);
  for (const auto& w : split.warnings) log << "compare: " << w << '\n';
  log << "compare: " << split.train.size() << " training rows, " << split.test.size()
      << " test rows\n";

  const auto results =
      compare_models(data.panel, data.graph, plan.variants, test_time, plan.labels, plan.predictor);

  const RunMetadata meta = run_metadata(config);
  std::ostringstream table, bpv;
  table << provenance_comment(meta) << '\n' << "model,rmse,rmse_f,rmse_m,mae,mbpv,slpd\n";
  bpv << provenance_comment(meta) << '\n' << "model,region,year,group,observed,bpv\n";
  bool failed = false;
  for (const auto& entry : results) {
    if (!entry.metrics) {
      failed = true;
      log << "compare: variant " << entry.label << " failed: " << entry.error << '\n';
      table << entry.label << ",NA,NA,NA,NA,NA,NA\n";
      continue;
    }
    const MetricsRow& m = *entry.metrics;
    table << m.model << ',' << csv::format_double(m.rmse) << ',' << csv::format_double(m.rmse_female)
          << ',' << csv::format_double(m.rmse_male) << ',' << csv::format_double(m.mae) << ','
          << csv::format_double(m.mbpv) << ',' << csv::format_double(m.slpd) << '\n';
    for (std::size_t r = 0; r < entry.bpv.size(); ++r) {
      const Observation& o = split.test.rows[r];
      bpv << entry.label << ',' << csv::quote(split.test.region_names[o.region]) << ','
          << split.test.year_labels[o.time] << ',' << csv::quote(split.test.group_labels[o.group])
          << ',' << csv::format_double(o.rate) << ',' << csv::format_double(entry.bpv[r]) << '\n';
    }
  }
  const fs::path dir(output_directory(config));
  fs::create_directories(dir);
  write_text((dir / "metrics.csv").string(), table.str());
  write_text((dir / "bpv.csv").string(), bpv.str());
  log << "compare: wrote " << (dir / "metrics.csv").string() << '\n';
  return failed ? kExitSampling : kExitOk;
}

int cmd_simulate(const RunConfig& config, std::ostream& log) {
  const SimulationSpec spec = simulation_spec(config);
  const SimulatedData data = simulate_panel(spec);
  RunMetadata meta = run_metadata(config);
  meta.seed = spec.seed;
  const auto written =
      write_simulation(data, spec, output_directory(config), provenance_comment(meta));
  log << "simulate: " << data.panel.size() << " rows written to " << output_directory(config)
      << '\n';
  return kExitOk;
}

int cmd_diagnose(const std::string& draws_path, const std::string& directory, double alarm,
                 std::ostream& log) {
  const PosteriorDraws draws = read_draws(draws_path);
  const fs::path dir = directory.empty() ? fs::path(draws_path).parent_path() : fs::path(directory);
  if (!dir.empty()) fs::create_directories(dir);
  std::vector<std::string> alarmed;
  const bool raised = write_diagnostics(draws, (dir / "diagnostics.csv").string(), alarm, &alarmed);
  log << "diagnose: " << draws.names.size() << " parameters, " << draws.total_draws()
      << " draws\n";
  if (raised) {
    log << "diagnose: rhat above " << alarm << " for";
    for (const auto& name : alarmed) log << ' ' << name;
    log << '\n';
    return kExitDiagnostics;
  }
  return kExitOk;
}

}  // namespace stbeta
