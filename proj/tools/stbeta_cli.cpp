// stbeta: fit, summarize, compare, simulate and diagnose spatio-temporal
// Beta regression models from a key = value run configuration.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stbeta/errors.hpp"
#include "stbeta/pipeline.hpp"

namespace {

struct ConfigFlags {
  std::string path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string output;

  void attach(CLI::App* app, bool required) {
    auto* option = app->add_option("-c,--config", path, "run configuration file");
    if (required) option->required();
    app->add_option("-s,--set", overrides, "override a config entry, key=value (repeatable)");
    app->add_option("--seed", seed, "root seed (overrides mcmc.seed)");
    app->add_option("-o,--out", output, "output directory (overrides output)");
  }

  stbeta::RunConfig build() const {
    stbeta::RunConfig config = path.empty() ? stbeta::RunConfig{} : stbeta::RunConfig::load(path);
    for (const auto& assignment : overrides) config.set_assignment(assignment);
    if (seed) config.set("mcmc.seed", std::to_string(*seed));
    if (!output.empty()) config.set("output", output);
    return config;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal Beta regression with spike-and-slab selection"};
  app.require_subcommand(1);

  ConfigFlags fit_flags;
  auto* fit = app.add_subcommand("fit", "run the sampler and write draws + diagnostics");
  fit_flags.attach(fit, true);

  ConfigFlags summarize_flags;
  std::string summarize_draws;
  auto* summarize = app.add_subcommand("summarize", "write posterior summary tables");
  summarize->add_option("draws", summarize_draws, "draws CSV written by fit")->required();
  summarize_flags.attach(summarize, false);

  ConfigFlags compare_flags;
  auto* compare = app.add_subcommand("compare", "fit variants on a temporal split and score them");
  compare_flags.attach(compare, true);

  ConfigFlags simulate_flags;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic panel from the model");
  simulate_flags.attach(simulate, false);

  std::string diagnose_draws;
  std::string diagnose_out;
  double diagnose_alarm = 1.1;
  auto* diagnose = app.add_subcommand("diagnose", "recompute rhat and ESS for a draws file");
  diagnose->add_option("draws", diagnose_draws, "draws CSV written by fit")->required();
  diagnose->add_option("-o,--out", diagnose_out, "output directory (default: next to draws)");
  diagnose->add_option("--rhat-alarm", diagnose_alarm, "rhat alarm threshold")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) return stbeta::cmd_fit(fit_flags.build(), std::cerr);
    if (*summarize) {
      std::optional<stbeta::RunConfig> config;
      if (!summarize_flags.path.empty()) config = summarize_flags.build();
      return stbeta::cmd_summarize(summarize_draws, config, summarize_flags.output, std::cerr);
    }
    if (*compare) return stbeta::cmd_compare(compare_flags.build(), std::cerr);
    if (*simulate) return stbeta::cmd_simulate(simulate_flags.build(), std::cerr);
    if (*diagnose) return stbeta::cmd_diagnose(diagnose_draws, diagnose_out, diagnose_alarm, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return stbeta::exit_code_for(e);
  }
  return stbeta::kExitFailure;
}
