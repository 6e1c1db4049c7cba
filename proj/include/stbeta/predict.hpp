#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stbeta/ingest.hpp"
#include "stbeta/mcmc.hpp"
#include "stbeta/model.hpp"
#include "stbeta/spatial.hpp"

namespace stbeta {

struct TemporalSplit {
  Panel train;
  Panel test;
  /// Rows after the test time that were left out of both sets.
  std::size_t dropped_rows = 0;
  std::vector<std::string> warnings;
};

/**
 * Splits on a 1-based time index: test = rows at `test_time`, train = rows
 * strictly before it. The training panel's year labels stop before the test
 * time; the test panel keeps the labels up to and including it. Throws
 * ConfigError when test_time < 2 or beyond the panel's horizon.
 */
TemporalSplit temporal_split(const Panel& panel, std::size_t test_time);

/// rows x draws matrices aligned with the test panel's rows.
struct PredictiveDraws {
  Eigen::MatrixXd simulated;
  Eigen::MatrixXd log_density;

  std::size_t rows() const { return static_cast<std::size_t>(simulated.rows()); }
  std::size_t draws() const { return static_cast<std::size_t>(simulated.cols()); }
};

/**
 * For every retained draw and test row: builds the linear predictor from the
 * draw (test-year covariates as observed), extrapolating the temporal effect
 * beyond the training horizon by simulating the AR(1) forward once per draw,
 * then simulates y* ~ Beta(mu phi, (1 - mu) phi) and records
 * log Beta(y_obs; mu phi, (1 - mu) phi).
 *
 * Regions, groups and covariates are matched to the draws' metadata by name.
 * Throws IngestError for an unseen region, group or covariate.
 */
PredictiveDraws posterior_predictive(const PosteriorDraws& draws, const Panel& test,
                                     std::uint64_t seed);

enum class PointPredictor { kMean, kMedian };

struct MetricsRow {
  std::string model;
  double rmse = 0.0;
  double rmse_female = 0.0;  // group index 0; NaN when absent
  double rmse_male = 0.0;    // group index 1; NaN when absent
  double mae = 0.0;
  double mbpv = 0.0;
  double slpd = 0.0;
};

/// Per-row fraction of simulated rates strictly above the observed rate.
std::vector<double> bayesian_p_values(const PredictiveDraws& pred, const Panel& test);

/// Per-row point prediction (mean or median of the simulated rates).
std::vector<double> point_predictions(const PredictiveDraws& pred,
                                      PointPredictor predictor = PointPredictor::kMean);

/// SLPD = sum over rows of log mean_d exp(log_density[row, d]).
MetricsRow metrics(const PredictiveDraws& pred, const Panel& test, const std::string& model = "",
                   PointPredictor predictor = PointPredictor::kMean);

struct ComparisonEntry {
  std::string label;
  std::optional<MetricsRow> metrics;
  std::vector<double> bpv;
  std::string error;  // set when the variant failed
};

/**
 * Fits each configuration on the training split and scores it on the test
 * split. A variant that throws is reported with its message and the others
 * still run.
 */
std::vector<ComparisonEntry> compare_models(const Panel& panel, const RegionGraph& graph,
                                            const std::vector<ModelConfig>& variants,
                                            std::size_t test_time,
                                            const std::vector<std::string>& labels = {},
                                            PointPredictor predictor = PointPredictor::kMean);

}  // namespace stbeta
