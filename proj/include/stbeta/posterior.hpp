#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stbeta/mcmc.hpp"

namespace stbeta {

/**
 * Moment summary of one scalar. cv, skewness and kurtosis are absent when
 * the draws have zero variance. Kurtosis is the raw fourth standardized
 * moment (3 for a Normal).
 */
struct SummaryRow {
  std::string name;
  std::size_t draws = 0;
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator
  std::optional<double> cv;
  std::optional<double> skewness;  // m3 / m2^1.5, population moments
  std::optional<double> kurtosis;  // m4 / m2^2
  double q025 = 0.0;
  double median = 0.0;
  double q975 = 0.0;
};

/// Throws std::invalid_argument with fewer than two draws.
SummaryRow summarize(std::span<const double> draws, const std::string& name = "");

/// Linear-interpolation quantile (type 7) of unsorted data.
double quantile(std::vector<double> values, double probability);

/// Per-draw group intercepts xi_s (beta0, plus gamma or gamma[s]); one
/// vector per group, chains pooled. Throws IngestError on missing columns.
std::vector<std::vector<double>> intercept_draws(const PosteriorDraws& draws);
std::vector<SummaryRow> derived_intercepts(const PosteriorDraws& draws);

/// Fraction of draws strictly above zero. Throws std::invalid_argument when
/// empty.
double pp0(std::span<const double> draws);

struct InclusionRow {
  std::string covariate;
  double probability = 0.0;
};

/// Pooled frequency of omega[k] = 1. Throws IngestError when a recorded
/// indicator is not 0 or 1.
std::vector<InclusionRow> inclusion_probabilities(const PosteriorDraws& draws);

struct DensityPoint {
  double x = 0.0;
  double density = 0.0;
};

/// 0.9 min(sd, IQR/1.34) n^(-1/5); falls back to sd or 1 when degenerate.
double silverman_bandwidth(std::span<const double> draws);

/// Gaussian kernel density on `points` equally spaced values spanning the
/// data range padded by three bandwidths.
std::vector<DensityPoint> kde_grid(std::span<const double> draws, std::size_t points = 256);

struct ReportOptions {
  double inclusion_threshold = 0.5;
  /// Adds one block of rows per chain after the pooled rows.
  bool per_chain = false;
  std::size_t density_points = 256;
  bool densities = true;
};

/**
 * Writes the summary tables into `directory`:
 *   intercepts.csv, coefficients.csv, spatial.csv, temporal.csv, rho.csv,
 *   phi.csv, precisions.csv, pp0.csv, inclusion.csv and density.csv.
 * Returns the written paths.
 */
std::vector<std::string> summary_report(const PosteriorDraws& draws, const std::string& directory,
                                        const ReportOptions& options = {});

}  // namespace stbeta
