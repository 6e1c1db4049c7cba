#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stbeta/spatial.hpp"

namespace stbeta {

struct Observation {
  std::size_t region = 0;
  std::size_t time = 0;
  std::size_t group = 0;
  double rate = 0.5;
};

/**
 * Long-format areal panel. Row r of `covariates` belongs to rows[r].
 *
 * Panels produced by load_panel hold exactly one row per (region, time,
 * group) triple in region-major, then time, then group order. Panels derived
 * from them (train/test splits) keep the same label vectors but may cover a
 * subset of the triples.
 */
struct Panel {
  std::vector<Observation> rows;
  Eigen::MatrixXd covariates;  // rows.size() x covariate_names.size()
  std::vector<std::string> region_names;
  std::vector<int> year_labels;
  std::vector<std::string> group_labels;
  std::vector<std::string> covariate_names;

  std::size_t size() const { return rows.size(); }
  std::size_t region_count() const { return region_names.size(); }
  std::size_t time_count() const { return year_labels.size(); }
  std::size_t group_count() const { return group_labels.size(); }
  std::size_t covariate_count() const { return covariate_names.size(); }
  std::size_t covariate_index(const std::string& name) const;
};

struct PanelSchema {
  std::string region_column = "region";
  std::string year_column = "year";
  std::string group_column = "gender";
  std::string rate_column = "rate";
  /// Group labels in index order; index 0 is the reference group (d_s = 0).
  std::vector<std::string> group_labels = {"female", "male"};
};

/// Reads the panel CSV. Every region must appear in `region_names` (which
/// fixes the region index order); years are sorted numerically. Throws
/// IngestError naming the offending line or (region, year, group) cell.
Panel load_panel(const std::string& path, const PanelSchema& schema,
                 const std::vector<std::string>& region_names);

/// Region names in order of first mention in an adjacency file.
std::vector<std::string> adjacency_region_names(const std::string& path);

/**
 * Reads an adjacency file: one "RegionA,RegionB" edge per line. A line with a
 * single name declares a region without adding an edge (used for islands);
 * '#' starts a comment. Names must be in `region_names`.
 */
RegionGraph load_adjacency(const std::string& path, const std::vector<std::string>& region_names);

enum class ScalingTransform { kStandardize, kMinMax, kPassthrough };

std::string to_string(ScalingTransform t);
ScalingTransform parse_scaling_transform(const std::string& text);

struct ScalingPolicy {
  ScalingTransform default_transform = ScalingTransform::kStandardize;
  std::map<std::string, ScalingTransform> overrides;

  ScalingTransform transform_for(const std::string& covariate) const;
};

struct ColumnScaling {
  std::string name;
  ScalingTransform transform = ScalingTransform::kPassthrough;
  double center = 0.0;  // mean or minimum
  double scale = 1.0;   // sample SD or range
};

/// scaled = (raw - center) / scale, column by column.
struct ScalingRecipe {
  std::vector<ColumnScaling> columns;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& scaled) const;
  Panel apply(const Panel& panel) const;
};

/// Fits per-column constants. Standardization uses the n-1 sample SD.
/// Throws IngestError for a zero-spread column under standardize/min-max.
ScalingRecipe fit_scaling(const Panel& panel, const ScalingPolicy& policy);
ScalingRecipe fit_scaling(const Eigen::MatrixXd& columns, const std::vector<std::string>& names,
                          const ScalingPolicy& policy);

struct PcaOptions {
  double variance_threshold = 0.7;
  std::optional<std::size_t> forced_components;
};

struct PcaReduction {
  Eigen::VectorXd column_means;
  Eigen::MatrixXd loadings;          // k x retained, orthonormal columns
  Eigen::VectorXd explained_ratio;   // all k components, non-increasing
  std::size_t retained = 0;

  double cumulative_explained() const { return explained_ratio.head(retained).sum(); }
};

/**
 * Principal components of a rows x k block (centred internally, covariance
 * with n-1). Keeps the smallest leading set whose cumulative explained
 * variance reaches the threshold unless a count is forced. Each loading
 * column is signed so that its largest-magnitude entry is positive.
 */
std::pair<PcaReduction, Eigen::MatrixXd> pca_reduce(const Eigen::MatrixXd& block,
                                                    const PcaOptions& options);

struct BlockReduction {
  Panel panel;
  PcaReduction pca;
  std::vector<std::string> block_columns;
  std::vector<std::string> score_names;
  std::optional<ScalingRecipe> score_scaling;
};

/// Replaces `columns` of the panel by their principal component scores,
/// inserted where the first block column was. Scores are named
/// prefix1, prefix2, ... and optionally standardized.
BlockReduction reduce_block(const Panel& panel, const std::vector<std::string>& columns,
                            const PcaOptions& options, const std::string& prefix,
                            bool standardize_scores);

struct CatalogEntry {
  std::string column;
  std::string description;
  int group = 0;  // 1 socio-demography, 2 mortality, 3 lifestyle, 4 general health
  std::string unit;
};

/// Covariate dictionary of the Italian regional obesity panel (39 raw
/// columns; see docs/covariates.md).
const std::vector<CatalogEntry>& italy_covariate_catalog();
std::vector<std::string> catalog_columns_in_group(int group);

/// Throws IngestError listing catalog columns that are absent from the
/// panel and panel columns that are not in the catalog.
void validate_against_catalog(const Panel& panel, const std::vector<CatalogEntry>& catalog);

}  // namespace stbeta
