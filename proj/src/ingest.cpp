#include "stbeta/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "stbeta/csv.hpp"
#include "stbeta/errors.hpp"

namespace stbeta {

std::size_t Panel::covariate_index(const std::string& name) const {
  const auto it = std::find(covariate_names.begin(), covariate_names.end(), name);
  if (it == covariate_names.end()) {
    throw IngestError("unknown covariate '" + name + "'");
  }
  return static_cast<std::size_t>(it - covariate_names.begin());
}

namespace {

std::size_t find_column(const std::vector<std::string>& header, const std::string& name,
                        const std::string& path) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw IngestError(path + ": required column '" + name + "' not in header");
  }
  return static_cast<std::size_t>(it - header.begin());
}

struct RawRow {
  std::size_t line = 0;
  std::size_t region = 0;
  int year = 0;
  std::size_t group = 0;
  double rate = 0.0;
  std::vector<double> covariates;
};

std::vector<std::string> strip_comment_and_split(const std::string& line) {
  const auto hash = line.find('#');
  const std::string body = csv::trim(line.substr(0, hash));
  if (body.empty()) {
    return {};
  }
  auto fields = csv::split_record(body);
  for (auto& f : fields) {
    f = csv::trim(f);
  }
  return fields;
}

}  // namespace

Panel load_panel(const std::string& path, const PanelSchema& schema,
                 const std::vector<std::string>& region_names) {
  std::vector<std::string> lines;
  std::vector<std::size_t> line_numbers;
  try {
    lines = csv::read_lines(path, &line_numbers);
  } catch (const std::exception& e) {
    throw IngestError(e.what());
  }
  if (lines.empty()) {
    throw IngestError(path + ": empty file (a header row is required)");
  }
  const auto header = csv::split_record(lines.front());
  const std::size_t c_region = find_column(header, schema.region_column, path);
  const std::size_t c_year = find_column(header, schema.year_column, path);
  const std::size_t c_group = find_column(header, schema.group_column, path);
  const std::size_t c_rate = find_column(header, schema.rate_column, path);

  std::vector<std::size_t> covariate_columns;
  std::vector<std::string> covariate_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != c_region && c != c_year && c != c_group && c != c_rate) {
      covariate_columns.push_back(c);
      covariate_names.push_back(header[c]);
    }
  }

  std::unordered_map<std::string, std::size_t> region_index;
  for (std::size_t i = 0; i < region_names.size(); ++i) {
    region_index.emplace(region_names[i], i);
  }

  std::vector<RawRow> raw;
  raw.reserve(lines.size() - 1);
  std::set<int> years;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const std::size_t line_no = line_numbers[l];
    const std::string where = path + ":" + std::to_string(line_no);
    std::vector<std::string> fields;
    try {
      fields = csv::split_record(lines[l]);
    } catch (const std::exception& e) {
      throw IngestError(where + ": " + e.what());
    }
    if (fields.size() != header.size()) {
      throw IngestError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                        std::to_string(fields.size()));
    }
    RawRow row;
    row.line = line_no;
    const auto region_it = region_index.find(fields[c_region]);
    if (region_it == region_index.end()) {
      throw IngestError(where + ": unknown region '" + fields[c_region] +
                        "' (not in the adjacency file)");
    }
    row.region = region_it->second;
    const auto group_it =
        std::find(schema.group_labels.begin(), schema.group_labels.end(), fields[c_group]);
    if (group_it == schema.group_labels.end()) {
      throw IngestError(where + ": unknown group label '" + fields[c_group] + "'");
    }
    row.group = static_cast<std::size_t>(group_it - schema.group_labels.begin());
    try {
      row.year = static_cast<int>(csv::parse_integer(fields[c_year]));
      row.rate = csv::parse_double(fields[c_rate]);
    } catch (const std::exception& e) {
      throw IngestError(where + ": " + e.what());
    }
    if (!(row.rate > 0.0 && row.rate < 1.0)) {
      throw IngestError(where + ": rate not interior to (0,1): " + fields[c_rate]);
    }
    row.covariates.reserve(covariate_columns.size());
    for (std::size_t k = 0; k < covariate_columns.size(); ++k) {
      const std::string& text = fields[covariate_columns[k]];
      double value = 0.0;
      try {
        value = csv::parse_double(text);
      } catch (const std::exception&) {
        throw IngestError(where + ": covariate '" + covariate_names[k] + "' is not numeric: '" +
                          text + "'");
      }
      if (!std::isfinite(value)) {
        throw IngestError(where + ": missing or non-finite value for covariate '" +
                          covariate_names[k] + "'");
      }
      row.covariates.push_back(value);
    }
    years.insert(row.year);
    raw.push_back(std::move(row));
  }

  Panel panel;
  panel.region_names = region_names;
  panel.year_labels.assign(years.begin(), years.end());
  panel.group_labels = schema.group_labels;
  panel.covariate_names = covariate_names;

  const std::size_t n_regions = region_names.size();
  const std::size_t n_times = panel.year_labels.size();
  const std::size_t n_groups = schema.group_labels.size();
  const std::size_t n_cells = n_regions * n_times * n_groups;
  std::vector<std::size_t> cell_row(n_cells, raw.size());
  for (std::size_t r = 0; r < raw.size(); ++r) {
    const auto t = static_cast<std::size_t>(
        std::lower_bound(panel.year_labels.begin(), panel.year_labels.end(), raw[r].year) -
        panel.year_labels.begin());
    const std::size_t cell = (raw[r].region * n_times + t) * n_groups + raw[r].group;
    if (cell_row[cell] != raw.size()) {
      throw IngestError(path + ":" + std::to_string(raw[r].line) + ": duplicate cell (" +
                        region_names[raw[r].region] + ", " + std::to_string(raw[r].year) + ", " +
                        schema.group_labels[raw[r].group] + "), first seen on line " +
                        std::to_string(raw[cell_row[cell]].line));
    }
    cell_row[cell] = r;
  }
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    if (cell_row[cell] == raw.size()) {
      const std::size_t g = cell % n_groups;
      const std::size_t t = (cell / n_groups) % n_times;
      const std::size_t i = cell / (n_groups * n_times);
      throw IngestError(path + ": missing cell (" + region_names[i] + ", " +
                        std::to_string(panel.year_labels[t]) + ", " + schema.group_labels[g] +
                        ")");
    }
  }

  panel.rows.resize(n_cells);
  panel.covariates.resize(static_cast<Eigen::Index>(n_cells),
                          static_cast<Eigen::Index>(covariate_names.size()));
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    const RawRow& src = raw[cell_row[cell]];
    panel.rows[cell] = Observation{src.region, (cell / n_groups) % n_times, src.group, src.rate};
    for (std::size_t k = 0; k < covariate_names.size(); ++k) {
      panel.covariates(static_cast<Eigen::Index>(cell), static_cast<Eigen::Index>(k)) =
          src.covariates[k];
    }
  }
  return panel;
}

std::vector<std::string> adjacency_region_names(const std::string& path) {
  std::vector<std::string> lines;
  try {
    lines = csv::read_lines(path);
  } catch (const std::exception& e) {
    throw IngestError(e.what());
  }
  std::vector<std::string> names;
  for (const auto& line : lines) {
    for (const auto& name : strip_comment_and_split(line)) {
      if (!name.empty() && std::find(names.begin(), names.end(), name) == names.end()) {
        names.push_back(name);
      }
    }
  }
  return names;
}

RegionGraph load_adjacency(const std::string& path, const std::vector<std::string>& region_names) {
  std::vector<std::string> lines;
  std::vector<std::size_t> line_numbers;
  try {
    lines = csv::read_lines(path, &line_numbers);
  } catch (const std::exception& e) {
    throw IngestError(e.what());
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < region_names.size(); ++i) {
    index.emplace(region_names[i], i);
  }
  auto lookup = [&](const std::string& name, std::size_t line_no) {
    const auto it = index.find(name);
    if (it == index.end()) {
      throw IngestError(path + ":" + std::to_string(line_no) + ": unknown region '" + name + "'");
    }
    return it->second;
  };

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const auto fields = strip_comment_and_split(lines[l]);
    if (fields.empty()) {
      continue;
    }
    if (fields.size() == 1) {
      lookup(fields[0], line_numbers[l]);
      continue;
    }
    if (fields.size() != 2) {
      throw IngestError(path + ":" + std::to_string(line_numbers[l]) + ": expected 'RegionA,RegionB'");
    }
    const std::size_t a = lookup(fields[0], line_numbers[l]);
    const std::size_t b = lookup(fields[1], line_numbers[l]);
    if (a == b) {
      throw IngestError(path + ":" + std::to_string(line_numbers[l]) + ": self-loop on region '" +
                        fields[0] + "'");
    }
    edges.emplace_back(a, b);
  }
  return RegionGraph(region_names, edges);
}

std::string to_string(ScalingTransform t) {
  switch (t) {
    case ScalingTransform::kStandardize:
      return "standardize";
    case ScalingTransform::kMinMax:
      return "minmax";
    case ScalingTransform::kPassthrough:
      return "passthrough";
  }
  return "passthrough";
}

ScalingTransform parse_scaling_transform(const std::string& text) {
  if (text == "standardize") {
    return ScalingTransform::kStandardize;
  }
  if (text == "minmax" || text == "min-max") {
    return ScalingTransform::kMinMax;
  }
  if (text == "passthrough" || text == "none") {
    return ScalingTransform::kPassthrough;
  }
  throw ConfigError("unknown scaling transform '" + text + "'");
}

ScalingTransform ScalingPolicy::transform_for(const std::string& covariate) const {
  const auto it = overrides.find(covariate);
  return it == overrides.end() ? default_transform : it->second;
}

Eigen::MatrixXd ScalingRecipe::apply(const Eigen::MatrixXd& raw) const {
  if (static_cast<std::size_t>(raw.cols()) != columns.size()) {
    throw std::invalid_argument("scaling recipe width does not match the matrix");
  }
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    const auto& col = columns[static_cast<std::size_t>(c)];
    out.col(c) = (raw.col(c).array() - col.center) / col.scale;
  }
  return out;
}

Eigen::MatrixXd ScalingRecipe::invert(const Eigen::MatrixXd& scaled) const {
  if (static_cast<std::size_t>(scaled.cols()) != columns.size()) {
    throw std::invalid_argument("scaling recipe width does not match the matrix");
  }
  Eigen::MatrixXd out(scaled.rows(), scaled.cols());
  for (Eigen::Index c = 0; c < scaled.cols(); ++c) {
    const auto& col = columns[static_cast<std::size_t>(c)];
    out.col(c) = scaled.col(c).array() * col.scale + col.center;
  }
  return out;
}

Panel ScalingRecipe::apply(const Panel& panel) const {
  Panel out = panel;
  out.covariates = apply(panel.covariates);
  return out;
}

ScalingRecipe fit_scaling(const Eigen::MatrixXd& data, const std::vector<std::string>& names,
                          const ScalingPolicy& policy) {
  ScalingRecipe recipe;
  const auto n = data.rows();
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    ColumnScaling col;
    col.name = names[static_cast<std::size_t>(c)];
    col.transform = policy.transform_for(col.name);
    const auto values = data.col(c);
    switch (col.transform) {
      case ScalingTransform::kStandardize: {
        if (n < 2) {
          throw IngestError("cannot standardize '" + col.name + "' from fewer than two rows");
        }
        const double mean = values.mean();
        const double ss = (values.array() - mean).square().sum();
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        if (!(sd > 0.0)) {
          throw IngestError("covariate '" + col.name + "' has zero spread; cannot standardize");
        }
        col.center = mean;
        col.scale = sd;
        break;
      }
      case ScalingTransform::kMinMax: {
        const double lo = values.minCoeff();
        const double hi = values.maxCoeff();
        if (!(hi > lo)) {
          throw IngestError("covariate '" + col.name + "' has zero spread; cannot min-max scale");
        }
        col.center = lo;
        col.scale = hi - lo;
        break;
      }
      case ScalingTransform::kPassthrough:
        break;
    }
    recipe.columns.push_back(std::move(col));
  }
  return recipe;
}

ScalingRecipe fit_scaling(const Panel& panel, const ScalingPolicy& policy) {
  return fit_scaling(panel.covariates, panel.covariate_names, policy);
}

std::pair<PcaReduction, Eigen::MatrixXd> pca_reduce(const Eigen::MatrixXd& block,
                                                    const PcaOptions& options) {
  const Eigen::Index n = block.rows();
  const Eigen::Index k = block.cols();
  if (k < 2) {
    throw std::invalid_argument("PCA needs at least two columns");
  }
  if (n < k) {
    throw std::invalid_argument("PCA needs at least as many rows as columns");
  }
  if (!(options.variance_threshold > 0.0 && options.variance_threshold <= 1.0)) {
    throw std::invalid_argument("PCA variance threshold must lie in (0, 1]");
  }
  if (options.forced_components &&
      (*options.forced_components == 0 || *options.forced_components > static_cast<std::size_t>(k))) {
    throw std::invalid_argument("forced PCA component count out of range");
  }

  PcaReduction pca;
  pca.column_means = block.colwise().mean().transpose();
  const Eigen::MatrixXd centered = block.rowwise() - pca.column_means.transpose();
  const Eigen::MatrixXd covariance = centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("PCA eigendecomposition failed");
  }
  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd values = solver.eigenvalues().reverse().cwiseMax(0.0);
  Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  const double total = values.sum();
  pca.explained_ratio =
      total > 0.0 ? Eigen::VectorXd(values / total) : Eigen::VectorXd::Zero(k);

  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0.0) {
      vectors.col(c) *= -1.0;
    }
  }

  if (options.forced_components) {
    pca.retained = *options.forced_components;
  } else {
    double cumulative = 0.0;
    pca.retained = static_cast<std::size_t>(k);
    for (Eigen::Index c = 0; c < k; ++c) {
      cumulative += pca.explained_ratio(c);
      if (cumulative >= options.variance_threshold - 1e-12) {
        pca.retained = static_cast<std::size_t>(c + 1);
        break;
      }
    }
  }
  pca.loadings = vectors.leftCols(static_cast<Eigen::Index>(pca.retained));
  Eigen::MatrixXd scores = centered * pca.loadings;
  return {std::move(pca), std::move(scores)};
}

BlockReduction reduce_block(const Panel& panel, const std::vector<std::string>& columns,
                            const PcaOptions& options, const std::string& prefix,
                            bool standardize_scores) {
  if (columns.empty()) {
    throw ConfigError("PCA block has no columns");
  }
  std::vector<std::size_t> block_index;
  for (const auto& name : columns) {
    block_index.push_back(panel.covariate_index(name));
  }
  Eigen::MatrixXd block(static_cast<Eigen::Index>(panel.size()),
                        static_cast<Eigen::Index>(block_index.size()));
  for (std::size_t c = 0; c < block_index.size(); ++c) {
    block.col(static_cast<Eigen::Index>(c)) =
        panel.covariates.col(static_cast<Eigen::Index>(block_index[c]));
  }
  auto [pca, scores] = pca_reduce(block, options);

  BlockReduction out;
  out.block_columns = columns;
  for (std::size_t c = 0; c < pca.retained; ++c) {
    out.score_names.push_back(prefix + std::to_string(c + 1));
  }
  if (standardize_scores) {
    out.score_scaling = fit_scaling(scores, out.score_names, ScalingPolicy{});
    scores = out.score_scaling->apply(scores);
  }

  const std::size_t first = *std::min_element(block_index.begin(), block_index.end());
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> cols;
  for (std::size_t c = 0; c < panel.covariate_count(); ++c) {
    if (c == first) {
      for (std::size_t s = 0; s < out.score_names.size(); ++s) {
        names.push_back(out.score_names[s]);
        cols.push_back(scores.col(static_cast<Eigen::Index>(s)));
      }
    }
    if (std::find(block_index.begin(), block_index.end(), c) != block_index.end()) {
      continue;
    }
    names.push_back(panel.covariate_names[c]);
    cols.push_back(panel.covariates.col(static_cast<Eigen::Index>(c)));
  }

  out.panel = panel;
  out.panel.covariate_names = names;
  out.panel.covariates.resize(static_cast<Eigen::Index>(panel.size()),
                              static_cast<Eigen::Index>(names.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.panel.covariates.col(static_cast<Eigen::Index>(c)) = cols[c];
  }
  out.pca = std::move(pca);
  return out;
}

const std::vector<CatalogEntry>& italy_covariate_catalog() {
  static const std::vector<CatalogEntry> catalog = {
      {"population", "Population", 1, "count"},
      {"over65", "More than 65 years old", 1, "percentage"},
      {"foreigners", "Foreigners", 1, "percentage"},
      {"foreigners_eu", "Foreigners from EU", 1, "percentage"},
      {"over65_alone", "More than 65 y/o living alone", 1, "percentage"},
      {"family_components", "Mean family components", 1, "average"},
      {"unemployment", "Unemployment", 1, "percentage"},
      {"gross_income", "Gross income", 1, "euro (thousands)"},
      {"wedding_rate", "Wedding rates", 1, "percentage"},
      {"university", "University (Bachelor's to PhD)", 1, "percentage"},
      {"mort_digestive_cancer", "Cancer of digestive system", 2, "rate"},
      {"mort_stomach_cancer", "Cancer of stomach", 2, "rate"},
      {"mort_diabetes", "Diabetes", 2, "rate"},
      {"mort_mental", "Mental disorders", 2, "rate"},
      {"mort_blood", "Blood diseases", 2, "rate"},
      {"mort_heart", "Heart diseases", 2, "rate"},
      {"mort_digestive", "Digestive diseases", 2, "rate"},
      {"mort_liver", "Liver diseases", 2, "rate"},
      {"mort_suicide", "Suicide", 2, "rate"},
      {"overweight", "Overweight", 3, "percentage"},
      {"overweight_young", "Overweight of younger", 3, "percentage"},
      {"cigarettes", "Cigarette consumption", 3, "count"},
      {"smoking_rate", "Smoking rate", 3, "percentage"},
      {"complete_breakfast", "Complete breakfast", 3, "percentage"},
      {"daily_cheese", "Daily cheese consumption", 3, "percentage"},
      {"red_meat", "Red meat consumption", 3, "percentage"},
      {"fish", "Fish consumption", 3, "percentage"},
      {"daily_vegetables", "Daily vegetables consumption", 3, "percentage"},
      {"dinner_main_meal", "Dinner as principal meal", 3, "percentage"},
      {"no_sport", "No sport participation", 3, "percentage"},
      {"adequate_nutrition", "Adequate nutrition", 3, "percentage"},
      {"alcohol", "Alcohol consumption", 3, "percentage"},
      {"bad_health", "Bad health", 4, "percentage"},
      {"life_expectancy", "Life expectancy", 4, "years"},
      {"le_good_health", "Life expectancy in good health", 4, "years"},
      {"le_no_limitations", "Life expectancy without limitations", 4, "years"},
      {"drug_consumption", "Drug consumption", 4, "percentage"},
      {"life_satisfaction", "Life satisfaction", 4, "percentage"},
      {"health_expenditure", "Health expenditure per capita", 4, "euro/population"},
  };
  return catalog;
}

std::vector<std::string> catalog_columns_in_group(int group) {
  std::vector<std::string> out;
  for (const auto& entry : italy_covariate_catalog()) {
    if (entry.group == group) {
      out.push_back(entry.column);
    }
  }
  return out;
}

void validate_against_catalog(const Panel& panel, const std::vector<CatalogEntry>& catalog) {
  std::vector<std::string> missing;
  std::vector<std::string> unexpected;
  for (const auto& entry : catalog) {
    if (std::find(panel.covariate_names.begin(), panel.covariate_names.end(), entry.column) ==
        panel.covariate_names.end()) {
      missing.push_back(entry.column);
    }
  }
  for (const auto& name : panel.covariate_names) {
    if (std::none_of(catalog.begin(), catalog.end(),
                     [&](const CatalogEntry& e) { return e.column == name; })) {
      unexpected.push_back(name);
    }
  }
  if (missing.empty() && unexpected.empty()) {
    return;
  }
  std::ostringstream msg;
  msg << "panel columns do not match the covariate catalog";
  auto list = [&msg](const char* label, const std::vector<std::string>& names) {
    if (names.empty()) {
      return;
    }
    msg << "; " << label << ":";
    for (const auto& n : names) {
      msg << ' ' << n;
    }
  };
  list("missing", missing);
  list("not in catalog", unexpected);
  throw IngestError(msg.str());
}

}  // namespace stbeta
