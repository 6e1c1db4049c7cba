#include "stbeta/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stbeta/errors.hpp"
#include "stbeta/numerics.hpp"
#include "stbeta/posterior.hpp"
#include "stbeta/rng.hpp"

namespace stbeta {

namespace {

std::string indexed(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i + 1) + "]";
}

Panel subset(const Panel& panel, const std::vector<std::size_t>& keep, std::size_t time_count) {
  Panel out;
  out.region_names = panel.region_names;
  out.group_labels = panel.group_labels;
  out.covariate_names = panel.covariate_names;
  out.year_labels.assign(panel.year_labels.begin(),
                         panel.year_labels.begin() + static_cast<std::ptrdiff_t>(time_count));
  out.covariates.resize(static_cast<Eigen::Index>(keep.size()), panel.covariates.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.rows.push_back(panel.rows[keep[i]]);
    out.covariates.row(static_cast<Eigen::Index>(i)) =
        panel.covariates.row(static_cast<Eigen::Index>(keep[i]));
  }
  return out;
}

template <class T>
std::size_t position_or_throw(const std::vector<T>& haystack, const T& needle,
                              const std::string& what) {
  const auto it = std::find(haystack.begin(), haystack.end(), needle);
  if (it == haystack.end()) {
    throw IngestError(what + " was not seen in training");
  }
  return static_cast<std::size_t>(it - haystack.begin());
}

double column_or(const PosteriorDraws& draws, std::span<const double> draw,
                 const std::string& name, double fallback) {
  return draws.has(name) ? draw[draws.index_of(name)] : fallback;
}

}  // namespace

TemporalSplit temporal_split(const Panel& panel, std::size_t test_time) {
  if (test_time < 2) {
    throw ConfigError("test time " + std::to_string(test_time) +
                      " leaves an empty training set (times are 1-based)");
  }
  if (test_time > panel.time_count()) {
    throw ConfigError("test time " + std::to_string(test_time) + " is beyond the panel's " +
                      std::to_string(panel.time_count()) + " times");
  }
  const std::size_t test_index = test_time - 1;
  std::vector<std::size_t> train_rows, test_rows;
  TemporalSplit split;
  for (std::size_t r = 0; r < panel.size(); ++r) {
    const std::size_t t = panel.rows[r].time;
    if (t < test_index) {
      train_rows.push_back(r);
    } else if (t == test_index) {
      test_rows.push_back(r);
    } else {
      ++split.dropped_rows;
    }
  }
  if (split.dropped_rows > 0) {
    split.warnings.push_back(std::to_string(split.dropped_rows) +
                             " rows after the test time are excluded");
  }
  split.train = subset(panel, train_rows, test_index);
  split.test = subset(panel, test_rows, test_time);
  return split;
}

PredictiveDraws posterior_predictive(const PosteriorDraws& draws, const Panel& test,
                                     std::uint64_t seed) {
  const RunMetadata& meta = draws.metadata;
  const std::size_t n_rows = test.size();
  const std::size_t n_draws = draws.total_draws();
  const std::size_t train_times = meta.year_labels.size();
  const bool temporal = draws.has(indexed("alpha", 0));
  const bool spatial = draws.has(indexed("psi", 0));
  const bool random_group = draws.has(indexed("gamma", 0));

  struct RowPlan {
    std::size_t region = 0;
    std::size_t group = 0;
    std::size_t time = 0;   // index into alpha when `ahead` is 0
    std::size_t ahead = 0;  // steps beyond the training horizon
  };
  std::vector<RowPlan> plan(n_rows);
  std::size_t max_ahead = 0;
  for (std::size_t r = 0; r < n_rows; ++r) {
    const Observation& obs = test.rows[r];
    RowPlan& p = plan[r];
    p.region = position_or_throw(meta.region_names, test.region_names.at(obs.region),
                                 "region '" + test.region_names.at(obs.region) + "'");
    p.group = position_or_throw(meta.group_labels, test.group_labels.at(obs.group),
                                "group '" + test.group_labels.at(obs.group) + "'");
    const int year = test.year_labels.at(obs.time);
    const auto known = std::find(meta.year_labels.begin(), meta.year_labels.end(), year);
    if (known != meta.year_labels.end()) {
      p.time = static_cast<std::size_t>(known - meta.year_labels.begin());
    } else if (train_times > 0 && year > meta.year_labels.back()) {
      const auto later = std::count_if(test.year_labels.begin(), test.year_labels.end(),
                                       [&](int y) { return y > meta.year_labels.back() && y <= year; });
      p.ahead = static_cast<std::size_t>(later);
      max_ahead = std::max(max_ahead, p.ahead);
    } else if (temporal) {
      throw IngestError("year " + std::to_string(year) + " is neither a training year nor after them");
    }
  }

  std::vector<std::size_t> covariate_column(meta.covariate_names.size());
  for (std::size_t k = 0; k < meta.covariate_names.size(); ++k) {
    covariate_column[k] = position_or_throw(test.covariate_names, meta.covariate_names[k],
                                            "covariate '" + meta.covariate_names[k] + "' in test");
  }

  std::vector<std::size_t> beta_index(meta.covariate_names.size());
  for (std::size_t k = 0; k < beta_index.size(); ++k) beta_index[k] = draws.index_of(indexed("beta", k));

  PredictiveDraws out;
  out.simulated.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_draws));
  out.log_density.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_draws));
  Rng rng(derive_seed(seed, StreamPurpose::kPredictive, 0));
  std::vector<double> future(max_ahead + 1, 0.0);

  std::size_t column = 0;
  for (std::size_t c = 0; c < draws.chain_count(); ++c) {
    for (std::size_t d = 0; d < draws.draws_in_chain(c); ++d, ++column) {
      const auto draw = draws.draw(c, d);
      const double beta0 = draw[draws.index_of("beta0")];
      const double phi = draw[draws.index_of("phi")];
      const double gamma = column_or(draws, draw, "gamma", 0.0);
      if (temporal && max_ahead > 0) {
        const double rho = draw[draws.index_of("rho")];
        const double sd = 1.0 / std::sqrt(draw[draws.index_of("tau_alpha")]);
        future[0] = draw[draws.index_of(indexed("alpha", train_times - 1))];
        for (std::size_t h = 1; h <= max_ahead; ++h) future[h] = rho * future[h - 1] + sd * rng.normal();
      }
      for (std::size_t r = 0; r < n_rows; ++r) {
        const RowPlan& p = plan[r];
        double eta = beta0;
        if (random_group) {
          eta += draw[draws.index_of(indexed("gamma", p.group))];
        } else if (p.group > 0) {
          eta += gamma;
        }
        for (std::size_t k = 0; k < beta_index.size(); ++k) {
          eta += draw[beta_index[k]] * test.covariates(static_cast<Eigen::Index>(r),
                                                       static_cast<Eigen::Index>(covariate_column[k]));
        }
        if (spatial) eta += draw[draws.index_of(indexed("psi", p.region))];
        if (temporal) {
          eta += p.ahead > 0 ? future[p.ahead] : draw[draws.index_of(indexed("alpha", p.time))];
        }
        const double mu = inv_logit(eta);
        double y = rng.beta(mu * phi, (1.0 - mu) * phi);
        for (int retry = 0; retry < 100 && !(y > 0.0 && y < 1.0); ++retry) {
          y = rng.beta(mu * phi, (1.0 - mu) * phi);
        }
        y = std::clamp(y, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
        const auto ri = static_cast<Eigen::Index>(r);
        const auto ci = static_cast<Eigen::Index>(column);
        out.simulated(ri, ci) = y;
        out.log_density(ri, ci) = beta_log_density(test.rows[r].rate, mu, phi);
      }
    }
  }
  return out;
}

std::vector<double> bayesian_p_values(const PredictiveDraws& pred, const Panel& test) {
  std::vector<double> bpv(pred.rows(), 0.0);
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    const double observed = test.rows.at(r).rate;
    const auto row = pred.simulated.row(static_cast<Eigen::Index>(r));
    const auto above = (row.array() > observed).count();
    bpv[r] = pred.draws() == 0 ? 0.0 : static_cast<double>(above) / static_cast<double>(pred.draws());
  }
  return bpv;
}

std::vector<double> point_predictions(const PredictiveDraws& pred, PointPredictor predictor) {
  std::vector<double> out(pred.rows(), 0.0);
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    const auto row = pred.simulated.row(static_cast<Eigen::Index>(r));
    if (predictor == PointPredictor::kMean) {
      out[r] = row.mean();
    } else {
      out[r] = quantile(std::vector<double>(row.begin(), row.end()), 0.5);
    }
  }
  return out;
}

MetricsRow metrics(const PredictiveDraws& pred, const Panel& test, const std::string& model,
                   PointPredictor predictor) {
  if (pred.rows() != test.size()) {
    throw ContractViolation("predictive draws are not aligned with the test rows");
  }
  MetricsRow row;
  row.model = model;
  const auto point = point_predictions(pred, predictor);
  double sq = 0.0, abs_sum = 0.0;
  double sq_group[2] = {0.0, 0.0};
  std::size_t n_group[2] = {0, 0};
  for (std::size_t r = 0; r < test.size(); ++r) {
    const double e = point[r] - test.rows[r].rate;
    sq += e * e;
    abs_sum += std::abs(e);
    const std::size_t g = test.rows[r].group;
    if (g < 2) {
      sq_group[g] += e * e;
      ++n_group[g];
    }
  }
  const double n = static_cast<double>(test.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  row.rmse = test.size() ? std::sqrt(sq / n) : nan;
  row.mae = test.size() ? abs_sum / n : nan;
  row.rmse_female = n_group[0] ? std::sqrt(sq_group[0] / static_cast<double>(n_group[0])) : nan;
  row.rmse_male = n_group[1] ? std::sqrt(sq_group[1] / static_cast<double>(n_group[1])) : nan;
  const auto bpv = bayesian_p_values(pred, test);
  double bpv_sum = 0.0;
  for (double b : bpv) bpv_sum += b;
  row.mbpv = bpv.empty() ? nan : bpv_sum / static_cast<double>(bpv.size());
  row.slpd = 0.0;
  std::vector<double> logs(pred.draws());
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    const auto ld = pred.log_density.row(static_cast<Eigen::Index>(r));
    std::copy(ld.begin(), ld.end(), logs.begin());
    row.slpd += log_mean_exp(logs);
  }
  return row;
}

std::vector<ComparisonEntry> compare_models(const Panel& panel, const RegionGraph& graph,
                                            const std::vector<ModelConfig>& variants,
                                            std::size_t test_time,
                                            const std::vector<std::string>& labels,
                                            PointPredictor predictor) {
  const TemporalSplit split = temporal_split(panel, test_time);
  std::vector<ComparisonEntry> out;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    ComparisonEntry entry;
    entry.label = v < labels.size() ? labels[v] : to_string(variants[v].variant);
    try {
      const PosteriorDraws draws = run_sampler(variants[v], split.train, graph);
      const PredictiveDraws pred =
          posterior_predictive(draws, split.test, variants[v].sampler.seed);
      entry.metrics = metrics(pred, split.test, entry.label, predictor);
      entry.bpv = bayesian_p_values(pred, split.test);
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace stbeta
