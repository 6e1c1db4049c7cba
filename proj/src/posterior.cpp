#include "stbeta/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <exception>
#include <stdexcept>

#include "stbeta/csv.hpp"
#include "stbeta/draws_io.hpp"
#include "stbeta/errors.hpp"

namespace stbeta {

namespace {

std::string indexed(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i + 1) + "]";
}

const std::vector<double>& require_column(const PosteriorDraws& draws, const std::string& name,
                                          std::vector<double>& storage) {
  if (!draws.has(name)) {
    throw IngestError("draws lack column '" + name + "'");
  }
  storage = draws.pooled(name);
  return storage;
}

std::string optional_field(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : "NA";
}

const char* kSummaryHeader = "mean,sd,cv,skewness,kurtosis,q025,median,q975";

std::string summary_fields(const SummaryRow& row) {
  std::string out = csv::format_double(row.mean) + "," + csv::format_double(row.sd) + ",";
  out += optional_field(row.cv) + "," + optional_field(row.skewness) + "," +
         optional_field(row.kurtosis) + ",";
  out += csv::format_double(row.q025) + "," + csv::format_double(row.median) + "," +
         csv::format_double(row.q975);
  return out;
}

// Pooled rows first, then (optionally) one row per chain, tagged by scope.
struct Scoped {
  std::string scope;
  std::vector<double> values;
};

std::vector<Scoped> scopes_for(const PosteriorDraws& draws, const std::string& name,
                               bool per_chain) {
  std::vector<Scoped> out;
  out.push_back({"pooled", draws.pooled(name)});
  if (per_chain) {
    for (std::size_t c = 0; c < draws.chain_count(); ++c) {
      out.push_back({"chain" + std::to_string(c + 1), draws.chain_column(c, name)});
    }
  }
  return out;
}

class TableWriter {
 public:
  TableWriter(const std::string& directory, const std::string& file, const RunMetadata& metadata,
              std::vector<std::string>& written)
      : path_((std::filesystem::path(directory) / file).string()),
        written_(written),
        pending_exceptions_(std::uncaught_exceptions()) {
    out_ << provenance_comment(metadata) << '\n';
  }
  // Writes on scope exit unless the table was abandoned by an exception.
  ~TableWriter() noexcept(false) {
    if (std::uncaught_exceptions() > pending_exceptions_) return;
    std::ofstream file(path_, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write '" + path_ + "'");
    file << out_.str();
    written_.push_back(path_);
  }
  std::ostringstream& out() { return out_; }

 private:
  std::string path_;
  std::ostringstream out_;
  std::vector<std::string>& written_;
  int pending_exceptions_;
};

}  // namespace

double quantile(std::vector<double> values, double probability) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = probability * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SummaryRow summarize(std::span<const double> draws, const std::string& name) {
  if (draws.size() < 2) {
    throw std::invalid_argument("summary of '" + name + "' needs at least two draws");
  }
  SummaryRow row;
  row.name = name;
  row.draws = draws.size();
  const double n = static_cast<double>(draws.size());
  double sum = 0.0;
  for (double v : draws) sum += v;
  row.mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : draws) {
    const double d = v - row.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  row.sd = std::sqrt(m2 / (n - 1.0));
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 > 0.0) {
    row.cv = row.sd / row.mean;
    row.skewness = m3 / std::pow(m2, 1.5);
    row.kurtosis = m4 / (m2 * m2);
  } else {
    row.sd = 0.0;
  }
  std::vector<double> sorted(draws.begin(), draws.end());
  row.q025 = quantile(sorted, 0.025);
  row.median = quantile(sorted, 0.5);
  row.q975 = quantile(std::move(sorted), 0.975);
  return row;
}

std::vector<std::vector<double>> intercept_draws(const PosteriorDraws& draws) {
  std::vector<double> beta0;
  require_column(draws, "beta0", beta0);
  const std::size_t groups = std::max<std::size_t>(draws.metadata.group_labels.size(), 1);
  std::vector<std::vector<double>> out(groups, beta0);
  if (draws.has(indexed("gamma", 0))) {
    std::vector<double> gamma;
    for (std::size_t s = 0; s < groups; ++s) {
      require_column(draws, indexed("gamma", s), gamma);
      for (std::size_t d = 0; d < gamma.size(); ++d) out[s][d] += gamma[d];
    }
  } else if (draws.metadata.group_effect) {
    std::vector<double> gamma;
    require_column(draws, "gamma", gamma);
    for (std::size_t s = 1; s < groups; ++s) {
      for (std::size_t d = 0; d < gamma.size(); ++d) out[s][d] += gamma[d];
    }
  }
  return out;
}

std::vector<SummaryRow> derived_intercepts(const PosteriorDraws& draws) {
  std::vector<SummaryRow> rows;
  const auto xi = intercept_draws(draws);
  for (std::size_t s = 0; s < xi.size(); ++s) rows.push_back(summarize(xi[s], indexed("xi", s)));
  return rows;
}

double pp0(std::span<const double> draws) {
  if (draws.empty()) throw std::invalid_argument("PP0 of an empty sample");
  const auto positive = std::count_if(draws.begin(), draws.end(), [](double v) { return v > 0.0; });
  return static_cast<double>(positive) / static_cast<double>(draws.size());
}

std::vector<InclusionRow> inclusion_probabilities(const PosteriorDraws& draws) {
  std::vector<InclusionRow> rows;
  const auto& names = draws.metadata.covariate_names;
  for (std::size_t k = 0;; ++k) {
    const std::string column = indexed("omega", k);
    if (!draws.has(column)) break;
    const auto values = draws.pooled(column);
    double ones = 0.0;
    for (double v : values) {
      if (v == 1.0) {
        ones += 1.0;
      } else if (v != 0.0) {
        throw IngestError("indicator '" + column + "' holds non-binary value " +
                          csv::format_double(v));
      }
    }
    InclusionRow row;
    row.covariate = k < names.size() ? names[k] : column;
    row.probability = values.empty() ? 0.0 : ones / static_cast<double>(values.size());
    rows.push_back(row);
  }
  return rows;
}

double silverman_bandwidth(std::span<const double> draws) {
  if (draws.size() < 2) return 1.0;
  const SummaryRow s = summarize(draws);
  std::vector<double> copy(draws.begin(), draws.end());
  const double iqr = quantile(copy, 0.75) - quantile(copy, 0.25);
  double spread = s.sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  if (!(spread > 0.0)) spread = s.sd > 0.0 ? s.sd : 1.0;
  return 0.9 * spread * std::pow(static_cast<double>(draws.size()), -0.2);
}

std::vector<DensityPoint> kde_grid(std::span<const double> draws, std::size_t points) {
  if (draws.empty() || points < 2) return {};
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = silverman_bandwidth(sorted);
  const double lo = sorted.front() - 3.0 * h;
  const double hi = sorted.back() + 3.0 * h;
  const double step = (hi - lo) / static_cast<double>(points - 1);
  const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  std::vector<DensityPoint> grid(points);
  for (std::size_t g = 0; g < points; ++g) {
    const double x = lo + step * static_cast<double>(g);
    auto first = std::lower_bound(sorted.begin(), sorted.end(), x - 8.0 * h);
    auto last = std::upper_bound(first, sorted.end(), x + 8.0 * h);
    double sum = 0.0;
    for (auto it = first; it != last; ++it) {
      const double z = (x - *it) / h;
      sum += std::exp(-0.5 * z * z);
    }
    grid[g] = {x, sum * norm};
  }
  return grid;
}

std::vector<std::string> summary_report(const PosteriorDraws& draws, const std::string& directory,
                                        const ReportOptions& options) {
  std::filesystem::create_directories(directory);
  const RunMetadata& meta = draws.metadata;
  std::vector<std::string> written;
  std::vector<std::pair<std::string, std::vector<double>>> density_series;

  auto write_rows = [&](std::ostringstream& out, const std::string& lead, const std::string& name) {
    for (const auto& scoped : scopes_for(draws, name, options.per_chain)) {
      out << lead << summary_fields(summarize(scoped.values, name)) << ',' << scoped.scope << '\n';
    }
  };

  {
    TableWriter table(directory, "intercepts.csv", meta, written);
    table.out() << "parameter,group," << kSummaryHeader << ",scope\n";
    const auto xi = intercept_draws(draws);
    for (std::size_t s = 0; s < xi.size(); ++s) {
      const std::string label = s < meta.group_labels.size() ? meta.group_labels[s] : "";
      table.out() << indexed("xi", s) << ',' << csv::quote(label) << ','
                  << summary_fields(summarize(xi[s], indexed("xi", s))) << ",pooled\n";
      density_series.emplace_back(indexed("xi", s), xi[s]);
    }
    if (draws.has("gamma")) write_rows(table.out(), "gamma,,", "gamma");
    for (const std::string base : {"gamma", "gamma_mu", "gamma_sigma2"}) {
      for (std::size_t s = 0; draws.has(indexed(base, s)); ++s) {
        const std::string label = s < meta.group_labels.size() ? meta.group_labels[s] : "";
        write_rows(table.out(), indexed(base, s) + "," + csv::quote(label) + ",",
                   indexed(base, s));
      }
    }
  }
  {
    TableWriter table(directory, "coefficients.csv", meta, written);
    table.out() << "parameter,covariate," << kSummaryHeader << ",scope\n";
    for (std::size_t k = 0; draws.has(indexed("beta", k)); ++k) {
      const std::string label = k < meta.covariate_names.size() ? meta.covariate_names[k] : "";
      write_rows(table.out(), indexed("beta", k) + "," + csv::quote(label) + ",",
                 indexed("beta", k));
    }
  }
  if (draws.has(indexed("psi", 0))) {
    TableWriter table(directory, "spatial.csv", meta, written);
    table.out() << "region,parameter," << kSummaryHeader << ",scope\n";
    for (std::size_t i = 0; draws.has(indexed("psi", i)); ++i) {
      const std::string label = i < meta.region_names.size() ? meta.region_names[i] : "";
      write_rows(table.out(), csv::quote(label) + "," + indexed("psi", i) + ",", indexed("psi", i));
      density_series.emplace_back(indexed("psi", i), draws.pooled(indexed("psi", i)));
    }
  }
  if (draws.has(indexed("alpha", 0))) {
    {
      TableWriter table(directory, "temporal.csv", meta, written);
      table.out() << "t,year,parameter," << kSummaryHeader << ",scope\n";
      for (std::size_t t = 0; draws.has(indexed("alpha", t)); ++t) {
        const std::string year = t < meta.year_labels.size() ? std::to_string(meta.year_labels[t]) : "";
        write_rows(table.out(), std::to_string(t + 1) + "," + year + "," + indexed("alpha", t) + ",",
                   indexed("alpha", t));
        density_series.emplace_back(indexed("alpha", t), draws.pooled(indexed("alpha", t)));
      }
    }
    TableWriter table(directory, "pp0.csv", meta, written);
    std::ostringstream t_row, year_row, pp_row;
    t_row << "t";
    year_row << "year";
    pp_row << "pp0";
    for (std::size_t t = 0; draws.has(indexed("alpha", t)); ++t) {
      t_row << ',' << (t + 1);
      year_row << ',' << (t < meta.year_labels.size() ? std::to_string(meta.year_labels[t]) : "");
      pp_row << ',' << csv::format_double(pp0(draws.pooled(indexed("alpha", t))));
    }
    table.out() << t_row.str() << '\n' << year_row.str() << '\n' << pp_row.str() << '\n';
  }
  if (draws.has("rho")) {
    TableWriter table(directory, "rho.csv", meta, written);
    table.out() << "parameter," << kSummaryHeader << ",scope\n";
    write_rows(table.out(), "rho,", "rho");
    density_series.emplace_back("rho", draws.pooled("rho"));
  }
  {
    TableWriter table(directory, "phi.csv", meta, written);
    table.out() << "parameter," << kSummaryHeader << ",scope\n";
    write_rows(table.out(), "phi,", "phi");
    density_series.emplace_back("phi", draws.pooled("phi"));
  }
  if (draws.has("tau_psi") || draws.has("tau_alpha")) {
    TableWriter table(directory, "precisions.csv", meta, written);
    table.out() << "parameter," << kSummaryHeader << ",scope\n";
    for (const std::string name : {"tau_psi", "tau_alpha"}) {
      if (draws.has(name)) write_rows(table.out(), name + ",", name);
    }
  }
  {
    TableWriter table(directory, "inclusion.csv", meta, written);
    table.out() << "covariate,probability,included\n";
    for (const auto& row : inclusion_probabilities(draws)) {
      table.out() << csv::quote(row.covariate) << ',' << csv::format_double(row.probability) << ','
                  << (row.probability > options.inclusion_threshold ? 1 : 0) << '\n';
    }
  }
  if (options.densities) {
    TableWriter table(directory, "density.csv", meta, written);
    table.out() << "x,density,series\n";
    for (const auto& [series, values] : density_series) {
      for (const auto& point : kde_grid(values, options.density_points)) {
        table.out() << csv::format_double(point.x) << ',' << csv::format_double(point.density) << ','
                    << series << '\n';
      }
    }
  }
  return written;
}

}  // namespace stbeta
