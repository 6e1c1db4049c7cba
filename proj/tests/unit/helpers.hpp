#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>
#include <string>
#include <vector>

#include "stbeta/ingest.hpp"
#include "stbeta/spatial.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("stbeta_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline stbeta::RegionGraph path_graph(std::size_t n) {
  std::vector<std::string> names;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    names.push_back("n" + std::to_string(i));
    if (i + 1 < n) edges.emplace_back(i, i + 1);
  }
  return stbeta::RegionGraph(names, edges);
}

inline Eigen::MatrixXd laplacian(const stbeta::RegionGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.region_count());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < g.region_count(); ++i) {
    for (std::size_t j : g.neighbours(i)) {
      q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -1.0;
      q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += 1.0;
    }
  }
  return q;
}

// Small complete panel: R regions x T times x G groups, p covariates drawn
// from N(0,1), rates uniform in (0.1, 0.9).
inline stbeta::Panel toy_panel(std::size_t regions, std::size_t times, std::size_t groups,
                               std::size_t covariates, unsigned seed = 1) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.1, 0.9);
  stbeta::Panel p;
  for (std::size_t i = 0; i < regions; ++i) p.region_names.push_back("n" + std::to_string(i));
  for (std::size_t t = 0; t < times; ++t) p.year_labels.push_back(2000 + static_cast<int>(t));
  p.group_labels = groups == 2 ? std::vector<std::string>{"female", "male"}
                               : std::vector<std::string>{"female"};
  for (std::size_t k = 0; k < covariates; ++k) p.covariate_names.push_back("x" + std::to_string(k + 1));
  p.covariates.resize(static_cast<Eigen::Index>(regions * times * groups),
                      static_cast<Eigen::Index>(covariates));
  std::size_t r = 0;
  for (std::size_t i = 0; i < regions; ++i) {
    for (std::size_t t = 0; t < times; ++t) {
      for (std::size_t s = 0; s < groups; ++s, ++r) {
        p.rows.push_back({i, t, s, unif(gen)});
        for (std::size_t k = 0; k < covariates; ++k) {
          p.covariates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = normal(gen);
        }
      }
    }
  }
  return p;
}

inline std::string source_path(const std::string& relative) {
  return std::string(STBETA_SOURCE_DIR) + "/" + relative;
}

}  // namespace testing
