#pragma once

#include <cstdint>
#include <random>

namespace stbeta {

// Purposes that get their own deterministic RNG stream from the root seed.
enum class StreamPurpose : std::uint64_t {
  kChain = 1,
  kSimulation = 2,
  kPredictive = 3,
  kInitialization = 4,
};

/**
 * Derives a child seed from the root seed, a purpose tag and an index.
 *
 * child = splitmix64(root ^ splitmix64(purpose * 2^32 + index)); distinct
 * (purpose, index) pairs give unrelated mt19937_64 seeds, so chain c and the
 * simulation stream never share a state sequence start.
 */
std::uint64_t derive_seed(std::uint64_t root, StreamPurpose purpose, std::uint64_t index);

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  /// Gamma with the given shape and *rate*.
  double gamma(double shape, double rate);
  double beta(double a, double b);
  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace stbeta
