#pragma once

#include <stdexcept>
#include <string>

namespace stbeta {

// Input files that cannot be turned into a valid Panel or RegionGraph.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The sampler could not start or produced an unusable state.
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition (e.g. ICAR conditional on an
// isolated region).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace stbeta
