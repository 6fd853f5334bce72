#pragma once

#include <stdexcept>
#include <string>

namespace purify {

struct InvalidDimension : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidRank : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidState : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidMeasurement : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Post-selected branch has probability below the 1e-12 threshold.
struct ZeroProbabilityBranch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Spectrum has a gap below the degeneracy threshold where a finite drift is required.
struct DegenerateSpectrum : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Diffusion matrix failed the PSD check.
struct CovarianceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SizeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace purify
