#pragma once

#include <stdexcept>
#include <string>

namespace qsi {

/// Unreadable or malformed input file.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Fringe model fitting failed beyond recovery.
struct FitError : std::runtime_error {
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

/// State inversion failed (bad estimates, ill-conditioned chain, ...).
struct ReconstructionError : std::runtime_error {
  explicit ReconstructionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qsi
