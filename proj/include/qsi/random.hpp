#pragma once

#include <cstdint>
#include <random>

namespace qsi {

/// Deterministic sampler built on mt19937_64. Normal and Poisson draws are
/// implemented here rather than with std::*_distribution, whose output is
/// implementation-defined; identical seeds must give identical images.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();                    // [0, 1)
  double uniform(double lo, double hi);
  double normal();                     // standard normal, Box-Muller
  long poisson(double mean);
  std::uint64_t integer() { return engine_(); }

  /// Decorrelated stream for a work item; identical (seed, index) pairs
  /// give identical streams regardless of scheduling.
  static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qsi
