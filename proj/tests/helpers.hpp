#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "qsi/states.hpp"

namespace qsi::test {

inline double wrap_diff(double a, double b) {
  return std::remainder(a - b, 2.0 * qsi::kPi);
}

/// Uniform-on-the-sphere direction with uniform mu.
inline QubitState random_qubit(std::mt19937_64& rng, double pole_margin = 0.0,
                               double mu_min = 0.0) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double lo = std::cos(qsi::kPi - pole_margin);
  const double hi = std::cos(pole_margin);
  const double c = lo + (hi - lo) * u01(rng);
  const double theta = std::acos(c);
  const double phi = -qsi::kPi + 2.0 * qsi::kPi * u01(rng);
  const double mu = mu_min + (1.0 - mu_min) * u01(rng);
  return QubitState(theta, phi, mu);
}

inline QuditPureState random_qudit(std::mt19937_64& rng, int dim, double pole_margin = 0.0) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> thetas(dim - 1), phis(dim - 1);
  for (int i = 0; i < dim - 1; ++i) {
    thetas[i] = pole_margin + (qsi::kPi - 2.0 * pole_margin) * u01(rng);
    phis[i] = -qsi::kPi + 2.0 * qsi::kPi * u01(rng);
  }
  return QuditPureState(dim, thetas, phis);
}

}  // namespace qsi::test
