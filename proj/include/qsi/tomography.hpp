#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qsi/interferometer.hpp"
#include "qsi/states.hpp"

namespace qsi {

/// Photon budget for an estimation run. Standard tomography of a mixed
/// qubit needs three measurement settings; the interferometric route one.
struct ShotBudget {
  long total_shots = 0;
  int settings = 3;

  ShotBudget() = default;
  ShotBudget(long total, int settings_);
  long per_setting() const { return total_shots / settings; }
};

/// Linear-inversion tomography result. rescaled marks Bloch vectors that
/// left the unit ball and were pulled back to its surface.
struct QstResult {
  DensityMatrix rho;
  std::array<double, 3> bloch{};
  bool rescaled = false;
};

/// Density matrix from Bloch components, with out-of-ball vectors rescaled
/// to unit length. This is the shot-free limit of simulate_qst.
QstResult qst_linear_inversion(double rx, double ry, double rz);

/// Sample +-1 outcomes of the three Pauli settings with the budget split
/// evenly, then invert linearly. Throws std::invalid_argument when any
/// setting would get zero shots.
QstResult simulate_qst(const QubitState& state, const ShotBudget& budget, std::uint64_t seed);

/// Analytic settings-count economics for dimension d: one interferogram
/// per two-dimensional subspace versus general and pure-state tomography.
struct SettingsRow {
  int dim = 2;
  int qsi_settings = 1;        // d - 1
  int qst_settings = 3;        // d^2 - 1
  int qst_pure_settings = 3;   // 5d - 7
};

SettingsRow settings_row(int dim);

/// One cell of the method comparison.
struct ComparisonRow {
  QubitState state;
  std::string method;  // "qsi" or "qst"
  long shots = 0;
  int settings = 0;
  double fidelity_mean = 0.0;
  double fidelity_std = 0.0;
  int rescaled_runs = 0;   // qst only
  int clamped_runs = 0;    // qsi only
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::vector<SettingsRow> scaling;  // analytic d-scaling, d = 2..max_dim
};

/// Run the interferometric pipeline and the tomography baseline on each
/// state at the same total expected photon count, repeated over seeds.
ComparisonTable compare(const std::vector<QubitState>& states, const ShotBudget& budget,
                        const InterferometerConfig& cfg, int repetitions = 20,
                        std::uint64_t seed = 1, int max_dim = 6);

}  // namespace qsi
