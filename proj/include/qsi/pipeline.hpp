#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "qsi/fringe.hpp"
#include "qsi/interferometer.hpp"
#include "qsi/reconstruct.hpp"
#include "qsi/tomography.hpp"

namespace qsi {

/// Run fn(0..n-1) on a bounded pool of workers. Results must go to
/// per-index slots; the call returns after all items finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned max_workers = 0);

/// One grid cell of the waveplate sweep.
struct SweepCell {
  double alpha = 0.0;  // radians
  double beta = 0.0;
  QubitState prepared;
  FringeEstimate estimate;      // phase already zero-referenced
  double theory_phase = 0.0;
  double theory_visibility = 0.0;
  double theory_avg_intensity = 0.0;
  double fidelity_pure = 0.0;   // purity-assumed reconstruction vs prepared
  double fidelity_mixed = 0.0;  // full inversion vs prepared
  unsigned recon_flags = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  Calibration calibration;
  double mean_fidelity_pure = 0.0;
  double mean_fidelity_mixed = 0.0;
};

struct SweepOptions {
  double alpha_step = kPi / 18.0;      // 10 degrees
  double beta_step = kPi / 18.0;
  double calibration_step = kPi / 36.0;  // 5 degrees, covers the level maximum
  std::uint64_t seed = 1;
};

/// Calibration run (no quarter-wave plate) followed by the full
/// synthesize -> fit -> invert pipeline over the (alpha, beta) grid.
SweepResult run_sweep(const InterferometerConfig& cfg, const SweepOptions& opts);

std::string sweep_to_csv(const SweepResult& result);
void write_sweep_plots(const std::filesystem::path& dir, const SweepResult& result);

/// Full single-setting pipeline: synthesize a qubit acquisition, fit it and
/// aggregate with the exact synthetic norm (peak_counts).
FringeEstimate acquire_estimate(const QubitState& state, const InterferometerConfig& cfg);

/// d-1 subspace acquisitions of a pure qudit, fitted and aggregated.
std::vector<FringeEstimate> acquire_qudit_estimates(const QuditPureState& state,
                                                    const InterferometerConfig& cfg);

std::string comparison_to_csv(const ComparisonTable& table);

}  // namespace qsi
