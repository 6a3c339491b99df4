#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsi/interferometer.hpp"

namespace qsi {

/// Parameters of the slice model
///   background + amplitude * exp(-curvature (x - center)^2)
///                          * (1 + contrast * cos(wavenumber * x + phase)).
struct FringeParams {
  double background = 0.0;
  double amplitude = 0.0;
  double curvature = 0.0;  // 1 / (2 sigma^2)
  double center = 0.0;
  double contrast = 0.0;   // held in [0, 1.05] while fitting
  double wavenumber = 0.0;
  double phase = 0.0;      // wrapped to (-pi, pi]

  std::array<double, 7> as_array() const;
  static FringeParams from_array(const std::array<double, 7>& p);
  static const char* name(int index);

  double model(double x) const;
};

/// Outcome of one per-slice fit. Non-convergence and rank loss are reported
/// in-band so callers can drop the slice and keep going.
struct SliceFit {
  FringeParams params;
  Eigen::Matrix<double, 7, 7> covariance = Eigen::Matrix<double, 7, 7>::Zero();
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string degenerate;  // names of unidentifiable parameters, if any

  bool usable() const { return converged; }
};

/// Spectral/envelope starting point for the slice model.
/// Throws FitError when the slice is degenerate (all values equal).
FringeParams initial_guess(std::span<const double> slice);

/// Ranked starting points, one per significant spectral peak. Weak fringes
/// under a strong envelope may not own the largest peak, so several
/// candidates are worth trying.
std::vector<FringeParams> initial_guess_candidates(std::span<const double> slice,
                                                   int max_candidates);

/// Damped least squares on the slice model. Converges when the relative
/// cost change or the parameter step drops below 1e-10; gives up after 200
/// iterations (converged = false, last iterate kept).
SliceFit fit_slice(std::span<const double> slice, const FringeParams& guess);

/// Guess candidates + fit, keeping the converged fit with the smallest
/// residual.
SliceFit fit_slice_auto(std::span<const double> slice, int max_candidates = 6);

/// Guess + fit for every slice of an image; failed slices are kept with
/// converged = false.
std::vector<SliceFit> fit_image(const Interferogram& image);
std::vector<SliceFit> fit_images(const std::vector<Interferogram>& images);

enum class EstimateFlag : unsigned {
  PhaseIndeterminate = 1u << 0,
  LowVisibility = 1u << 1,
  FitFailures = 1u << 2,
  Unnormalized = 1u << 3,
};

/// Phase shift, visibility and average intensity with uncertainties;
/// the per-acquisition statistic the inversion consumes.
struct FringeEstimate {
  double phase_shift = 0.0;      // circular mean over slices
  double phase_std = 0.0;        // standard error of the circular mean
  double visibility = 0.0;       // mean slice contrast, clamped to [0, 1]
  double visibility_std = 0.0;
  double avg_intensity = 0.0;    // in [0, 1] when normalized
  double avg_intensity_std = 0.0;
  int n_slices_used = 0;
  unsigned flags = 0;

  bool has_flag(EstimateFlag f) const { return (flags & static_cast<unsigned>(f)) != 0; }
  void set_flag(EstimateFlag f) { flags |= static_cast<unsigned>(f); }
};

std::vector<std::string> flag_names(unsigned flags);
unsigned flags_from_names(const std::vector<std::string>& names);

/// Reduce per-slice fits to one estimate. The phase uses circular
/// statistics; visibility and level use plain means with standard errors.
/// avg_intensity is 0.5 * mean(amplitude) / norm_reference so the
/// largest calibration level maps to one half. Throws FitError when more
/// than half of the slices failed; std::invalid_argument when
/// norm_reference <= 0.
FringeEstimate aggregate(const std::vector<SliceFit>& fits, double norm_reference);

/// Same reduction without a calibration reference: avg_intensity stays in
/// raw counts and the estimate is flagged Unnormalized.
FringeEstimate aggregate_unnormalized(const std::vector<SliceFit>& fits);

/// Largest background-free mean envelope amplitude across a calibration
/// sweep taken without the quarter-wave plate. Downstream levels divide by
/// this and scale by 0.5. Throws std::invalid_argument on an empty sweep.
double calibrate_norm(const std::vector<Interferogram>& hwp_sweep);

/// Calibration outputs of the sweep without the quarter-wave plate.
struct Calibration {
  double norm_reference = 0.0;
  double phase_zero = 0.0;
};

/// Norm plus fringe-phase zero reference from per-setting unnormalized
/// estimates. The zero reference is an axial (doubled-angle) circular mean
/// weighted by visibility, since the calibration states sit on the two
/// opposite equatorial azimuths and a plain mean would cancel.
Calibration calibrate(const std::vector<FringeEstimate>& hwp_only_runs);

/// Circular helpers shared with the reconstruction layer.
double circular_mean(std::span<const double> angles);
double circular_resultant(std::span<const double> angles);  // mean resultant length

}  // namespace qsi
