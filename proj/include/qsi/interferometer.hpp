#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsi/states.hpp"

namespace qsi {

/// Waveplate orientations preparing the input polarization out of a
/// vertically polarized beam: half-wave plate at alpha, then an optional
/// quarter-wave plate at beta.
struct PreparationSetting {
  double alpha = 0.0;
  double beta = 0.0;
  bool qwp_present = true;

  PreparationSetting() = default;
  PreparationSetting(double alpha_, double beta_, bool qwp_present_ = true);
};

/// Geometry, exposure and noise of one synthetic acquisition.
struct InterferometerConfig {
  double fringe_wavenumber = 2.0 * kPi / 16.0;  // radians per pixel
  double envelope_center = 128.0;               // pixels
  double envelope_sigma = 48.0;                 // pixels
  int image_width = 256;
  int n_slices = 100;
  int n_images = 5;
  double peak_counts = 1.0e4;   // expected photons at the envelope peak
  double background = 20.0;     // counts per pixel
  double read_noise_sigma = 2.0;
  double bs_imbalance = 0.03;   // polarization-dependent splitting deviation
  bool shot_noise = true;       // Poisson counting; false gives exact means
  std::uint64_t rng_seed = 1;

  void validate() const;  // throws std::invalid_argument
};

/// What was sent into the interferometer, for the image sidecar.
struct SourceTag {
  enum class Kind { Qubit, QuditSubspace, Preparation };
  Kind kind = Kind::Qubit;
  QubitState qubit;
  QuditPureState qudit;
  int subspace = 1;  // 1-based k when kind == QuditSubspace
  PreparationSetting preparation;
};

/// One recorded image: n_slices rows of image_width nonnegative counts.
struct Interferogram {
  int width = 0;
  int n_slices = 0;
  std::vector<double> pixels;  // row-major, n_slices * width
  InterferometerConfig config;
  std::optional<SourceTag> source;
  std::uint64_t seed = 0;

  double at(int slice, int x) const { return pixels[static_cast<size_t>(slice) * width + x]; }
  const double* slice(int i) const { return pixels.data() + static_cast<size_t>(i) * width; }
};

/// Jones evolution of the vertical input through HWP(alpha) then QWP(beta);
/// the result is pure, mu = 1.
QubitState prepare_qubit(const PreparationSetting& setting);

/// Detector intensity (3 + cos theta + 2 mu sin theta cos(phase - phi)) / 8.
double intensity_curve(const QubitState& state, double phase);

/// Phase-averaged intensity (3 + cos theta)/8 and fringe contrast
/// 2 mu sin theta / (3 + cos theta).
double average_intensity(const QubitState& state);
double visibility(const QubitState& state);

/// Detector intensity for the k-th two-dimensional subspace of a pure qudit:
/// (norm_sq + m_pi + 2|m_sigma| cos(arg m_sigma - phase)) / 4.
double qudit_intensity_curve(const QuditPureState& state, int k, double phase);

/// Phase shift, contrast and phase-averaged level of one fringe pattern.
struct FringeObservables {
  double phase = 0.0;  // fringe phase offset
  double contrast = 0.0;
  double level = 0.0;  // phase-averaged intensity, in units of the input
};

FringeObservables fringe_observables(const QubitState& state);
FringeObservables fringe_observables(const QuditPureState& state, int k);

/// Noiseless expected counts at column x for the given fringe observables.
double expected_counts(const InterferometerConfig& cfg, const FringeObservables& obs, double x);

/// Synthesize one image. The pixel mean at column x is
///   background + A exp(-(x-m)^2 / (2 sigma^2)) (1 + v cos(k x + Phi))
/// with A = peak_counts * level / 0.5 and v the contrast scaled by
/// (1 - bs_imbalance); Poisson counting plus Gaussian read noise follow.
Interferogram synthesize(const QubitState& state, const InterferometerConfig& cfg);
Interferogram synthesize(const QuditPureState& state, int k, const InterferometerConfig& cfg);

/// n_images acquisitions with per-image seeds derived from cfg.rng_seed.
std::vector<Interferogram> synthesize_set(const QubitState& state, const InterferometerConfig& cfg);
std::vector<Interferogram> synthesize_set(const QuditPureState& state, int k,
                                          const InterferometerConfig& cfg);

}  // namespace qsi
