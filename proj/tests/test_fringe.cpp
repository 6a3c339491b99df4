#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "qsi/errors.hpp"
#include "qsi/fringe.hpp"
#include "qsi/interferometer.hpp"

using namespace qsi;
using qsi::test::random_qubit;
using qsi::test::wrap_diff;

namespace {

std::vector<double> model_slice(const FringeParams& p, int width) {
  std::vector<double> s(width);
  for (int x = 0; x < width; ++x) s[x] = p.model(x);
  return s;
}

FringeParams random_params(std::mt19937_64& rng, int width) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FringeParams p;
  p.amplitude = 50.0 + u(rng) * 5.0e4;
  p.background = u(rng) * 0.1 * p.amplitude;
  const double sigma = width / 12.0 + u(rng) * (width / 5.0 - width / 12.0);
  p.curvature = 1.0 / (2.0 * sigma * sigma);
  p.center = width * (0.35 + 0.3 * u(rng));
  p.contrast = u(rng);
  const double period = 4.0 + u(rng) * (width / 4.0 - 4.0);
  p.wavenumber = 2.0 * kPi / period;
  p.phase = -kPi + 2.0 * kPi * u(rng);
  return p;
}

SliceFit fit_params_slice(const FringeParams& truth, int width) {
  const std::vector<double> slice = model_slice(truth, width);
  return fit_slice_auto(slice);
}

bool recovered(const FringeParams& got, const FringeParams& truth, double tol) {
  const double a_scale = truth.amplitude;
  if (std::abs(got.amplitude - truth.amplitude) > tol * a_scale) return false;
  if (std::abs(got.background - truth.background) > tol * a_scale) return false;
  if (std::abs(got.curvature - truth.curvature) > tol * truth.curvature) return false;
  if (std::abs(got.center - truth.center) > tol * std::max(truth.center, 1.0)) return false;
  if (std::abs(got.contrast - truth.contrast) > std::max(tol, tol * truth.contrast))
    return false;
  if (truth.contrast > 1e-3) {
    if (std::abs(got.wavenumber - truth.wavenumber) > tol * truth.wavenumber) return false;
    if (std::abs(wrap_diff(got.phase, truth.phase)) > tol * kPi) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("spectral guess lands within one bin on clean data") {
  FringeParams p;
  p.background = 50.0;
  p.amplitude = 1000.0;
  p.curvature = 1.0 / (2.0 * 40.0 * 40.0);
  p.center = 130.0;
  p.contrast = 0.6;
  p.wavenumber = 2.0 * kPi / 16.0;
  p.phase = 0.8;
  const auto slice = model_slice(p, 256);
  const FringeParams guess = initial_guess(slice);
  CHECK(std::abs(guess.wavenumber - p.wavenumber) < 2.0 * kPi / 256.0);
  CHECK(std::abs(wrap_diff(guess.phase, p.phase)) < 0.5);
  CHECK(guess.amplitude == doctest::Approx(p.amplitude).epsilon(0.3));
}

TEST_CASE("guess on a fringe-free slice clamps contrast low and the fit removes it") {
  InterferometerConfig cfg;
  cfg.shot_noise = false;
  cfg.read_noise_sigma = 0.0;
  cfg.n_slices = 1;
  const Interferogram img = synthesize(QubitState(0.0, 0.0, 1.0), cfg);
  std::span<const double> row(img.slice(0), static_cast<size_t>(img.width));
  const FringeParams guess = initial_guess(row);
  CHECK(guess.contrast == doctest::Approx(0.05));
  const SliceFit fit = fit_slice(row, guess);
  CHECK(fit.converged);
  CHECK(fit.params.contrast < 1e-5);
  CHECK(fit.params.amplitude == doctest::Approx(cfg.peak_counts).epsilon(1e-5));
}

TEST_CASE("all-equal slice is rejected as degenerate") {
  const std::vector<double> flat(64, 7.0);
  CHECK_THROWS_AS(initial_guess(flat), FitError);
  const std::vector<double> tiny(8, 1.0);
  CHECK_THROWS_AS(initial_guess(tiny), std::invalid_argument);
}

TEST_CASE("noiseless fits recover every parameter set") {
  std::mt19937_64 rng(31);
  int converged = 0, exact = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    const FringeParams truth = random_params(rng, 256);
    const SliceFit fit = fit_params_slice(truth, 256);
    if (fit.converged) ++converged;
    if (recovered(fit.params, truth, 1e-6)) ++exact;

    std::vector<double> slice = model_slice(truth, 256);
    double norm = 0.0;
    for (double v : slice) norm += v * v;
    CHECK(fit.residual_norm < 1e-9 * std::sqrt(norm));
  }
  CHECK(converged == trials);
  CHECK(exact == trials);
}

TEST_CASE("noisy fits converge quickly") {
  std::mt19937_64 rng(32);
  InterferometerConfig cfg;
  cfg.n_slices = 1;
  cfg.bs_imbalance = 0.0;
  int fast = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    cfg.rng_seed = 1000 + t;
    const Interferogram img = synthesize(random_qubit(rng), cfg);
    std::span<const double> row(img.slice(0), static_cast<size_t>(img.width));
    try {
      const SliceFit fit = fit_slice(row, initial_guess(row));
      if (fit.converged && fit.iterations <= 50) ++fast;
    } catch (const FitError&) {
    }
  }
  CHECK(fast >= trials * 99 / 100);
}

TEST_CASE("zero-contrast slice leaves the phase unidentifiable") {
  FringeParams p;
  p.background = 10.0;
  p.amplitude = 2000.0;
  p.curvature = 1.0 / (2.0 * 45.0 * 45.0);
  p.center = 128.0;
  p.contrast = 0.0;
  p.wavenumber = 2.0 * kPi / 16.0;
  p.phase = 0.4;
  const auto slice = model_slice(p, 256);
  FringeParams guess = initial_guess(slice);
  guess.contrast = 0.0;  // start on the degenerate manifold
  const SliceFit fit = fit_slice(slice, guess);
  CHECK(!std::isfinite(fit.covariance(6, 6)));
  CHECK(fit.degenerate.find("phase") != std::string::npos);

  const std::vector<SliceFit> fits(40, fit);
  const FringeEstimate est = aggregate(fits, 2000.0);
  CHECK(est.has_flag(EstimateFlag::PhaseIndeterminate));
  CHECK(est.has_flag(EstimateFlag::LowVisibility));
}

TEST_CASE("reported contrast errors cover the truth") {
  InterferometerConfig cfg;
  cfg.n_slices = 1;
  cfg.bs_imbalance = 0.0;
  const QubitState s(kPi / 2.0, 0.7, 1.0);
  const double v_true = visibility(s);
  int within3 = 0, within1 = 0, total = 0;
  for (int t = 0; t < 500; ++t) {
    cfg.rng_seed = 40000 + t;
    const Interferogram img = synthesize(s, cfg);
    std::span<const double> row(img.slice(0), static_cast<size_t>(img.width));
    const SliceFit fit = fit_slice(row, initial_guess(row));
    if (!fit.converged) continue;
    ++total;
    const double se = std::sqrt(fit.covariance(4, 4));
    if (std::abs(fit.params.contrast - v_true) <= 3.0 * se) ++within3;
    if (std::abs(fit.params.contrast - v_true) <= se) ++within1;
  }
  CHECK(total >= 495);
  CHECK(within3 * 100 >= total * 95);
  CHECK(within1 * 100 >= total * 55);  // rough 1-sigma sanity
  CHECK(within1 * 100 <= total * 82);
}

TEST_CASE("phase estimate ignores offset and positive scaling") {
  FringeParams p;
  p.background = 100.0;
  p.amplitude = 3000.0;
  p.curvature = 1.0 / (2.0 * 50.0 * 50.0);
  p.center = 120.0;
  p.contrast = 0.55;
  p.wavenumber = 2.0 * kPi / 20.0;
  p.phase = -1.1;
  auto slice = model_slice(p, 256);
  const SliceFit base = fit_slice(slice, initial_guess(slice));

  std::vector<double> transformed = slice;
  for (double& v : transformed) v = 2.5 * v + 37.0;
  const SliceFit moved = fit_slice(transformed, initial_guess(transformed));
  CHECK(moved.converged);
  CHECK(std::abs(wrap_diff(moved.params.phase, base.params.phase)) < 1e-8);
  CHECK(moved.params.amplitude == doctest::Approx(2.5 * base.params.amplitude).epsilon(1e-8));
  CHECK(moved.params.background ==
        doctest::Approx(2.5 * base.params.background + 37.0).epsilon(1e-6));
}

TEST_CASE("aggregate handles the antipodal wrap") {
  FringeParams p;
  p.amplitude = 1.0;
  std::vector<SliceFit> fits;
  for (double phase : {kPi - 0.1, -kPi + 0.1}) {
    SliceFit f;
    f.params = p;
    f.params.phase = phase;
    f.converged = true;
    f.covariance.setZero();
    fits.push_back(f);
  }
  const FringeEstimate est = aggregate(fits, 1.0);
  CHECK(std::abs(wrap_diff(est.phase_shift, kPi)) < 1e-12);
}

TEST_CASE("identical slices aggregate with zero uncertainty") {
  SliceFit f;
  f.params.amplitude = 500.0;
  f.params.contrast = 0.4;
  f.params.phase = 0.9;
  f.converged = true;
  f.covariance.setZero();
  const std::vector<SliceFit> fits(25, f);
  const FringeEstimate est = aggregate(fits, 1000.0);
  CHECK(est.phase_std == 0.0);
  CHECK(est.visibility_std == 0.0);
  CHECK(est.avg_intensity_std == 0.0);
  CHECK(est.avg_intensity == doctest::Approx(0.25));
  CHECK(est.n_slices_used == 25);
}

TEST_CASE("aggregate is permutation invariant and rotation equivariant") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SliceFit> fits;
  for (int i = 0; i < 40; ++i) {
    SliceFit f;
    f.params.amplitude = 900.0 + 10.0 * u(rng);
    f.params.contrast = 0.5 + 0.02 * u(rng);
    f.params.phase = 0.3 + 0.05 * u(rng);
    f.converged = true;
    f.covariance.setZero();
    fits.push_back(f);
  }
  const FringeEstimate base = aggregate(fits, 1000.0);

  std::vector<SliceFit> shuffled = fits;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const FringeEstimate perm = aggregate(shuffled, 1000.0);
  CHECK(perm.phase_shift == doctest::Approx(base.phase_shift).epsilon(1e-12));
  CHECK(perm.visibility == doctest::Approx(base.visibility).epsilon(1e-12));
  CHECK(perm.avg_intensity == doctest::Approx(base.avg_intensity).epsilon(1e-12));

  const double delta = 2.0;
  std::vector<SliceFit> rotated = fits;
  for (auto& f : rotated) f.params.phase = wrap_angle(f.params.phase + delta);
  const FringeEstimate rot = aggregate(rotated, 1000.0);
  CHECK(std::abs(wrap_diff(rot.phase_shift, base.phase_shift + delta)) < 1e-10);
}

TEST_CASE("aggregate failure accounting") {
  SliceFit good;
  good.params.amplitude = 100.0;
  good.params.contrast = 0.5;
  good.params.phase = 0.1;
  good.converged = true;
  good.covariance.setZero();
  SliceFit bad;
  bad.converged = false;

  CHECK_THROWS_AS(aggregate({bad, bad, bad}, 1.0), FitError);
  CHECK_THROWS_AS(aggregate({good, bad, bad}, 1.0), FitError);  // under half
  CHECK_THROWS_AS(aggregate({good, good}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(aggregate(std::vector<SliceFit>{}, 1.0), FitError);

  const FringeEstimate est = aggregate({good, good, good, bad}, 100.0);
  CHECK(est.has_flag(EstimateFlag::FitFailures));
  CHECK(est.n_slices_used == 3);

  const FringeEstimate raw = aggregate_unnormalized({good, good});
  CHECK(raw.has_flag(EstimateFlag::Unnormalized));
  CHECK(raw.avg_intensity == doctest::Approx(100.0));
}

TEST_CASE("noiseless synthesis and fit agree on every model parameter") {
  InterferometerConfig cfg;
  cfg.shot_noise = false;
  cfg.read_noise_sigma = 0.0;
  cfg.n_slices = 1;
  cfg.bs_imbalance = 0.01;
  const QubitState s(1.9, -2.2, 0.75);
  const Interferogram img = synthesize(s, cfg);
  const SliceFit fit = fit_slice_auto({img.slice(0), static_cast<size_t>(img.width)});
  REQUIRE(fit.converged);

  const double amplitude = cfg.peak_counts * average_intensity(s) / 0.5;
  const double contrast = visibility(s) * (1.0 - cfg.bs_imbalance);
  const double curvature = 1.0 / (2.0 * cfg.envelope_sigma * cfg.envelope_sigma);
  CHECK(fit.params.background == doctest::Approx(cfg.background).epsilon(1e-6));
  CHECK(fit.params.amplitude == doctest::Approx(amplitude).epsilon(1e-6));
  CHECK(fit.params.curvature == doctest::Approx(curvature).epsilon(1e-6));
  CHECK(fit.params.center == doctest::Approx(cfg.envelope_center).epsilon(1e-6));
  CHECK(fit.params.contrast == doctest::Approx(contrast).epsilon(1e-6));
  CHECK(fit.params.wavenumber == doctest::Approx(cfg.fringe_wavenumber).epsilon(1e-6));
  CHECK(std::abs(wrap_diff(fit.params.phase, s.phi)) < 1e-6);
}

TEST_CASE("noisy acquisition recovers the observables within three errors") {
  InterferometerConfig cfg;
  cfg.rng_seed = 42;
  cfg.n_images = 1;
  cfg.bs_imbalance = 0.0;
  const QubitState s(kPi / 2.0, 1.2, 0.9);
  const FringeEstimate est = aggregate(fit_image(synthesize(s, cfg)), cfg.peak_counts);
  CHECK(std::abs(wrap_diff(est.phase_shift, s.phi)) <= 3.0 * est.phase_std);
  CHECK(std::abs(est.visibility - visibility(s)) <= 3.0 * est.visibility_std);
  CHECK(std::abs(est.avg_intensity - average_intensity(s)) <= 3.0 * est.avg_intensity_std);
}

TEST_CASE("many-slice acquisition pins the phase shift") {
  InterferometerConfig cfg;
  cfg.n_slices = 500;
  cfg.bs_imbalance = 0.0;
  cfg.rng_seed = 7;
  const QubitState s(kPi / 2.0, 0.7, 1.0);
  const FringeEstimate est = aggregate(fit_image(synthesize(s, cfg)), cfg.peak_counts);
  CHECK(std::abs(wrap_diff(est.phase_shift, 0.7)) < 0.01);
  CHECK(est.visibility == doctest::Approx(visibility(s)).epsilon(0.02));
  CHECK(est.avg_intensity == doctest::Approx(average_intensity(s)).epsilon(0.01));
}

TEST_CASE("calibration norm tracks the brightest half-wave setting") {
  InterferometerConfig cfg;
  cfg.shot_noise = false;
  cfg.read_noise_sigma = 0.0;
  cfg.n_slices = 4;

  std::vector<Interferogram> sweep;
  for (int i = 0; i < 36; ++i) {
    const double alpha = i * kPi / 36.0;
    sweep.push_back(synthesize(prepare_qubit(PreparationSetting(alpha, 0.0, false)), cfg));
  }
  const double norm = calibrate_norm(sweep);
  CHECK(norm == doctest::Approx(cfg.peak_counts).epsilon(1e-6));

  const std::vector<Interferogram> single{sweep[3]};
  const FringeEstimate only = aggregate_unnormalized(fit_image(sweep[3]));
  CHECK(calibrate_norm(single) == doctest::Approx(only.avg_intensity).epsilon(1e-12));

  CHECK_THROWS_AS(calibrate_norm({}), std::invalid_argument);

  InterferometerConfig noisy = cfg;
  noisy.shot_noise = true;
  noisy.read_noise_sigma = 2.0;
  noisy.n_slices = 50;
  std::vector<Interferogram> noisy_sweep;
  for (int i = 0; i < 36; ++i) {
    noisy.rng_seed = 500 + i;
    noisy_sweep.push_back(
        synthesize(prepare_qubit(PreparationSetting(i * kPi / 36.0, 0.0, false)), noisy));
  }
  CHECK(calibrate_norm(noisy_sweep) == doctest::Approx(norm).epsilon(0.01));
}

TEST_CASE("calibration phase reference vanishes for the ideal instrument") {
  InterferometerConfig cfg;
  cfg.shot_noise = false;
  cfg.read_noise_sigma = 0.0;
  cfg.n_slices = 4;
  std::vector<FringeEstimate> runs;
  for (int i = 0; i < 36; ++i) {
    const double alpha = i * kPi / 36.0;
    const QubitState s = prepare_qubit(PreparationSetting(alpha, 0.0, false));
    runs.push_back(aggregate_unnormalized(fit_image(synthesize(s, cfg))));
  }
  const Calibration cal = calibrate(runs);
  CHECK(cal.norm_reference == doctest::Approx(cfg.peak_counts).epsilon(1e-6));
  CHECK(std::abs(cal.phase_zero) < 1e-3);
}
