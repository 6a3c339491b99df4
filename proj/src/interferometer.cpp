#include "qsi/interferometer.hpp"

#include <cmath>
#include <stdexcept>

#include "qsi/random.hpp"

namespace qsi {

PreparationSetting::PreparationSetting(double alpha_, double beta_, bool qwp_present_)
    : alpha(wrap_orientation(alpha_)), beta(wrap_orientation(beta_)), qwp_present(qwp_present_) {}

void InterferometerConfig::validate() const {
  if (!(fringe_wavenumber > 0.0) || 2.0 * kPi / fringe_wavenumber < 4.0)
    throw std::invalid_argument("config: fringe period must be at least 4 pixels");
  if (image_width < 16) throw std::invalid_argument("config: image_width < 16");
  if (n_slices < 1) throw std::invalid_argument("config: n_slices < 1");
  if (n_images < 1) throw std::invalid_argument("config: n_images < 1");
  if (!(peak_counts >= 0.0)) throw std::invalid_argument("config: peak_counts < 0");
  if (!(envelope_sigma > 0.0)) throw std::invalid_argument("config: envelope_sigma <= 0");
  if (!(background >= 0.0)) throw std::invalid_argument("config: background < 0");
  if (!(read_noise_sigma >= 0.0)) throw std::invalid_argument("config: read_noise_sigma < 0");
  if (!(bs_imbalance >= 0.0 && bs_imbalance <= 0.1))
    throw std::invalid_argument("config: bs_imbalance outside [0, 0.1]");
}

QubitState prepare_qubit(const PreparationSetting& setting) {
  Eigen::Vector2cd v(0.0, 1.0);  // vertical input, |0> = horizontal
  v = Operator2::hwp(setting.alpha).entries() * v;
  if (setting.qwp_present) v = Operator2::qwp(setting.beta).entries() * v;

  const double theta = 2.0 * std::atan2(std::abs(v(1)), std::abs(v(0)));
  double phi = 0.0;
  if (std::abs(v(0)) > 0.0 && std::abs(v(1)) > 0.0)
    phi = wrap_angle(std::arg(v(1)) - std::arg(v(0)));
  return QubitState(theta, phi, 1.0);
}

double intensity_curve(const QubitState& state, double phase) {
  return (3.0 + std::cos(state.theta) +
          2.0 * state.mu * std::sin(state.theta) * std::cos(phase - state.phi)) / 8.0;
}

double average_intensity(const QubitState& state) {
  return (3.0 + std::cos(state.theta)) / 8.0;
}

double visibility(const QubitState& state) {
  return 2.0 * state.mu * std::sin(state.theta) / (3.0 + std::cos(state.theta));
}

double qudit_intensity_curve(const QuditPureState& state, int k, double phase) {
  const SubspaceMoments mo = subspace_moments(state, k);
  return 0.25 * (mo.norm_sq + mo.m_pi +
                 2.0 * std::abs(mo.m_sigma) * std::cos(std::arg(mo.m_sigma) - phase));
}

FringeObservables fringe_observables(const QubitState& state) {
  FringeObservables obs;
  obs.phase = state.phi;
  obs.contrast = visibility(state);
  obs.level = average_intensity(state);
  return obs;
}

FringeObservables fringe_observables(const QuditPureState& state, int k) {
  const SubspaceMoments mo = subspace_moments(state, k);
  FringeObservables obs;
  obs.level = 0.25 * (mo.norm_sq + mo.m_pi);
  obs.contrast = obs.level > 0.0 ? 0.5 * std::abs(mo.m_sigma) / obs.level : 0.0;
  obs.phase = std::abs(mo.m_sigma) > 0.0 ? std::arg(mo.m_sigma) : 0.0;
  return obs;
}

double expected_counts(const InterferometerConfig& cfg, const FringeObservables& obs, double x) {
  const double amplitude = cfg.peak_counts * obs.level / 0.5;
  const double v = obs.contrast * (1.0 - cfg.bs_imbalance);
  const double dx = x - cfg.envelope_center;
  const double envelope = std::exp(-dx * dx / (2.0 * cfg.envelope_sigma * cfg.envelope_sigma));
  return cfg.background +
         amplitude * envelope * (1.0 + v * std::cos(cfg.fringe_wavenumber * x + obs.phase));
}

namespace {

Interferogram synthesize_impl(const FringeObservables& obs, const InterferometerConfig& cfg,
                              SourceTag source, std::uint64_t seed) {
  cfg.validate();
  Interferogram img;
  img.width = cfg.image_width;
  img.n_slices = cfg.n_slices;
  img.config = cfg;
  img.source = std::move(source);
  img.seed = seed;
  img.pixels.resize(static_cast<size_t>(cfg.n_slices) * cfg.image_width);

  std::vector<double> mean(cfg.image_width);
  for (int x = 0; x < cfg.image_width; ++x) mean[x] = expected_counts(cfg, obs, x);

  Rng rng(seed);
  for (int s = 0; s < cfg.n_slices; ++s) {
    double* row = img.pixels.data() + static_cast<size_t>(s) * cfg.image_width;
    for (int x = 0; x < cfg.image_width; ++x) {
      double value = cfg.shot_noise ? static_cast<double>(rng.poisson(mean[x])) : mean[x];
      if (cfg.read_noise_sigma > 0.0) value += cfg.read_noise_sigma * rng.normal();
      row[x] = value < 0.0 ? 0.0 : value;
    }
  }
  return img;
}

}  // namespace

Interferogram synthesize(const QubitState& state, const InterferometerConfig& cfg) {
  SourceTag tag;
  tag.kind = SourceTag::Kind::Qubit;
  tag.qubit = state;
  return synthesize_impl(fringe_observables(state), cfg, std::move(tag), cfg.rng_seed);
}

Interferogram synthesize(const QuditPureState& state, int k, const InterferometerConfig& cfg) {
  SourceTag tag;
  tag.kind = SourceTag::Kind::QuditSubspace;
  tag.qudit = state;
  tag.subspace = k;
  return synthesize_impl(fringe_observables(state, k), cfg, std::move(tag), cfg.rng_seed);
}

std::vector<Interferogram> synthesize_set(const QubitState& state, const InterferometerConfig& cfg) {
  std::vector<Interferogram> images;
  images.reserve(cfg.n_images);
  for (int i = 0; i < cfg.n_images; ++i) {
    InterferometerConfig c = cfg;
    c.rng_seed = Rng::derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(i));
    images.push_back(synthesize(state, c));
  }
  return images;
}

std::vector<Interferogram> synthesize_set(const QuditPureState& state, int k,
                                          const InterferometerConfig& cfg) {
  std::vector<Interferogram> images;
  images.reserve(cfg.n_images);
  for (int i = 0; i < cfg.n_images; ++i) {
    InterferometerConfig c = cfg;
    c.rng_seed = Rng::derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(i));
    images.push_back(synthesize(state, k, c));
  }
  return images;
}

}  // namespace qsi
