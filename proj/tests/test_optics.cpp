#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "helpers.hpp"
#include "qsi/interferometer.hpp"
#include "qsi/states.hpp"

using namespace qsi;
using qsi::test::random_qubit;
using qsi::test::wrap_diff;

namespace {

// independent retarder evaluation: R(psi) diag(1, e^{-i gamma}) R(-psi)
Eigen::Matrix2cd retarder(double gamma, double psi) {
  Eigen::Matrix2cd rot, delay;
  rot << std::cos(psi), -std::sin(psi), std::sin(psi), std::cos(psi);
  delay << 1.0, 0.0, 0.0, std::exp(Complex(0.0, -gamma));
  return rot * delay * rot.transpose();
}

struct BlochAngles {
  double theta;
  double phi;
};

BlochAngles bloch_of_ket(const Eigen::Vector2cd& v) {
  BlochAngles out;
  out.theta = std::acos(std::clamp(std::norm(v(0)) - std::norm(v(1)), -1.0, 1.0));
  out.phi = wrap_angle(std::arg(v(1) * std::conj(v(0))));
  return out;
}

}  // namespace

TEST_CASE("waveplate preparation at reference settings") {
  const QubitState vertical = prepare_qubit(PreparationSetting(0.0, 0.0, false));
  CHECK(vertical.theta == doctest::Approx(kPi));
  CHECK(vertical.mu == 1.0);

  const QubitState diagonal = prepare_qubit(PreparationSetting(kPi / 8.0, 0.0, false));
  CHECK(diagonal.theta == doctest::Approx(kPi / 2.0).epsilon(1e-12));
}

TEST_CASE("waveplate preparation matches an independent retarder evaluation") {
  for (int ia = 0; ia < 18; ++ia) {
    for (int ib = 0; ib < 18; ++ib) {
      const double alpha = ia * kPi / 18.0;
      const double beta = ib * kPi / 18.0;
      Eigen::Vector2cd v(0.0, 1.0);
      v = retarder(kPi, alpha) * v;        // half wave
      v = retarder(kPi / 2.0, beta) * v;   // quarter wave
      const BlochAngles want = bloch_of_ket(v);

      const QubitState got = prepare_qubit(PreparationSetting(alpha, beta, true));
      CHECK(got.theta == doctest::Approx(want.theta).epsilon(1e-10));
      if (std::sin(want.theta) > 1e-6)
        CHECK(std::abs(wrap_diff(got.phi, want.phi)) < 1e-10);
    }
  }
}

TEST_CASE("intensity law at reference points") {
  CHECK(intensity_curve(QubitState(kPi / 2.0, 0.0, 1.0), 0.0) == doctest::Approx(5.0 / 8.0));
  for (double phase : {0.0, 0.7, 2.9, -1.3})
    CHECK(intensity_curve(QubitState(0.0, 0.0, 1.0), phase) == doctest::Approx(0.5));
}

TEST_CASE("intensity law against the expectation-value route") {
  const QubitState s(2.0 * kPi / 3.0, 1.0, 0.5);
  const DensityMatrix rho = density_matrix(s);
  const Complex ladder = expect(Operator2::sigma_minus(), rho);
  const Complex proj = expect(Operator2::pi0(), rho);
  for (int i = 0; i < 100; ++i) {
    const double phase = -kPi + 2.0 * kPi * i / 100.0;
    const double oracle =
        0.25 * (1.0 + proj.real() +
                2.0 * std::abs(ladder) * std::cos(std::arg(ladder) - phase));
    CHECK(intensity_curve(s, phase) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("intensity stays nonnegative and its phase statistics match") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 300; ++i) {
    const QubitState s = random_qubit(rng);
    const int n = 256;
    double sum = 0.0, mx = -1.0, mn = 2.0;
    for (int j = 0; j < n; ++j) {
      const double phase = 2.0 * kPi * j / n;
      const double val = intensity_curve(s, phase);
      CHECK(val >= 0.0);
      sum += val;
      mx = std::max(mx, val);
      mn = std::min(mn, val);
    }
    CHECK(sum / n == doctest::Approx(average_intensity(s)).epsilon(1e-12));
    (void)mx;
    (void)mn;
  }

  // contrast from a dense sweep against the closed form
  for (const QubitState& s :
       {QubitState(1.1, 0.4, 0.8), QubitState(2.3, -2.0, 1.0), QubitState(0.4, 2.8, 0.3)}) {
    const int n = 1 << 17;
    double mx = -1.0, mn = 2.0;
    for (int j = 0; j < n; ++j) {
      const double val = intensity_curve(s, 2.0 * kPi * j / n);
      mx = std::max(mx, val);
      mn = std::min(mn, val);
    }
    CHECK(std::abs((mx - mn) / (mx + mn) - visibility(s)) < 1e-9);
  }
}

TEST_CASE("contrast peaks at sqrt(2)/2 where cos theta = -1/3") {
  // golden-section maximization of the closed-form contrast at mu = 1
  auto vis = [](double theta) { return visibility(QubitState(theta, 0.0, 1.0)); };
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = kPi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  while (b - a > 1e-12) {
    if (vis(c) > vis(d)) b = d; else a = c;
    c = b - gr * (b - a);
    d = a + gr * (b - a);
  }
  const double theta_star = 0.5 * (a + b);
  CHECK(vis(theta_star) == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-9));
  CHECK(std::cos(theta_star) == doctest::Approx(-1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("qudit intensity reduces to the qubit law at d = 2") {
  const QuditPureState s(2, {1.2}, {0.8});
  const QubitState q(1.2, 0.8, 1.0);
  for (int i = 0; i < 64; ++i) {
    const double phase = -kPi + 2.0 * kPi * i / 64.0;
    // norm_sq = 1 for d = 2, so the subspace curve equals half of
    // (1 + <Pi0> + fringe term) scaled exactly like the qubit law
    CHECK(qudit_intensity_curve(s, 1, phase) ==
          doctest::Approx(intensity_curve(q, phase)).epsilon(1e-12));
  }
}

TEST_CASE("qudit subspace with no lower weight shows no fringe") {
  const QuditPureState s(3, {0.0, 1.3}, {0.2, 0.4});
  for (int i = 0; i < 32; ++i)
    CHECK(qudit_intensity_curve(s, 1, -kPi + i * kPi / 16.0) == doctest::Approx(0.5));
}

TEST_CASE("qudit intensity against the arm-superposition oracle") {
  const QuditPureState s(3, {kPi / 2.0, kPi / 2.0}, {0.3, 0.7});
  for (int k = 1; k <= 2; ++k) {
    Complex prefix(1.0, 0.0);
    for (int j = 0; j < k - 1; ++j)
      prefix *= std::sin(0.5 * s.thetas[j]) * std::exp(Complex(0.0, s.phis[j]));
    const double cos_next = k == 2 ? 1.0 : std::cos(0.5 * s.thetas[k]);
    Eigen::Vector2cd psi;
    psi << prefix * std::cos(0.5 * s.thetas[k - 1]),
        prefix * std::sin(0.5 * s.thetas[k - 1]) * std::exp(Complex(0.0, s.phis[k - 1])) *
            cos_next;
    const Eigen::Matrix2cd pi0 = Operator2::pi0().entries();
    const Eigen::Matrix2cd sx = Operator2::sigma_x().entries();
    for (int i = 0; i < 64; ++i) {
      const double phase = -kPi + 2.0 * kPi * i / 64.0;
      const Eigen::Vector2cd out =
          pi0 * psi + std::exp(Complex(0.0, -phase)) * (sx * psi);
      CHECK(qudit_intensity_curve(s, k, phase) ==
            doctest::Approx(0.25 * out.squaredNorm()).epsilon(1e-12));
    }
  }
}

TEST_CASE("synthesized image matches the envelope-cosine expression exactly") {
  InterferometerConfig cfg;
  cfg.shot_noise = false;
  cfg.read_noise_sigma = 0.0;
  cfg.background = 0.0;
  cfg.bs_imbalance = 0.0;
  cfg.n_slices = 3;
  const QubitState s(kPi / 2.0, 0.0, 1.0);
  const Interferogram img = synthesize(s, cfg);

  const double amplitude = cfg.peak_counts * average_intensity(s) / 0.5;
  const double contrast = visibility(s);
  for (int x = 0; x < img.width; ++x) {
    const double dx = x - cfg.envelope_center;
    const double env = std::exp(-dx * dx / (2.0 * cfg.envelope_sigma * cfg.envelope_sigma));
    const double want =
        amplitude * env * (1.0 + contrast * std::cos(cfg.fringe_wavenumber * x + s.phi));
    for (int slice = 0; slice < img.n_slices; ++slice)
      CHECK(img.at(slice, x) == doctest::Approx(want).epsilon(1e-12));
  }

  // column at a cosine maximum carries amplitude (1 + contrast) x envelope
  const int x_max = static_cast<int>(std::round(2.0 * kPi / cfg.fringe_wavenumber * 8.0));
  const double dx = x_max - cfg.envelope_center;
  CHECK(img.at(0, x_max) ==
        doctest::Approx(amplitude * (1.0 + contrast) *
                        std::exp(-dx * dx / (2.0 * cfg.envelope_sigma * cfg.envelope_sigma)))
            .epsilon(1e-12));
}

TEST_CASE("pole state synthesizes a flat envelope with no modulation") {
  InterferometerConfig cfg;
  cfg.shot_noise = false;
  cfg.read_noise_sigma = 0.0;
  cfg.background = 5.0;
  cfg.n_slices = 1;
  const Interferogram img = synthesize(QubitState(0.0, 0.0, 1.0), cfg);
  const double amplitude = cfg.peak_counts * 0.5 / 0.5;
  for (int x = 0; x < img.width; ++x) {
    const double dx = x - cfg.envelope_center;
    const double env = std::exp(-dx * dx / (2.0 * cfg.envelope_sigma * cfg.envelope_sigma));
    CHECK(img.at(0, x) == doctest::Approx(cfg.background + amplitude * env).epsilon(1e-12));
  }
}

TEST_CASE("beam-splitter imbalance scales only the modulation") {
  InterferometerConfig cfg;
  cfg.shot_noise = false;
  cfg.read_noise_sigma = 0.0;
  cfg.background = 0.0;
  cfg.bs_imbalance = 0.03;
  cfg.n_slices = 1;
  const QubitState s(kPi / 2.0, 0.0, 1.0);
  const Interferogram img = synthesize(s, cfg);
  const double amplitude = cfg.peak_counts * average_intensity(s) / 0.5;
  const double contrast = visibility(s) * 0.97;
  for (int x = 0; x < img.width; x += 7) {
    const double dx = x - cfg.envelope_center;
    const double env = std::exp(-dx * dx / (2.0 * cfg.envelope_sigma * cfg.envelope_sigma));
    CHECK(img.at(0, x) ==
          doctest::Approx(amplitude * env *
                          (1.0 + contrast * std::cos(cfg.fringe_wavenumber * x + s.phi)))
              .epsilon(1e-12));
  }
}

TEST_CASE("identical seeds reproduce identical images") {
  InterferometerConfig cfg;
  cfg.rng_seed = 99;
  cfg.n_slices = 10;
  const QubitState s(1.0, 0.5, 0.9);
  const Interferogram a = synthesize(s, cfg);
  const Interferogram b = synthesize(s, cfg);
  CHECK(a.pixels == b.pixels);

  cfg.rng_seed = 100;
  const Interferogram c = synthesize(s, cfg);
  CHECK(a.pixels != c.pixels);
}

TEST_CASE("config validation") {
  InterferometerConfig cfg;
  cfg.fringe_wavenumber = 2.0;  // period ~ 3.1 px
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = InterferometerConfig{};
  cfg.n_slices = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = InterferometerConfig{};
  cfg.bs_imbalance = 0.2;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
