#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cmath>

#include "helpers.hpp"
#include "qsi/pipeline.hpp"

using namespace qsi;
using qsi::test::wrap_diff;

TEST_CASE("noiseless sweep points sit on the theory curves") {
  InterferometerConfig cfg;
  cfg.shot_noise = false;
  cfg.read_noise_sigma = 0.0;
  cfg.bs_imbalance = 0.0;
  cfg.image_width = 128;
  cfg.envelope_center = 64.0;
  cfg.envelope_sigma = 24.0;
  cfg.n_slices = 4;
  cfg.n_images = 1;

  SweepOptions opts;
  opts.alpha_step = kPi / 6.0;
  opts.beta_step = kPi / 6.0;
  opts.calibration_step = kPi / 12.0;  // includes the brightest setting

  const SweepResult result = run_sweep(cfg, opts);
  REQUIRE(result.cells.size() == 36);
  CHECK(result.calibration.norm_reference == doctest::Approx(cfg.peak_counts).epsilon(1e-9));
  CHECK(std::abs(result.calibration.phase_zero) < 1e-9);

  for (const auto& cell : result.cells) {
    CHECK(std::abs(cell.estimate.avg_intensity - cell.theory_avg_intensity) < 1e-6);
    CHECK(std::abs(cell.estimate.visibility - cell.theory_visibility) < 1e-6);
    if (cell.theory_visibility > 1e-3)
      CHECK(std::abs(wrap_diff(cell.estimate.phase_shift, cell.theory_phase)) < 1e-6);
    CHECK(cell.fidelity_pure > 1.0 - 1e-9);
    CHECK(cell.fidelity_mixed > 1.0 - 1e-9);
  }
  CHECK(result.mean_fidelity_pure > 1.0 - 1e-9);
}

TEST_CASE("sweep csv carries measurement and theory columns") {
  InterferometerConfig cfg;
  cfg.shot_noise = false;
  cfg.read_noise_sigma = 0.0;
  cfg.bs_imbalance = 0.0;
  cfg.image_width = 128;
  cfg.envelope_center = 64.0;
  cfg.envelope_sigma = 24.0;
  cfg.n_slices = 4;
  cfg.n_images = 1;
  SweepOptions opts;
  opts.alpha_step = kPi / 3.0;
  opts.beta_step = kPi / 3.0;
  opts.calibration_step = kPi / 12.0;

  const std::string csv = sweep_to_csv(run_sweep(cfg, opts));
  CHECK(csv.rfind("alpha,beta,phase,phase_std,visibility,visibility_std,avg_intensity,"
                  "avg_intensity_std,theory_phase,theory_visibility,theory_avg_intensity,"
                  "fidelity_pure,fidelity_mixed,flags\n", 0) == 0);
  size_t lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 9 + 1);
}

TEST_CASE("parallel_for covers every index exactly once and propagates errors") {
  std::vector<std::atomic<int>> hits(257);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); }, 4);
  for (const auto& h : hits) CHECK(h.load() == 1);

  CHECK_THROWS_AS(
      parallel_for(8, [](std::size_t i) {
        if (i == 5) throw std::runtime_error("boom");
      }, 3),
      std::runtime_error);
}
