#include "qsi/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "qsi/random.hpp"
#include "qsi/svg.hpp"

namespace qsi {

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned max_workers) {
  if (n == 0) return;
  unsigned workers = max_workers ? max_workers : std::thread::hardware_concurrency();
  workers = std::min<std::size_t>(std::max(1u, workers), n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

FringeEstimate acquire_estimate(const QubitState& state, const InterferometerConfig& cfg) {
  const auto images = synthesize_set(state, cfg);
  return aggregate(fit_images(images), cfg.peak_counts);
}

std::vector<FringeEstimate> acquire_qudit_estimates(const QuditPureState& state,
                                                    const InterferometerConfig& cfg) {
  std::vector<FringeEstimate> ests;
  ests.reserve(state.dim - 1);
  for (int k = 1; k <= state.dim - 1; ++k) {
    InterferometerConfig c = cfg;
    c.rng_seed = Rng::derive_seed(cfg.rng_seed, 0xd00 + static_cast<std::uint64_t>(k));
    const auto images = synthesize_set(state, k, c);
    ests.push_back(aggregate(fit_images(images), c.peak_counts));
  }
  return ests;
}

SweepResult run_sweep(const InterferometerConfig& cfg, const SweepOptions& opts) {
  cfg.validate();
  if (!(opts.alpha_step > 0.0) || !(opts.beta_step > 0.0) || !(opts.calibration_step > 0.0))
    throw std::invalid_argument("run_sweep: grid steps must be positive");

  // calibration: half-wave plate only, sweep covering the level maximum
  std::vector<double> cal_alphas;
  for (double a = 0.0; a < kPi - 1e-9; a += opts.calibration_step) cal_alphas.push_back(a);
  std::vector<FringeEstimate> cal_runs(cal_alphas.size());
  parallel_for(cal_alphas.size(), [&](std::size_t i) {
    InterferometerConfig c = cfg;
    c.rng_seed = Rng::derive_seed(opts.seed, 0xca1 + i);
    const QubitState state = prepare_qubit(PreparationSetting(cal_alphas[i], 0.0, false));
    cal_runs[i] = aggregate_unnormalized(fit_images(synthesize_set(state, c)));
  });
  const Calibration cal = calibrate(cal_runs);

  std::vector<std::pair<double, double>> grid;
  for (double a = 0.0; a < kPi - 1e-9; a += opts.alpha_step)
    for (double b = 0.0; b < kPi - 1e-9; b += opts.beta_step) grid.emplace_back(a, b);

  SweepResult result;
  result.calibration = cal;
  result.cells.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    SweepCell& cell = result.cells[i];
    cell.alpha = grid[i].first;
    cell.beta = grid[i].second;
    cell.prepared = prepare_qubit(PreparationSetting(cell.alpha, cell.beta, true));

    InterferometerConfig c = cfg;
    c.rng_seed = Rng::derive_seed(opts.seed, 0x9000 + i);
    const auto images = synthesize_set(cell.prepared, c);
    FringeEstimate est = aggregate(fit_images(images), cal.norm_reference);
    est.phase_shift = wrap_angle(est.phase_shift - cal.phase_zero);
    cell.estimate = est;

    cell.theory_phase = cell.prepared.phi;
    cell.theory_visibility = visibility(cell.prepared);
    cell.theory_avg_intensity = average_intensity(cell.prepared);

    const ReconstructionResult pure = reconstruct_pure_assumed(est);
    const ReconstructionResult mixed = invert_qubit(est);
    cell.recon_flags = pure.flags | mixed.flags;

    const Eigen::VectorXcd target_ket = [&] {
      Eigen::VectorXcd ket(2);
      ket << std::cos(0.5 * cell.prepared.theta),
          std::exp(Complex(0.0, cell.prepared.phi)) * std::sin(0.5 * cell.prepared.theta);
      return ket;
    }();
    cell.fidelity_pure = fidelity(pure.density(), target_ket);
    cell.fidelity_mixed = fidelity(mixed.density(), density_matrix(cell.prepared));
  });

  double sum_pure = 0.0, sum_mixed = 0.0;
  for (const auto& cell : result.cells) {
    sum_pure += cell.fidelity_pure;
    sum_mixed += cell.fidelity_mixed;
  }
  result.mean_fidelity_pure = sum_pure / static_cast<double>(result.cells.size());
  result.mean_fidelity_mixed = sum_mixed / static_cast<double>(result.cells.size());
  return result;
}

std::string sweep_to_csv(const SweepResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "alpha,beta,phase,phase_std,visibility,visibility_std,avg_intensity,"
         "avg_intensity_std,theory_phase,theory_visibility,theory_avg_intensity,"
         "fidelity_pure,fidelity_mixed,flags\n";
  for (const auto& c : result.cells) {
    out << c.alpha << ',' << c.beta << ',' << c.estimate.phase_shift << ','
        << c.estimate.phase_std << ',' << c.estimate.visibility << ','
        << c.estimate.visibility_std << ',' << c.estimate.avg_intensity << ','
        << c.estimate.avg_intensity_std << ',' << c.theory_phase << ','
        << c.theory_visibility << ',' << c.theory_avg_intensity << ',' << c.fidelity_pure << ','
        << c.fidelity_mixed << ',';
    const auto names = flag_names(c.estimate.flags);
    for (size_t i = 0; i < names.size(); ++i) {
      if (i) out << ';';
      out << names[i];
    }
    out << '\n';
  }
  return out.str();
}

void write_sweep_plots(const std::filesystem::path& dir, const SweepResult& result) {
  // one figure per observable: theory curves vs beta, one per alpha,
  // with the simulated points and error bars on top
  struct Field {
    const char* file;
    const char* title;
    const char* ylab;
    std::function<double(const SweepCell&)> value;
    std::function<double(const SweepCell&)> err;
    std::function<double(const SweepCell&)> theory;
  };
  const std::vector<Field> fields = {
      {"phase_shift.svg", "Fringe phase shift", "phase [rad]",
       [](const SweepCell& c) { return c.estimate.phase_shift; },
       [](const SweepCell& c) { return c.estimate.phase_std; },
       [](const SweepCell& c) { return c.theory_phase; }},
      {"visibility.svg", "Fringe visibility", "visibility",
       [](const SweepCell& c) { return c.estimate.visibility; },
       [](const SweepCell& c) { return c.estimate.visibility_std; },
       [](const SweepCell& c) { return c.theory_visibility; }},
      {"avg_intensity.svg", "Average intensity", "average intensity",
       [](const SweepCell& c) { return c.estimate.avg_intensity; },
       [](const SweepCell& c) { return c.estimate.avg_intensity_std; },
       [](const SweepCell& c) { return c.theory_avg_intensity; }},
  };

  std::vector<double> alphas;
  for (const auto& c : result.cells)
    if (alphas.empty() || std::abs(alphas.back() - c.alpha) > 1e-12) alphas.push_back(c.alpha);

  const std::vector<std::string> palette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  for (const auto& f : fields) {
    svg::Plot plot;
    plot.title = f.title;
    plot.x_label = "QWP angle beta [rad]";
    plot.y_label = f.ylab;
    for (size_t ai = 0; ai < alphas.size(); ++ai) {
      svg::Series theory, points;
      theory.line = true;
      theory.color = palette[ai % palette.size()];
      points.color = theory.color;
      std::ostringstream lbl;
      lbl.precision(3);
      lbl << "alpha=" << alphas[ai];
      theory.label = lbl.str();
      for (const auto& c : result.cells) {
        if (std::abs(c.alpha - alphas[ai]) > 1e-12) continue;
        theory.x.push_back(c.beta);
        theory.y.push_back(f.theory(c));
        points.x.push_back(c.beta);
        points.y.push_back(f.value(c));
        points.yerr.push_back(f.err(c));
      }
      plot.series.push_back(std::move(theory));
      plot.series.push_back(std::move(points));
    }
    svg::write(dir / f.file, plot);
  }
}

std::string comparison_to_csv(const ComparisonTable& table) {
  std::ostringstream out;
  out.precision(17);
  out << "theta,phi,mu,method,shots,settings,fidelity_mean,fidelity_std,flags\n";
  for (const auto& r : table.rows) {
    out << r.state.theta << ',' << r.state.phi << ',' << r.state.mu << ',' << r.method << ','
        << r.shots << ',' << r.settings << ',' << r.fidelity_mean << ',' << r.fidelity_std << ',';
    if (r.method == "qst" && r.rescaled_runs > 0) out << "rescaled:" << r.rescaled_runs;
    if (r.method == "qsi" && r.clamped_runs > 0) out << "clamped:" << r.clamped_runs;
    out << '\n';
  }
  out << "\ndim,qsi_settings,qst_settings,qst_pure_settings\n";
  for (const auto& s : table.scaling)
    out << s.dim << ',' << s.qsi_settings << ',' << s.qst_settings << ',' << s.qst_pure_settings
        << '\n';
  return out.str();
}

}  // namespace qsi
