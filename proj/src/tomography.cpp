#include "qsi/tomography.hpp"

#include <cmath>
#include <stdexcept>

#include "qsi/errors.hpp"
#include "qsi/fringe.hpp"
#include "qsi/random.hpp"
#include "qsi/reconstruct.hpp"

namespace qsi {

ShotBudget::ShotBudget(long total, int settings_) : total_shots(total), settings(settings_) {
  if (settings < 1) throw std::invalid_argument("ShotBudget: settings < 1");
  if (total_shots < settings)
    throw std::invalid_argument("ShotBudget: fewer shots than settings");
}

QstResult qst_linear_inversion(double rx, double ry, double rz) {
  const double len = std::sqrt(rx * rx + ry * ry + rz * rz);
  bool rescaled = false;
  if (len > 1.0) {
    rx /= len;
    ry /= len;
    rz /= len;
    rescaled = true;
  }
  Eigen::Matrix2cd m;
  m(0, 0) = Complex(0.5 * (1.0 + rz), 0.0);
  m(1, 1) = Complex(0.5 * (1.0 - rz), 0.0);
  m(0, 1) = Complex(0.5 * rx, -0.5 * ry);
  m(1, 0) = Complex(0.5 * rx, 0.5 * ry);
  return QstResult{DensityMatrix(m), {rx, ry, rz}, rescaled};
}

QstResult simulate_qst(const QubitState& state, const ShotBudget& budget, std::uint64_t seed) {
  const long per_setting = budget.total_shots / 3;
  if (per_setting < 1)
    throw std::invalid_argument("simulate_qst: zero shots for at least one setting");

  const double s = std::sin(state.theta);
  const double truth[3] = {state.mu * s * std::cos(state.phi),
                           state.mu * s * std::sin(state.phi), std::cos(state.theta)};
  Rng rng(seed);
  double est[3];
  for (int axis = 0; axis < 3; ++axis) {
    const double p_up = 0.5 * (1.0 + truth[axis]);
    long ups = 0;
    for (long i = 0; i < per_setting; ++i)
      if (rng.uniform() < p_up) ++ups;
    est[axis] = 2.0 * static_cast<double>(ups) / static_cast<double>(per_setting) - 1.0;
  }
  return qst_linear_inversion(est[0], est[1], est[2]);
}

SettingsRow settings_row(int dim) {
  if (dim < 2) throw std::invalid_argument("settings_row: dim < 2");
  return SettingsRow{dim, dim - 1, dim * dim - 1, 5 * dim - 7};
}

namespace {

double signal_photons_per_unit_peak(const QubitState& state, const InterferometerConfig& cfg) {
  InterferometerConfig unit = cfg;
  unit.peak_counts = 1.0;
  const FringeObservables obs = fringe_observables(state);
  double sum = 0.0;
  for (int x = 0; x < unit.image_width; ++x)
    sum += expected_counts(unit, obs, x) - unit.background;
  return sum * cfg.n_slices * cfg.n_images;
}

}  // namespace

ComparisonTable compare(const std::vector<QubitState>& states, const ShotBudget& budget,
                        const InterferometerConfig& cfg, int repetitions, std::uint64_t seed,
                        int max_dim) {
  if (states.empty()) throw std::invalid_argument("compare: no states");
  if (repetitions < 1) throw std::invalid_argument("compare: repetitions < 1");
  if (budget.total_shots < 3) throw std::invalid_argument("compare: budget below 3 shots");

  ComparisonTable table;
  for (int d = 2; d <= max_dim; ++d) table.scaling.push_back(settings_row(d));

  std::uint64_t cell = 0;
  for (const auto& state : states) {
    const DensityMatrix truth = density_matrix(state);

    const double base = signal_photons_per_unit_peak(state, cfg);
    InterferometerConfig run_cfg = cfg;
    run_cfg.peak_counts = static_cast<double>(budget.total_shots) / base;

    ComparisonRow qsi_row;
    qsi_row.state = state;
    qsi_row.method = "qsi";
    qsi_row.shots = budget.total_shots;
    qsi_row.settings = 1;

    ComparisonRow qst_row;
    qst_row.state = state;
    qst_row.method = "qst";
    qst_row.shots = budget.total_shots;
    qst_row.settings = 3;

    std::vector<double> f_qsi, f_qst;
    for (int rep = 0; rep < repetitions; ++rep) {
      run_cfg.rng_seed = Rng::derive_seed(seed, cell);
      ++cell;
      try {
        const auto images = synthesize_set(state, run_cfg);
        const FringeEstimate est = aggregate(fit_images(images), run_cfg.peak_counts);
        const ReconstructionResult rec = invert_qubit(est);
        if (rec.flags != 0) ++qsi_row.clamped_runs;
        f_qsi.push_back(fidelity(rec.density(), truth));
      } catch (const FitError&) {
        // slice fits collapsed at this budget; skip the repetition
      } catch (const ReconstructionError&) {
      }
      const QstResult qst = simulate_qst(state, budget, Rng::derive_seed(seed ^ 0x51edULL, cell));
      if (qst.rescaled) ++qst_row.rescaled_runs;
      f_qst.push_back(fidelity(qst.rho, truth));
    }
    if (f_qsi.empty())
      throw ReconstructionError("compare: every interferometric repetition failed; "
                                "budget too small for the acquisition geometry");

    auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
      mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double acc = 0.0;
      for (double x : v) acc += (x - mean) * (x - mean);
      sd = v.size() > 1 ? std::sqrt(acc / static_cast<double>(v.size() - 1)) : 0.0;
    };
    mean_std(f_qsi, qsi_row.fidelity_mean, qsi_row.fidelity_std);
    mean_std(f_qst, qst_row.fidelity_mean, qst_row.fidelity_std);

    table.rows.push_back(qsi_row);
    table.rows.push_back(qst_row);
  }
  return table;
}

}  // namespace qsi
