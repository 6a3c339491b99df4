#include "qsi/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "qsi/errors.hpp"

namespace qsi {

namespace {

constexpr double kPoleSin = 1e-3;
constexpr double kClampTol = 1e-9;     // relative excess that counts as a real clamp
constexpr double kDownstreamTol = 1e-6;

struct SubspaceData {
  std::vector<double> level;      // norm_sq + m_pi per subspace
  std::vector<double> ladder;     // |m_sigma| per subspace
  std::vector<double> phase;
  std::vector<double> sigma_level;
  std::vector<double> sigma_ladder;
  std::vector<double> sigma_phase;
};

SubspaceData extract_moments(const std::vector<FringeEstimate>& ests) {
  SubspaceData d;
  for (const auto& est : ests) {
    if (est.n_slices_used < 1)
      throw ReconstructionError("invert: estimate carries no usable slices");
    if (est.has_flag(EstimateFlag::Unnormalized))
      throw ReconstructionError("invert: estimate is unnormalized; calibrate first");
    const double level = est.avg_intensity;
    const double vis = est.visibility;
    d.level.push_back(4.0 * level);
    d.ladder.push_back(2.0 * vis * level);
    d.phase.push_back(est.phase_shift);
    d.sigma_level.push_back(4.0 * est.avg_intensity_std);
    d.sigma_ladder.push_back(2.0 * std::hypot(vis * est.avg_intensity_std,
                                              level * est.visibility_std));
    d.sigma_phase.push_back(est.phase_std);
  }
  return d;
}

/// Forward subspace moments (level, |ladder|) for angle vector thetas.
void forward_moments(const std::vector<double>& thetas, std::vector<double>& level,
                     std::vector<double>& ladder) {
  const int n = static_cast<int>(thetas.size());
  level.assign(n, 0.0);
  ladder.assign(n, 0.0);
  double xi = 1.0;
  for (int k = 0; k < n; ++k) {
    const double c = std::cos(0.5 * thetas[k]);
    const double s = std::sin(0.5 * thetas[k]);
    const double cn = (k == n - 1) ? 1.0 : std::cos(0.5 * thetas[k + 1]);
    level[k] = xi * (2.0 * c * c + s * s * cn * cn);
    ladder[k] = xi * s * c * cn;
    xi *= s * s;
  }
}

struct ChainOutcome {
  std::vector<double> thetas;
  double mismatch = std::numeric_limits<double>::infinity();
  bool level_clamped = false;
  bool contrast_clamped = false;
  bool feasible = false;
  int bad_subspace = 0;  // 1-based k when infeasible
};

double chain_mismatch(const std::vector<double>& thetas, const SubspaceData& data) {
  std::vector<double> level, ladder;
  forward_moments(thetas, level, ladder);
  double sum = 0.0;
  for (size_t k = 0; k < level.size(); ++k) {
    const double dl = level[k] - data.level[k];
    const double dm = ladder[k] - data.ladder[k];
    sum += dl * dl + dm * dm;
  }
  return sum;
}

double clamp01(double x, double tol_scale, bool* clamped) {
  if (x < 0.0) {
    if (x < -kClampTol * tol_scale) *clamped = true;
    return 0.0;
  }
  if (x > 1.0) {
    if (x > 1.0 + kClampTol * tol_scale) *clamped = true;
    return 1.0;
  }
  return x;
}

/// Sequential solve seeded by u1 = cos^2(theta_1 / 2).
ChainOutcome run_chain(double u1, const SubspaceData& data) {
  const int n = static_cast<int>(data.level.size());  // = d - 1
  ChainOutcome out;
  out.thetas.assign(n, 0.0);

  bool level_clamped = false, contrast_clamped = false;
  const double u = clamp01(u1, 1.0, &level_clamped);
  out.thetas[0] = 2.0 * std::acos(std::sqrt(u));

  auto downstream_live = [&](int from_k) {
    for (int j = from_k; j < n; ++j)
      if (data.level[j] > kDownstreamTol || data.ladder[j] > kDownstreamTol) return true;
    return false;
  };

  if (n >= 2) {
    const double s_sq = 1.0 - u;
    const double c = std::sqrt(u);
    const double s = std::sqrt(std::max(s_sq, 0.0));
    double cos_next_sq;
    if (s * c > 1e-12) {
      const double cn = data.ladder[0] / (s * c);
      cos_next_sq = cn * cn;
    } else if (s_sq > 1e-12) {
      cos_next_sq = (data.level[0] - 2.0 * u) / s_sq;
    } else {
      // theta_1 ~ 0: no weight below, nothing to determine
      if (downstream_live(1)) {
        out.bad_subspace = 1;
        out.mismatch = chain_mismatch(out.thetas, data);
        return out;
      }
      out.feasible = true;
      out.level_clamped = level_clamped;
      out.contrast_clamped = contrast_clamped;
      out.mismatch = chain_mismatch(out.thetas, data);
      return out;
    }
    cos_next_sq = clamp01(cos_next_sq, 1.0, &contrast_clamped);
    out.thetas[1] = 2.0 * std::acos(std::sqrt(cos_next_sq));
  }

  double xi = (1.0 - u);  // subspace weight entering k = 2
  for (int k = 2; k <= n - 1; ++k) {
    const double sin_prev = std::sin(out.thetas[k - 1]);
    if (sin_prev < kPoleSin || xi * sin_prev < 1e-12) {
      if (downstream_live(k)) {
        out.bad_subspace = k;
        out.mismatch = chain_mismatch(out.thetas, data);
        return out;
      }
      for (int j = k; j < n; ++j) out.thetas[j] = 0.0;
      out.feasible = true;
      out.level_clamped = level_clamped;
      out.contrast_clamped = contrast_clamped;
      out.mismatch = chain_mismatch(out.thetas, data);
      return out;
    }
    double cn = 2.0 * data.ladder[k - 1] / (xi * sin_prev);
    cn = clamp01(cn, 1.0, &contrast_clamped);
    out.thetas[k] = 2.0 * std::acos(cn);
    const double s_prev = std::sin(0.5 * out.thetas[k - 1]);
    xi *= s_prev * s_prev;
  }

  out.feasible = true;
  out.level_clamped = level_clamped;
  out.contrast_clamped = contrast_clamped;
  out.mismatch = chain_mismatch(out.thetas, data);
  return out;
}

/// Box-projected damped least squares with a forward-difference Jacobian;
/// small and only used for the joint angle refinement.
std::vector<double> refine_thetas(std::vector<double> thetas, const SubspaceData& data) {
  const int n = static_cast<int>(thetas.size());
  const int m = 2 * n;
  auto residuals = [&](const std::vector<double>& th) {
    std::vector<double> level, ladder, r(m);
    forward_moments(th, level, ladder);
    for (int k = 0; k < n; ++k) {
      r[2 * k] = level[k] - data.level[k];
      r[2 * k + 1] = ladder[k] - data.ladder[k];
    }
    return r;
  };

  Eigen::MatrixXd jac(m, n);
  double lambda = 1e-3;
  std::vector<double> r = residuals(thetas);
  double cost = 0.0;
  for (double v : r) cost += v * v;

  for (int iter = 0; iter < 100 && cost > 1e-24; ++iter) {
    const double h = 1e-7;
    for (int j = 0; j < n; ++j) {
      std::vector<double> th = thetas;
      th[j] = std::min(th[j] + h, kPi);
      const double dh = th[j] - thetas[j];
      if (dh == 0.0) {
        th[j] = thetas[j] - h;
        const std::vector<double> rm = residuals(th);
        for (int i = 0; i < m; ++i) jac(i, j) = (r[i] - rm[i]) / h;
      } else {
        const std::vector<double> rp = residuals(th);
        for (int i = 0; i < m; ++i) jac(i, j) = (rp[i] - r[i]) / dh;
      }
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd jtr = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) jtr(j) += jac(i, j) * r[i];

    bool accepted = false;
    for (int tries = 0; tries < 12 && !accepted; ++tries) {
      Eigen::MatrixXd damped = jtj;
      const double max_diag = std::max(jtj.diagonal().maxCoeff(), 1e-300);
      for (int j = 0; j < n; ++j)
        damped(j, j) += lambda * std::max(jtj(j, j), 1e-12 * max_diag);
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      std::vector<double> trial = thetas;
      for (int j = 0; j < n; ++j) trial[j] = std::clamp(trial[j] + step(j), 0.0, kPi);
      std::vector<double> rt = residuals(trial);
      double trial_cost = 0.0;
      for (double v : rt) trial_cost += v * v;
      if (trial_cost < cost) {
        const double dcost = cost - trial_cost;
        thetas = std::move(trial);
        r = std::move(rt);
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (dcost <= 1e-14 * std::max(cost, 1e-30)) return thetas;
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) break;
  }
  return thetas;
}

ReconstructionResult result_from_qubit(const QubitState& state) {
  ReconstructionResult res;
  res.kind = ReconstructionResult::Kind::Qubit;
  res.qubit = state;
  res.rho = density_matrix(state).entries();
  return res;
}

}  // namespace

std::vector<std::string> reconstruction_flag_names(unsigned flags) {
  std::vector<std::string> names;
  if (flags & static_cast<unsigned>(ReconstructionFlag::MuClamped)) names.push_back("mu-clamped");
  if (flags & static_cast<unsigned>(ReconstructionFlag::PhaseIndeterminate))
    names.push_back("phase-indeterminate");
  if (flags & static_cast<unsigned>(ReconstructionFlag::AvgIntensityClamped))
    names.push_back("avg-intensity-clamped");
  return names;
}

ReconstructionResult invert_qubit(const FringeEstimate& est) {
  if (est.n_slices_used < 1)
    throw ReconstructionError("invert_qubit: estimate carries no usable slices");
  if (est.has_flag(EstimateFlag::Unnormalized))
    throw ReconstructionError("invert_qubit: estimate is unnormalized; calibrate first");

  unsigned flags = 0;
  double level = est.avg_intensity;
  if (level < 0.25 || level > 0.5) {
    if (level < 0.25 - kClampTol || level > 0.5 + kClampTol)
      flags |= static_cast<unsigned>(ReconstructionFlag::AvgIntensityClamped);
    level = std::clamp(level, 0.25, 0.5);
  }
  const double cos_theta = 8.0 * level - 3.0;
  const double theta = std::acos(std::clamp(cos_theta, -1.0, 1.0));
  const double sin_theta = std::sin(theta);

  double phi = 0.0, mu = 1.0;
  double sigma_theta = 0.0, sigma_phi = 0.0, sigma_mu = 0.0;
  if (sin_theta < kPoleSin) {
    flags |= static_cast<unsigned>(ReconstructionFlag::PhaseIndeterminate);
  } else {
    phi = wrap_angle(est.phase_shift);
    sigma_phi = est.phase_std;
    const double mu_raw = est.visibility * (3.0 + cos_theta) / (2.0 * sin_theta);
    if (mu_raw > 1.0) {
      mu = 1.0;
      flags |= static_cast<unsigned>(ReconstructionFlag::MuClamped);
    } else {
      mu = mu_raw;
    }
    sigma_theta = 8.0 * est.avg_intensity_std / sin_theta;
    const double dmu_dv = (3.0 + cos_theta) / (2.0 * sin_theta);
    const double dmu_dtheta = -est.visibility * (1.0 + 3.0 * cos_theta) / (2.0 * sin_theta * sin_theta);
    sigma_mu = std::hypot(dmu_dv * est.visibility_std, dmu_dtheta * sigma_theta);
  }
  if (est.has_flag(EstimateFlag::PhaseIndeterminate))
    flags |= static_cast<unsigned>(ReconstructionFlag::PhaseIndeterminate);

  ReconstructionResult res = result_from_qubit(QubitState(theta, phi, mu));
  res.flags = flags;
  res.sigmas = {{"theta", sigma_theta}, {"phi", sigma_phi}, {"mu", sigma_mu}};
  return res;
}

ReconstructionResult reconstruct_pure_assumed(const FringeEstimate& est) {
  if (est.n_slices_used < 1)
    throw ReconstructionError("reconstruct_pure_assumed: estimate carries no usable slices");
  if (est.has_flag(EstimateFlag::Unnormalized))
    throw ReconstructionError("reconstruct_pure_assumed: estimate is unnormalized");

  unsigned flags = 0;
  double level = est.avg_intensity;
  if (level < 0.25 || level > 0.5) {
    if (level < 0.25 - kClampTol || level > 0.5 + kClampTol)
      flags |= static_cast<unsigned>(ReconstructionFlag::AvgIntensityClamped);
    level = std::clamp(level, 0.25, 0.5);
  }
  const double cos_theta = 8.0 * level - 3.0;
  const double theta = std::acos(std::clamp(cos_theta, -1.0, 1.0));
  const double sin_theta = std::sin(theta);

  double phi = 0.0, sigma_theta = 0.0, sigma_phi = 0.0;
  if (sin_theta < kPoleSin) {
    flags |= static_cast<unsigned>(ReconstructionFlag::PhaseIndeterminate);
  } else {
    phi = wrap_angle(est.phase_shift);
    sigma_phi = est.phase_std;
    sigma_theta = 8.0 * est.avg_intensity_std / sin_theta;
  }
  if (est.has_flag(EstimateFlag::PhaseIndeterminate))
    flags |= static_cast<unsigned>(ReconstructionFlag::PhaseIndeterminate);

  ReconstructionResult res = result_from_qubit(QubitState(theta, phi, 1.0));
  res.flags = flags;
  res.sigmas = {{"theta", sigma_theta}, {"phi", sigma_phi}, {"mu", 0.0}};
  return res;
}

namespace {

struct QuditSolve {
  std::vector<double> thetas;
  bool level_clamped = false;
  bool contrast_clamped = false;
};

QuditSolve solve_qudit_thetas(const SubspaceData& data) {
  const int n = static_cast<int>(data.level.size());
  QuditSolve sol;

  if (n == 1) {
    bool clamped = false;
    const double u = clamp01(data.level[0] - 1.0, 1.0, &clamped);
    sol.thetas = {2.0 * std::acos(std::sqrt(u))};
    sol.level_clamped = clamped;
    return sol;
  }

  // the first interferogram couples (theta_1, theta_2): eliminating the
  // second angle leaves 2u^2 - P u + M^2 = 0 in u = cos^2(theta_1 / 2)
  const double p = data.level[0];
  const double msq = data.ladder[0] * data.ladder[0];
  const double disc = p * p - 8.0 * msq;
  std::vector<double> seeds;
  bool off_manifold = false;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    seeds.push_back(0.25 * (p - root));
    seeds.push_back(0.25 * (p + root));
  } else {
    seeds.push_back(0.25 * p);
    off_manifold = disc < -kClampTol;
  }

  std::optional<ChainOutcome> best;
  std::optional<ChainOutcome> best_infeasible;
  for (double u : seeds) {
    ChainOutcome out = run_chain(u, data);
    if (out.feasible) {
      if (!best || out.mismatch < best->mismatch) best = std::move(out);
    } else if (!best_infeasible || out.mismatch < best_infeasible->mismatch) {
      best_infeasible = std::move(out);
    }
  }
  // the chain is ill-conditioned when every root hits a vanishing
  // sin(theta_k) with live downstream amplitude, or when such a chain
  // explains the data far better than any regular one
  const bool pole_explains_better =
      best && best_infeasible && best_infeasible->mismatch < 0.25 * best->mismatch;
  if (!best || pole_explains_better) {
    throw ReconstructionError(
        "invert_qudit: ill-conditioned chain at subspace k=" +
        std::to_string(best_infeasible ? best_infeasible->bad_subspace : 1) +
        " (vanishing sin(theta_k) with nonzero downstream amplitude)");
  }
  sol.thetas = best->thetas;
  sol.level_clamped = best->level_clamped || off_manifold;
  sol.contrast_clamped = best->contrast_clamped;
  return sol;
}

}  // namespace

ReconstructionResult invert_qudit(const std::vector<FringeEstimate>& ests) {
  if (ests.empty()) throw ReconstructionError("invert_qudit: no estimates");
  const int d = static_cast<int>(ests.size()) + 1;

  const SubspaceData data = extract_moments(ests);
  QuditSolve sol = solve_qudit_thetas(data);

  const bool any_clamp = sol.level_clamped || sol.contrast_clamped;
  if (any_clamp) sol.thetas = refine_thetas(sol.thetas, data);

  std::vector<double> phis(d - 1, 0.0);
  unsigned flags = 0;
  for (int k = 0; k < d - 1; ++k) {
    phis[k] = wrap_angle(data.phase[k]);
    if (ests[k].has_flag(EstimateFlag::PhaseIndeterminate))
      flags |= static_cast<unsigned>(ReconstructionFlag::PhaseIndeterminate);
  }
  if (sol.level_clamped) flags |= static_cast<unsigned>(ReconstructionFlag::AvgIntensityClamped);
  if (sol.contrast_clamped) flags |= static_cast<unsigned>(ReconstructionFlag::MuClamped);

  ReconstructionResult res;
  res.kind = ReconstructionResult::Kind::Qudit;
  res.qudit = QuditPureState(d, sol.thetas, phis);
  const Eigen::VectorXcd amp = qudit_amplitudes(res.qudit);
  res.rho = amp * amp.adjoint();
  res.flags = flags;

  // delta-method angle uncertainties through the sequential solve
  bool have_noise = false;
  for (int k = 0; k < d - 1; ++k)
    if (data.sigma_level[k] > 0.0 || data.sigma_ladder[k] > 0.0) have_noise = true;
  std::vector<double> var_theta(d - 1, 0.0);
  if (have_noise) {
    auto solve_or_base = [&](const SubspaceData& pert) -> std::vector<double> {
      try {
        return solve_qudit_thetas(pert).thetas;
      } catch (const ReconstructionError&) {
        return sol.thetas;
      }
    };
    for (int k = 0; k < d - 1; ++k) {
      for (int which = 0; which < 2; ++which) {
        const double sigma = which == 0 ? data.sigma_level[k] : data.sigma_ladder[k];
        if (!(sigma > 0.0)) continue;
        const double h = std::max(1e-7, 0.05 * sigma);
        SubspaceData pert = data;
        (which == 0 ? pert.level[k] : pert.ladder[k]) += h;
        const std::vector<double> th = solve_or_base(pert);
        for (int j = 0; j < d - 1; ++j) {
          const double deriv = (th[j] - sol.thetas[j]) / h;
          var_theta[j] += deriv * deriv * sigma * sigma;
        }
      }
    }
  }
  for (int k = 0; k < d - 1; ++k) {
    res.sigmas["theta" + std::to_string(k + 1)] = std::sqrt(var_theta[k]);
    res.sigmas["phi" + std::to_string(k + 1)] = data.sigma_phase[k];
  }
  return res;
}

double entanglement_from_marginal(const FringeEstimate& est) {
  return entanglement_entropy(invert_qubit(est).qubit);
}

}  // namespace qsi
