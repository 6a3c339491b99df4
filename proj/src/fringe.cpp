#include "qsi/fringe.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "qsi/errors.hpp"

namespace qsi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxIterations = 200;
constexpr double kCostTol = 1e-10;
constexpr double kStepTol = 1e-10;

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

double quantile(std::vector<double> v, double q) {
  const size_t idx = static_cast<size_t>(q * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + idx, v.end());
  return v[idx];
}

struct Bounds {
  double lo[7];
  double hi[7];
};

Bounds make_bounds(int width) {
  Bounds b;
  const double w = static_cast<double>(width);
  b.lo[0] = -kInf;  b.hi[0] = kInf;   // background
  b.lo[1] = 0.0;    b.hi[1] = kInf;   // amplitude
  b.lo[2] = 1e-12;  b.hi[2] = 10.0;   // curvature
  b.lo[3] = -w;     b.hi[3] = 2.0 * w;  // center
  b.lo[4] = 0.0;    b.hi[4] = 1.05;   // contrast soft cap
  b.lo[5] = 1e-6;   b.hi[5] = kPi;    // wavenumber
  b.lo[6] = -kInf;  b.hi[6] = kInf;   // phase
  return b;
}

using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;

void project(Vec7& p, const Bounds& b) {
  for (int i = 0; i < 7; ++i) p(i) = std::clamp(p(i), b.lo[i], b.hi[i]);
}

/// Model and Jacobian accumulation for one parameter vector. The phase is
/// parameterized at the slice midpoint for conditioning; exp and trig run
/// on recurrences refreshed every 32 pixels. The squared residuals carry
/// inverse shot-variance weights so the covariance stays calibrated under
/// counting noise.
class SliceModel {
 public:
  SliceModel(std::span<const double> data, double x_center)
      : data_(data), xc_(x_center), weights_(data.size()) {
    for (size_t i = 0; i < data.size(); ++i) weights_[i] = 1.0 / std::max(data[i], 1.0);
  }

  double cost(const Vec7& p) const { return accumulate<false>(p, nullptr, nullptr, nullptr); }

  double cost_and_normal(const Vec7& p, Mat7& jtj, Vec7& jtr) const {
    jtj.setZero();
    jtr.setZero();
    return accumulate<true>(p, &jtj, &jtr, nullptr);
  }

  double plain_residual_sq(const Vec7& p) const {
    double plain = 0.0;
    accumulate<false>(p, nullptr, nullptr, &plain);
    return plain;
  }

 private:
  template <bool WithJacobian>
  double accumulate(const Vec7& p, Mat7* jtj, Vec7* jtr, double* plain_sq) const {
    const double B = p(0), A = p(1), c = p(2), m = p(3), v = p(4), k = p(5), ph = p(6);
    const double ck = std::cos(k), sk = std::sin(k);
    const double rho = std::exp(-2.0 * c);
    double cost = 0.0;
    double g = 0.0, gr = 0.0, co = 0.0, si = 0.0;
    const int n = static_cast<int>(data_.size());
    for (int x = 0; x < n; ++x) {
      const double dx = static_cast<double>(x) - m;
      if (x % 32 == 0 || !(g >= 0.0) || !std::isfinite(gr)) {
        g = std::exp(-c * dx * dx);
        gr = std::exp(-c * (2.0 * dx + 1.0));
        const double psi = k * (static_cast<double>(x) - xc_) + ph;
        co = std::cos(psi);
        si = std::sin(psi);
      }
      const double env = A * g;
      const double base = 1.0 + v * co;
      const double r = B + env * base - data_[x];
      const double w = weights_[x];
      cost += w * r * r;
      if (plain_sq) *plain_sq += r * r;
      if constexpr (WithJacobian) {
        double j[7];
        j[0] = 1.0;
        j[1] = g * base;
        j[2] = -dx * dx * env * base;
        j[3] = 2.0 * c * dx * env * base;
        j[4] = env * co;
        j[5] = -env * v * si * (static_cast<double>(x) - xc_);
        j[6] = -env * v * si;
        const double wr = w * r;
        for (int a = 0; a < 7; ++a) {
          (*jtr)(a) += j[a] * wr;
          const double wj = w * j[a];
          for (int b = a; b < 7; ++b) (*jtj)(a, b) += wj * j[b];
        }
      }
      // advance recurrences to pixel x + 1
      g *= gr;
      gr *= rho;
      const double co_next = co * ck - si * sk;
      si = si * ck + co * sk;
      co = co_next;
    }
    if constexpr (WithJacobian) {
      for (int a = 0; a < 7; ++a)
        for (int b = 0; b < a; ++b) (*jtj)(a, b) = (*jtj)(b, a);
    }
    return cost;
  }

  std::span<const double> data_;
  double xc_;
  std::vector<double> weights_;
};

}  // namespace

std::array<double, 7> FringeParams::as_array() const {
  return {background, amplitude, curvature, center, contrast, wavenumber, phase};
}

FringeParams FringeParams::from_array(const std::array<double, 7>& p) {
  FringeParams f;
  f.background = p[0];
  f.amplitude = p[1];
  f.curvature = p[2];
  f.center = p[3];
  f.contrast = p[4];
  f.wavenumber = p[5];
  f.phase = p[6];
  return f;
}

const char* FringeParams::name(int index) {
  static const char* names[7] = {"background", "amplitude", "curvature", "center",
                                 "contrast",   "wavenumber", "phase"};
  return names[index];
}

double FringeParams::model(double x) const {
  const double dx = x - center;
  return background + amplitude * std::exp(-curvature * dx * dx) *
                          (1.0 + contrast * std::cos(wavenumber * x + phase));
}

namespace {

std::vector<double> moving_average(std::span<const double> data, int win) {
  const int w = static_cast<int>(data.size());
  win = std::clamp(win | 1, 3, std::max(3, w / 2) | 1);
  std::vector<double> out(static_cast<size_t>(w));
  double acc = 0.0;
  for (int x = 0; x < w; ++x) {
    acc += data[x];
    if (x - win >= 0) acc -= data[x - win];
    const int center = x - win / 2;
    if (center >= 0) out[center] = acc / std::min(win, x + 1);
  }
  for (int x = w - win / 2; x < w; ++x) out[x] = out[std::max(0, w - win / 2 - 1)];
  return out;
}

}  // namespace

namespace {

/// Envelope estimate plus envelope-normalized spectrum of one slice;
/// everything the spectral starting points are built from.
struct SliceAnalysis {
  FringeParams base;  // background / amplitude / curvature / center filled in
  std::vector<double> ratio;
  std::vector<char> mask;
  int n_mask = 0;
  std::vector<std::complex<double>> spec;
  size_t padded = 0;
  size_t j_min = 0;
  double k_lo = 0.0;
  // local maxima ranked by prominence over the local spectral floor
  struct Peak {
    size_t bin;
    double mag;
    double prominence;
  };
  std::vector<Peak> peaks;
  bool dominant = false;  // top peak towers over everything else
};

SliceAnalysis analyze_slice(std::span<const double> slice) {
  const int w = static_cast<int>(slice.size());
  if (w < 16) throw std::invalid_argument("initial_guess: slice shorter than 16 pixels");
  const auto [mn_it, mx_it] = std::minmax_element(slice.begin(), slice.end());
  if (*mx_it == *mn_it) throw FitError("initial_guess: degenerate slice, all values equal");

  SliceAnalysis out;
  out.base.background = quantile(std::vector<double>(slice.begin(), slice.end()), 0.02);

  std::vector<double> absd(static_cast<size_t>(w));
  for (int x = 0; x < w; ++x) absd[x] = std::abs(slice[x] - out.base.background);
  const std::vector<double> env = moving_average(absd, w / 8);
  const double env_max = *std::max_element(env.begin(), env.end());

  double total = 0.0, first = 0.0;
  for (int x = 0; x < w; ++x) {
    total += env[x];
    first += env[x] * x;
  }
  if (total > 0.0 && env_max > 0.0) {
    const double centroid = first / total;
    double second = 0.0;
    for (int x = 0; x < w; ++x) second += env[x] * (x - centroid) * (x - centroid);
    out.base.center = centroid;
    out.base.curvature = 1.0 / (2.0 * std::max(second / total, 1.0));
    out.base.amplitude = env_max;
  } else {
    out.base.center = 0.5 * w;
    out.base.curvature = 1.0 / (2.0 * (w / 8.0) * (w / 8.0));
    out.base.amplitude = *mx_it - out.base.background;
  }

  // normalize the envelope away so weak fringes stand out in the spectrum;
  // pixels with negligible envelope are masked off
  out.ratio.assign(static_cast<size_t>(w), 0.0);
  out.mask.assign(static_cast<size_t>(w), 0);
  const double floor_level = 0.05 * env_max;
  for (int x = 0; x < w; ++x) {
    if (env[x] >= floor_level) {
      out.ratio[x] = (slice[x] - out.base.background) / env[x] - 1.0;
      out.mask[x] = 1;
      ++out.n_mask;
    }
  }
  if (out.n_mask < 8) {
    for (int x = 0; x < w; ++x) {
      out.ratio[x] = slice[x] - out.base.background;
      out.mask[x] = 1;
    }
    out.n_mask = w;
  }

  out.padded = next_pow2(static_cast<size_t>(w));
  out.spec.assign(out.padded, 0.0);
  for (int x = 0; x < w; ++x) out.spec[x] = out.ratio[x];
  fft_inplace(out.spec);

  // local maxima above the unresolvable-fringe band (period > w/4), ranked
  // by prominence so a weak fringe is not buried under envelope residue
  out.j_min = std::max<size_t>(2, (4 * out.padded) / static_cast<size_t>(w));
  out.k_lo = 2.0 * kPi * static_cast<double>(out.j_min) / static_cast<double>(out.padded);
  const size_t half = out.padded / 2;
  std::vector<double> mags(half, 0.0);
  for (size_t j = 0; j < half; ++j) mags[j] = std::abs(out.spec[j]);
  double global_second = 0.0;
  for (size_t j = out.j_min; j < half; ++j) {
    const double mg = mags[j];
    if (mg <= 0.0 || mg < mags[j - 1] || (j + 1 < half && mg < mags[j + 1])) continue;
    const size_t lo = j > 8 ? j - 8 : 1;
    const size_t hi = std::min(half - 1, j + 8);
    std::vector<double> window(mags.begin() + lo, mags.begin() + hi + 1);
    std::nth_element(window.begin(), window.begin() + window.size() / 2, window.end());
    const double floor = window[window.size() / 2];
    out.peaks.push_back({j, mg, mg / (floor + 1e-12 * env_max + 1e-300)});
  }
  std::sort(out.peaks.begin(), out.peaks.end(),
            [](const SliceAnalysis::Peak& a, const SliceAnalysis::Peak& b) {
              return a.prominence > b.prominence;
            });
  if (out.peaks.empty()) out.peaks.push_back({out.j_min, 0.0, 0.0});
  for (const auto& p : out.peaks)
    if (p.bin != out.peaks.front().bin) global_second = std::max(global_second, p.mag);
  out.dominant = out.peaks.front().mag >= 3.0 * global_second &&
                 out.peaks.front().prominence > 10.0;
  return out;
}

FringeParams guess_at_wavenumber(const SliceAnalysis& an, double k_hat) {
  const int w = static_cast<int>(an.ratio.size());
  std::complex<double> z(0.0, 0.0);
  for (int x = 0; x < w; ++x)
    if (an.mask[x]) z += an.ratio[x] * std::exp(std::complex<double>(0.0, -k_hat * x));
  FringeParams guess = an.base;
  guess.wavenumber = k_hat;
  guess.phase = std::abs(z) > 0.0 ? std::arg(z) : 0.0;
  guess.contrast = std::clamp(2.0 * std::abs(z) / static_cast<double>(an.n_mask), 0.05, 1.0);
  return guess;
}

FringeParams guess_at_peak(const SliceAnalysis& an, const SliceAnalysis::Peak& pk) {
  double delta = 0.0;
  const size_t half = an.padded / 2;
  if (pk.bin + 1 < half && pk.bin > an.j_min && pk.mag > 0.0) {
    const double lm = std::log(std::max(std::abs(an.spec[pk.bin - 1]), 1e-300));
    const double l0 = std::log(pk.mag);
    const double lp = std::log(std::max(std::abs(an.spec[pk.bin + 1]), 1e-300));
    const double denom = lm - 2.0 * l0 + lp;
    if (denom < -1e-12) delta = std::clamp(0.5 * (lm - lp) / denom, -0.5, 0.5);
  }
  const double k_hat = std::clamp(
      2.0 * kPi * (static_cast<double>(pk.bin) + delta) / static_cast<double>(an.padded),
      an.k_lo, 0.999 * kPi);
  return guess_at_wavenumber(an, k_hat);
}

}  // namespace

std::vector<FringeParams> initial_guess_candidates(std::span<const double> slice,
                                                   int max_candidates) {
  if (max_candidates < 1) throw std::invalid_argument("initial_guess: max_candidates < 1");
  const SliceAnalysis an = analyze_slice(slice);
  std::vector<FringeParams> guesses;
  const int count = std::min<int>(max_candidates, static_cast<int>(an.peaks.size()));
  guesses.reserve(count);
  for (int i = 0; i < count; ++i) guesses.push_back(guess_at_peak(an, an.peaks[i]));
  return guesses;
}

FringeParams initial_guess(std::span<const double> slice) {
  return initial_guess_candidates(slice, 1).front();
}

SliceFit fit_slice(std::span<const double> slice, const FringeParams& guess) {
  const int w = static_cast<int>(slice.size());
  if (w < 16) throw std::invalid_argument("fit_slice: slice shorter than 16 pixels");
  for (double g : guess.as_array())
    if (!std::isfinite(g)) throw std::invalid_argument("fit_slice: non-finite guess");

  const double xc = 0.5 * (w - 1);
  const Bounds bounds = make_bounds(w);
  SliceModel model(slice, xc);

  Vec7 p;
  {
    const auto a = guess.as_array();
    for (int i = 0; i < 7; ++i) p(i) = a[i];
    p(6) = a[6] + a[5] * xc;  // midpoint-referenced phase
  }
  project(p, bounds);

  Mat7 jtj;
  Vec7 jtr;
  double cost = model.cost_and_normal(p, jtj, jtr);
  double lambda = 1e-3;

  // parameters pinned at a bound with the descent direction pointing
  // outside are frozen for the iteration, so clamping cannot corrupt the
  // remaining step
  auto frozen_mask = [&bounds](const Vec7& param, const Vec7& grad_rhs) {
    std::array<bool, 7> mask{};
    for (int i = 0; i < 7; ++i)
      mask[i] = (param(i) <= bounds.lo[i] && grad_rhs(i) < 0.0) ||
                (param(i) >= bounds.hi[i] && grad_rhs(i) > 0.0);
    return mask;
  };

  SliceFit out;
  out.converged = false;
  int iter = 0;
  for (; iter < kMaxIterations; ++iter) {
    const auto frozen = frozen_mask(p, -jtr);
    const double max_diag = std::max(jtj.diagonal().maxCoeff(), 1e-300);
    Mat7 damped = jtj;
    Vec7 rhs = -jtr;
    for (int i = 0; i < 7; ++i)
      damped(i, i) += lambda * std::max(jtj(i, i), 1e-12 * max_diag);
    for (int i = 0; i < 7; ++i) {
      if (!frozen[i]) continue;
      damped.row(i).setZero();
      damped.col(i).setZero();
      damped(i, i) = 1.0;
      rhs(i) = 0.0;
    }
    const Vec7 step = damped.ldlt().solve(rhs);
    if (!step.allFinite()) {
      lambda *= 10.0;
      if (lambda > 1e14) break;
      continue;
    }
    Vec7 trial = p + step;
    project(trial, bounds);
    const double trial_cost = model.cost(trial);
    if (trial_cost <= cost) {
      const double dcost = cost - trial_cost;
      const double step_norm = (trial - p).norm();
      p = trial;
      cost = trial_cost;
      lambda = std::max(lambda / 3.0, 1e-12);
      const bool cost_done = dcost <= kCostTol * std::max(cost, 1e-30);
      const bool step_done = step_norm <= kStepTol * (p.norm() + 1.0);
      cost = model.cost_and_normal(p, jtj, jtr);
      if (cost_done || step_done) {
        out.converged = true;
        ++iter;
        break;
      }
    } else {
      lambda *= 4.0;
      if (lambda > 1e14) {
        // stuck: accept as converged only with a vanishing free gradient
        double free_grad = 0.0;
        for (int i = 0; i < 7; ++i)
          if (!frozen[i]) free_grad = std::max(free_grad, std::abs(jtr(i)));
        out.converged = free_grad <= 1e-8 * (1.0 + cost);
        break;
      }
    }
  }
  out.iterations = iter;

  // back to raw-pixel phase reference
  FringeParams fitted;
  {
    std::array<double, 7> a;
    for (int i = 0; i < 7; ++i) a[i] = p(i);
    a[6] = wrap_angle(a[6] - a[5] * xc);
    fitted = FringeParams::from_array(a);
  }
  out.params = fitted;
  out.residual_norm = std::sqrt(model.plain_residual_sq(p));

  // covariance from the final normal matrix, residual-variance scaled;
  // rank-deficient directions get infinite variance on their dominant
  // parameter instead of poisoning the whole matrix
  Eigen::SelfAdjointEigenSolver<Mat7> es(jtj);
  const Eigen::Matrix<double, 7, 1> ev = es.eigenvalues();
  const double ev_max = std::max(ev.maxCoeff(), 0.0);
  const double tol = std::max(ev_max * 1e-13, 1e-280);
  const double s2 = cost / std::max(w - 7, 1);
  Mat7 cov = Mat7::Zero();
  std::vector<int> degenerate_params;
  for (int i = 0; i < 7; ++i) {
    if (ev(i) > tol) {
      cov += (s2 / ev(i)) * es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
    } else {
      int dominant = 0;
      es.eigenvectors().col(i).cwiseAbs().maxCoeff(&dominant);
      degenerate_params.push_back(dominant);
    }
  }
  // translate covariance to the raw phase parameterization
  Mat7 t = Mat7::Identity();
  t(6, 5) = -xc;
  cov = t * cov * t.transpose();
  for (int dp : degenerate_params) {
    cov(dp, dp) = kInf;
    if (!out.degenerate.empty()) out.degenerate += ", ";
    out.degenerate += FringeParams::name(dp);
  }
  out.covariance = cov;
  return out;
}

SliceFit fit_slice_auto(std::span<const double> slice, int max_candidates) {
  if (max_candidates < 1) throw std::invalid_argument("fit_slice_auto: max_candidates < 1");
  const SliceAnalysis an = analyze_slice(slice);
  double slice_norm = 0.0;
  for (double v : slice) slice_norm += v * v;
  slice_norm = std::sqrt(slice_norm);

  SliceFit best;
  bool have = false;
  auto consider = [&](const FringeParams& guess) {
    SliceFit fit = fit_slice(slice, guess);
    const bool better = !have || (fit.converged && !best.converged) ||
                        (fit.converged == best.converged &&
                         fit.residual_norm < best.residual_norm);
    if (better) {
      best = std::move(fit);
      have = true;
    }
    return best.converged && best.residual_norm <= 1e-10 * slice_norm;
  };

  bool perfect = consider(guess_at_peak(an, an.peaks.front()));
  if (!perfect && !(an.dominant && best.converged)) {
    const int count = std::min<int>(max_candidates, static_cast<int>(an.peaks.size()));
    for (int i = 1; i < count && !perfect; ++i)
      perfect = consider(guess_at_peak(an, an.peaks[i]));
    if (!perfect && !best.converged) {
      // coarse wavenumber sweep as a last resort
      const double k_hi = 0.9 * kPi;
      const int grid = 24;
      for (int i = 0; i < grid && !perfect; ++i) {
        const double k =
            an.k_lo * std::pow(k_hi / an.k_lo, i / static_cast<double>(grid - 1));
        perfect = consider(guess_at_wavenumber(an, k));
      }
    }
  }

  // a fringe far weaker than the envelope residue can hide from the
  // spectral search; look for an undigested sinusoid in the fit residual
  // and refit from it
  const int w = static_cast<int>(slice.size());
  for (int pass = 0; pass < 2 && !perfect && have && best.converged; ++pass) {
    std::vector<double> resid(static_cast<size_t>(w));
    double mean = 0.0;
    for (int x = 0; x < w; ++x) {
      resid[x] = slice[x] - best.params.model(x);
      mean += resid[x];
    }
    mean /= w;
    std::vector<std::complex<double>> spec(an.padded, 0.0);
    for (int x = 0; x < w; ++x) spec[x] = resid[x] - mean;
    fft_inplace(spec);

    const size_t half = an.padded / 2;
    size_t peak_bin = an.j_min;
    double peak_mag = 0.0;
    std::vector<double> mags;
    mags.reserve(half - an.j_min);
    for (size_t j = an.j_min; j < half; ++j) {
      const double mg = std::abs(spec[j]);
      mags.push_back(mg);
      if (mg > peak_mag) {
        peak_mag = mg;
        peak_bin = j;
      }
    }
    std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
    const double floor = mags[mags.size() / 2];
    if (peak_mag < 4.0 * floor + 1e-300) break;

    double delta = 0.0;
    if (peak_bin > an.j_min && peak_bin + 1 < half) {
      const double lm = std::log(std::max(std::abs(spec[peak_bin - 1]), 1e-300));
      const double l0 = std::log(peak_mag);
      const double lp = std::log(std::max(std::abs(spec[peak_bin + 1]), 1e-300));
      const double denom = lm - 2.0 * l0 + lp;
      if (denom < -1e-12) delta = std::clamp(0.5 * (lm - lp) / denom, -0.5, 0.5);
    }
    const double k_hat = std::clamp(
        2.0 * kPi * (static_cast<double>(peak_bin) + delta) / static_cast<double>(an.padded),
        an.k_lo, 0.999 * kPi);

    std::complex<double> z(0.0, 0.0);
    double env_sum = 0.0;
    const FringeParams& bp = best.params;
    for (int x = 0; x < w; ++x) {
      z += (resid[x] - mean) * std::exp(std::complex<double>(0.0, -k_hat * x));
      const double dx = x - bp.center;
      env_sum += bp.amplitude * std::exp(-bp.curvature * dx * dx);
    }
    if (!(env_sum > 0.0)) break;

    FringeParams guess = bp;
    guess.wavenumber = k_hat;
    guess.phase = std::abs(z) > 0.0 ? std::arg(z) : 0.0;
    guess.contrast = std::clamp(2.0 * std::abs(z) / env_sum, 1e-4, 1.0);
    const double before = best.residual_norm;
    perfect = consider(guess);
    if (best.residual_norm >= before) break;
  }
  return best;
}

std::vector<SliceFit> fit_image(const Interferogram& image) {
  std::vector<SliceFit> fits;
  fits.reserve(image.n_slices);
  for (int s = 0; s < image.n_slices; ++s) {
    std::span<const double> row(image.slice(s), static_cast<size_t>(image.width));
    try {
      fits.push_back(fit_slice_auto(row));
    } catch (const FitError&) {
      SliceFit failed;
      failed.converged = false;
      failed.degenerate = "initial guess";
      fits.push_back(std::move(failed));
    }
  }
  return fits;
}

std::vector<SliceFit> fit_images(const std::vector<Interferogram>& images) {
  std::vector<SliceFit> all;
  for (const auto& img : images) {
    auto fits = fit_image(img);
    all.insert(all.end(), std::make_move_iterator(fits.begin()),
               std::make_move_iterator(fits.end()));
  }
  return all;
}

std::vector<std::string> flag_names(unsigned flags) {
  std::vector<std::string> names;
  if (flags & static_cast<unsigned>(EstimateFlag::PhaseIndeterminate))
    names.push_back("phase-indeterminate");
  if (flags & static_cast<unsigned>(EstimateFlag::LowVisibility))
    names.push_back("low-visibility");
  if (flags & static_cast<unsigned>(EstimateFlag::FitFailures))
    names.push_back("fit-failures");
  if (flags & static_cast<unsigned>(EstimateFlag::Unnormalized))
    names.push_back("unnormalized");
  return names;
}

unsigned flags_from_names(const std::vector<std::string>& names) {
  unsigned flags = 0;
  for (const auto& n : names) {
    if (n == "phase-indeterminate") flags |= static_cast<unsigned>(EstimateFlag::PhaseIndeterminate);
    else if (n == "low-visibility") flags |= static_cast<unsigned>(EstimateFlag::LowVisibility);
    else if (n == "fit-failures") flags |= static_cast<unsigned>(EstimateFlag::FitFailures);
    else if (n == "unnormalized") flags |= static_cast<unsigned>(EstimateFlag::Unnormalized);
    else throw std::invalid_argument("unknown estimate flag: " + n);
  }
  return flags;
}

double circular_mean(std::span<const double> angles) {
  std::complex<double> sum(0.0, 0.0);
  for (double a : angles) sum += std::exp(std::complex<double>(0.0, a));
  return wrap_angle(std::arg(sum));
}

double circular_resultant(std::span<const double> angles) {
  if (angles.empty()) return 0.0;
  std::complex<double> sum(0.0, 0.0);
  for (double a : angles) sum += std::exp(std::complex<double>(0.0, a));
  return std::abs(sum) / static_cast<double>(angles.size());
}

namespace {

FringeEstimate aggregate_impl(const std::vector<SliceFit>& fits,
                              std::optional<double> norm_reference) {
  if (fits.empty()) throw FitError("aggregate: no slice fits");
  if (norm_reference && !(*norm_reference > 0.0))
    throw std::invalid_argument("aggregate: norm reference must be positive");

  std::vector<const SliceFit*> used;
  used.reserve(fits.size());
  for (const auto& f : fits)
    if (f.usable()) used.push_back(&f);

  if (used.empty()) throw FitError("aggregate: all slice fits failed");
  if (2 * used.size() < fits.size())
    throw FitError("aggregate: more than half of the slice fits failed");

  FringeEstimate est;
  est.n_slices_used = static_cast<int>(used.size());
  if (used.size() < fits.size()) est.set_flag(EstimateFlag::FitFailures);

  const double n = static_cast<double>(used.size());

  std::vector<double> phases;
  phases.reserve(used.size());
  int phase_degenerate = 0;
  for (const auto* f : used) {
    phases.push_back(f->params.phase);
    if (!std::isfinite(f->covariance(6, 6))) ++phase_degenerate;
  }
  const double resultant = circular_resultant(phases);
  est.phase_shift = circular_mean(phases);
  const double circ_std =
      resultant >= 1.0 ? 0.0
                       : (resultant <= 1e-12 ? kInf : std::sqrt(-2.0 * std::log(resultant)));
  est.phase_std = std::isfinite(circ_std) ? circ_std / std::sqrt(n) : kInf;

  double v_sum = 0.0, v_sq = 0.0, a_sum = 0.0, a_sq = 0.0;
  for (const auto* f : used) {
    v_sum += f->params.contrast;
    v_sq += f->params.contrast * f->params.contrast;
    a_sum += f->params.amplitude;
    a_sq += f->params.amplitude * f->params.amplitude;
  }
  const double v_mean = v_sum / n;
  const double a_mean = a_sum / n;
  const double v_var = used.size() > 1 ? std::max(0.0, (v_sq - n * v_mean * v_mean) / (n - 1.0)) : 0.0;
  const double a_var = used.size() > 1 ? std::max(0.0, (a_sq - n * a_mean * a_mean) / (n - 1.0)) : 0.0;

  est.visibility = std::clamp(v_mean, 0.0, 1.0);
  est.visibility_std = std::sqrt(v_var / n);

  if (norm_reference) {
    est.avg_intensity = std::clamp(0.5 * a_mean / *norm_reference, 0.0, 1.0);
    est.avg_intensity_std = 0.5 * std::sqrt(a_var / n) / *norm_reference;
  } else {
    est.avg_intensity = a_mean;
    est.avg_intensity_std = std::sqrt(a_var / n);
    est.set_flag(EstimateFlag::Unnormalized);
  }

  if (est.visibility < 0.05) est.set_flag(EstimateFlag::LowVisibility);
  if (resultant < 0.5 || 2 * phase_degenerate > static_cast<int>(used.size()))
    est.set_flag(EstimateFlag::PhaseIndeterminate);
  return est;
}

}  // namespace

FringeEstimate aggregate(const std::vector<SliceFit>& fits, double norm_reference) {
  return aggregate_impl(fits, norm_reference);
}

FringeEstimate aggregate_unnormalized(const std::vector<SliceFit>& fits) {
  return aggregate_impl(fits, std::nullopt);
}

double calibrate_norm(const std::vector<Interferogram>& hwp_sweep) {
  if (hwp_sweep.empty()) throw std::invalid_argument("calibrate_norm: empty sweep");
  double best = 0.0;
  for (const auto& img : hwp_sweep) {
    const FringeEstimate est = aggregate_unnormalized(fit_image(img));
    best = std::max(best, est.avg_intensity);
  }
  if (!(best > 0.0)) throw FitError("calibrate_norm: no usable calibration level");
  return best;
}

Calibration calibrate(const std::vector<FringeEstimate>& hwp_only_runs) {
  if (hwp_only_runs.empty()) throw std::invalid_argument("calibrate: empty calibration set");
  Calibration cal;
  std::complex<double> axial(0.0, 0.0);
  for (const auto& est : hwp_only_runs) {
    cal.norm_reference = std::max(cal.norm_reference, est.avg_intensity);
    if (est.visibility >= 0.1 && !est.has_flag(EstimateFlag::PhaseIndeterminate))
      axial += est.visibility * static_cast<double>(est.n_slices_used) *
               std::exp(std::complex<double>(0.0, 2.0 * est.phase_shift));
  }
  if (!(cal.norm_reference > 0.0))
    throw FitError("calibrate: no usable calibration level");
  cal.phase_zero = std::abs(axial) > 0.0 ? 0.5 * std::arg(axial) : 0.0;
  return cal;
}

}  // namespace qsi
