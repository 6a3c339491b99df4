#include "qsi/states.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qsi {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kTraceTol = 1e-12;
constexpr double kEigenvalueFloor = -1e-10;

}  // namespace

double wrap_angle(double a) {
  if (!std::isfinite(a)) throw std::invalid_argument("wrap_angle: non-finite angle");
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

double wrap_orientation(double a) {
  if (!std::isfinite(a)) throw std::invalid_argument("wrap_orientation: non-finite angle");
  double w = std::fmod(a, kPi);
  if (w < 0.0) w += kPi;
  return w;
}

QubitState::QubitState(double theta_, double phi_, double mu_)
    : theta(theta_), phi(wrap_angle(phi_)), mu(mu_) {
  if (!(theta >= 0.0 && theta <= kPi))
    throw std::invalid_argument("QubitState: theta outside [0, pi]");
  if (!(mu >= 0.0 && mu <= 1.0))
    throw std::invalid_argument("QubitState: mu outside [0, 1]");
}

double QubitState::bloch_length() const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return std::sqrt(c * c + mu * mu * s * s);
}

DensityMatrix::DensityMatrix(Eigen::MatrixXcd entries) : entries_(std::move(entries)) {
  const auto n = entries_.rows();
  if (n < 1 || entries_.cols() != n)
    throw std::invalid_argument("DensityMatrix: not square");
  if ((entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
    throw std::invalid_argument("DensityMatrix: not Hermitian");
  if (std::abs(entries_.trace() - Complex(1.0, 0.0)) > std::max(kTraceTol, 1e-12 * n))
    throw std::invalid_argument("DensityMatrix: trace != 1");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(entries_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < kEigenvalueFloor)
    throw std::invalid_argument("DensityMatrix: negative eigenvalue");
}

double DensityMatrix::purity() const {
  return (entries_ * entries_).trace().real();
}

QuditPureState::QuditPureState(int dim_, std::vector<double> thetas_, std::vector<double> phis_)
    : dim(dim_), thetas(std::move(thetas_)), phis(std::move(phis_)) {
  if (dim < 2) throw std::invalid_argument("QuditPureState: dim < 2");
  if (thetas.size() != static_cast<size_t>(dim - 1) ||
      phis.size() != static_cast<size_t>(dim - 1))
    throw std::invalid_argument("QuditPureState: need d-1 thetas and phis");
  for (double t : thetas)
    if (!(t >= 0.0 && t <= kPi))
      throw std::invalid_argument("QuditPureState: theta outside [0, pi]");
  for (double& p : phis) p = wrap_angle(p);
}

Operator2 Operator2::sigma_minus() {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  m(0, 1) = 1.0;
  return Operator2(Role::SigmaMinus, m);
}

Operator2 Operator2::sigma_plus() {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  m(1, 0) = 1.0;
  return Operator2(Role::SigmaPlus, m);
}

Operator2 Operator2::pi0() {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  m(0, 0) = 1.0;
  return Operator2(Role::Pi0, m);
}

Operator2 Operator2::sigma_x() {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return Operator2(Role::SigmaX, m);
}

Operator2 Operator2::hwp(double alpha) {
  const double c = std::cos(2.0 * alpha);
  const double s = std::sin(2.0 * alpha);
  Eigen::Matrix2cd m;
  m << c, s, s, -c;
  return Operator2(Role::Hwp, m);
}

Operator2 Operator2::qwp(double beta) {
  // Retarder with quarter-wave delay on the slow axis: R(b) diag(1, -i) R(-b).
  const double c = std::cos(beta);
  const double s = std::sin(beta);
  const Complex j(0.0, 1.0);
  Eigen::Matrix2cd m;
  m << c * c - j * s * s, (1.0 + j) * s * c,
       (1.0 + j) * s * c, s * s - j * c * c;
  return Operator2(Role::Qwp, m);
}

Operator2 Operator2::custom(const Eigen::Matrix2cd& m) {
  return Operator2(Role::Custom, m);
}

DensityMatrix density_matrix(const QubitState& state) {
  const double half = 0.5 * state.theta;
  const double c2 = std::cos(half) * std::cos(half);
  const double s2 = std::sin(half) * std::sin(half);
  const Complex off = 0.5 * state.mu * std::sin(state.theta) *
                      std::exp(Complex(0.0, state.phi));
  Eigen::Matrix2cd m;
  m << Complex(c2, 0.0), std::conj(off), off, Complex(s2, 0.0);
  return DensityMatrix(m);
}

Complex expect(const Operator2& op, const DensityMatrix& rho) {
  if (rho.dim() != 2)
    throw std::invalid_argument("expect: operator is 2x2 but rho has dim " +
                                std::to_string(rho.dim()));
  return (rho.entries() * op.entries()).trace();
}

Eigen::VectorXcd qudit_amplitudes(const QuditPureState& state) {
  const int d = state.dim;
  Eigen::VectorXcd amp(d);
  Complex prefix(1.0, 0.0);
  for (int k = 0; k < d - 1; ++k) {
    amp(k) = prefix * std::cos(0.5 * state.thetas[k]);
    prefix *= std::sin(0.5 * state.thetas[k]) * std::exp(Complex(0.0, state.phis[k]));
  }
  amp(d - 1) = prefix;
  return amp;
}

double subspace_weight(const QuditPureState& state, int k) {
  if (k < 1 || k > state.dim - 1)
    throw std::out_of_range("subspace_weight: k outside 1..d-1");
  double xi = 1.0;
  for (int j = 0; j < k - 1; ++j) {
    const double s = std::sin(0.5 * state.thetas[j]);
    xi *= s * s;
  }
  return xi;
}

SubspaceMoments subspace_moments(const QuditPureState& state, int k) {
  if (k < 1 || k > state.dim - 1)
    throw std::out_of_range("subspace_moments: k outside 1..d-1");
  const double xi = subspace_weight(state, k);
  const double c = std::cos(0.5 * state.thetas[k - 1]);
  const double s = std::sin(0.5 * state.thetas[k - 1]);
  const double cos_next = (k == state.dim - 1) ? 1.0 : std::cos(0.5 * state.thetas[k]);

  SubspaceMoments mo;
  mo.m_sigma = xi * 0.5 * std::sin(state.thetas[k - 1]) * cos_next *
               std::exp(Complex(0.0, state.phis[k - 1]));
  mo.m_pi = xi * c * c;
  mo.norm_sq = xi * (c * c + s * s * cos_next * cos_next);
  return mo;
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& target) {
  if (rho.dim() != target.dim())
    throw std::invalid_argument("fidelity: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.entries());
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXcd sqrt_rho =
      es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> inner(
      sqrt_rho * target.entries() * sqrt_rho, Eigen::EigenvaluesOnly);
  const double tr = inner.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::min(1.0, tr * tr);
}

double fidelity(const DensityMatrix& rho, const Eigen::VectorXcd& target_ket) {
  if (rho.dim() != target_ket.size())
    throw std::invalid_argument("fidelity: dimension mismatch");
  return std::min(1.0, (target_ket.adjoint() * rho.entries() * target_ket)(0).real());
}

double fidelity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("fidelity: dimension mismatch");
  return std::min(1.0, std::norm(a.dot(b)));
}

double entanglement_entropy(const QubitState& reduced) {
  const double r = reduced.bloch_length();
  const double lam[2] = {0.5 * (1.0 + r), 0.5 * (1.0 - r)};
  double h = 0.0;
  for (double l : lam)
    if (l > 0.0) h -= l * std::log2(l);
  return std::clamp(h, 0.0, 1.0);
}

}  // namespace qsi
