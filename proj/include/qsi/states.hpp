#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qsi {

using Complex = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;

/// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

/// Wrap a waveplate orientation to [0, pi).
double wrap_orientation(double a);

/// Bloch-sphere parameterization of a (possibly mixed) qubit.
/// theta in [0, pi], phi in (-pi, pi], mu in [0, 1]; mu = 1 for pure states.
struct QubitState {
  double theta = 0.0;
  double phi = 0.0;
  double mu = 1.0;

  QubitState() = default;
  QubitState(double theta_, double phi_, double mu_);

  /// Bloch vector length sqrt(cos^2 theta + mu^2 sin^2 theta).
  double bloch_length() const;
};

/// d x d complex Hermitian trace-one positive semidefinite operator.
class DensityMatrix {
 public:
  explicit DensityMatrix(Eigen::MatrixXcd entries);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXcd& entries() const { return entries_; }
  Complex operator()(int r, int c) const { return entries_(r, c); }

  double purity() const;

 private:
  Eigen::MatrixXcd entries_;
};

/// Pure qudit state in nested polar form: amplitude k carries
/// prod_{j<k} sin(theta_j/2) e^{i phi_j} times cos(theta_k/2),
/// the last amplitude omitting the cosine.
struct QuditPureState {
  int dim = 2;
  std::vector<double> thetas;  // d-1 angles in [0, pi]
  std::vector<double> phis;    // d-1 angles in (-pi, pi]

  QuditPureState() = default;
  QuditPureState(int dim_, std::vector<double> thetas_, std::vector<double> phis_);
};

/// 2x2 operator with a role tag. The ladder operator here is fixed to
/// |0><1| so that pi0 * sigma_x factors it exactly.
class Operator2 {
 public:
  enum class Role { SigmaMinus, SigmaPlus, Pi0, SigmaX, Hwp, Qwp, Custom };

  static Operator2 sigma_minus();
  static Operator2 sigma_plus();
  static Operator2 pi0();
  static Operator2 sigma_x();
  /// Jones matrix of a half-wave plate with fast axis at angle alpha.
  static Operator2 hwp(double alpha);
  /// Jones matrix of a quarter-wave plate with fast axis at angle beta.
  static Operator2 qwp(double beta);
  static Operator2 custom(const Eigen::Matrix2cd& m);

  Role role() const { return role_; }
  const Eigen::Matrix2cd& entries() const { return m_; }

 private:
  Operator2(Role role, Eigen::Matrix2cd m) : role_(role), m_(std::move(m)) {}
  Role role_;
  Eigen::Matrix2cd m_;
};

/// 2x2 density matrix of a Bloch-parameterized qubit.
DensityMatrix density_matrix(const QubitState& state);

/// Tr(rho * op). Throws std::invalid_argument on dimension mismatch.
Complex expect(const Operator2& op, const DensityMatrix& rho);

/// Amplitude vector of the nested polar form; unit norm by construction.
Eigen::VectorXcd qudit_amplitudes(const QuditPureState& state);

/// Ladder and projector moments of the k-th {k, k+1} two-dimensional
/// subspace (k is 1-based, 1 <= k <= d-1).
struct SubspaceMoments {
  Complex m_sigma;  // <psi_k| |0><1| |psi_k> in the embedded two-vector
  double m_pi;      // <psi_k| |0><0| |psi_k>
  double norm_sq;   // squared norm of the embedded two-vector
};

SubspaceMoments subspace_moments(const QuditPureState& state, int k);

/// Subspace weight xi(k) = prod_{j<k} sin^2(theta_j / 2).
double subspace_weight(const QuditPureState& state, int k);

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
/// For a pure target this equals <psi|rho|psi>.
double fidelity(const DensityMatrix& rho, const DensityMatrix& target);

/// <psi|rho|psi> for a pure target ket.
double fidelity(const DensityMatrix& rho, const Eigen::VectorXcd& target_ket);

/// Overlap fidelity |<a|b>|^2 of two pure kets (global phase drops out).
double fidelity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

/// Binary entropy of the marginal eigenvalues (1 +- r)/2 in bits.
/// Equals 1 for a maximally mixed marginal and 0 for a pure one.
double entanglement_entropy(const QubitState& reduced);

}  // namespace qsi
