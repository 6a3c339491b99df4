#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "helpers.hpp"
#include "qsi/states.hpp"

using namespace qsi;
using qsi::test::random_qubit;
using qsi::test::random_qudit;

namespace {

// trace of rho * op computed with bare loops, independent of Eigen
Complex naive_trace_product(const Eigen::Matrix2cd& rho, const Eigen::Matrix2cd& op) {
  Complex tr(0.0, 0.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) tr += rho(i, j) * op(j, i);
  return tr;
}

}  // namespace

TEST_CASE("density matrix at reference states") {
  const DensityMatrix pole = density_matrix(QubitState(0.0, 0.0, 1.0));
  CHECK(pole(0, 0).real() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(pole(0, 1)) == doctest::Approx(0.0));
  CHECK(std::abs(pole(1, 1)) == doctest::Approx(0.0));

  const DensityMatrix mixed = density_matrix(QubitState(kPi / 2.0, 0.0, 0.0));
  CHECK(mixed(0, 0).real() == doctest::Approx(0.5));
  CHECK(mixed(1, 1).real() == doctest::Approx(0.5));
  CHECK(std::abs(mixed(0, 1)) == doctest::Approx(0.0));

  const DensityMatrix equator = density_matrix(QubitState(kPi / 2.0, kPi / 2.0, 1.0));
  CHECK(equator(1, 0).real() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(equator(1, 0).imag() == doctest::Approx(0.5));
}

TEST_CASE("density matrix is Hermitian, trace one, positive semidefinite") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const QubitState s = random_qubit(rng);
    const DensityMatrix rho = density_matrix(s);  // constructor validates
    CHECK(std::abs(rho.entries().trace() - Complex(1.0, 0.0)) < 1e-12);
    CHECK(std::abs(rho(0, 1) - std::conj(rho(1, 0))) < 1e-12);
    const double off = 0.5 * s.mu * std::sin(s.theta);
    CHECK(std::abs(rho(1, 0)) == doctest::Approx(off).epsilon(1e-12));
  }
}

TEST_CASE("ladder expectation magnitude and argument") {
  const Operator2 ladder = Operator2::sigma_minus();

  CHECK(expect(ladder, density_matrix(QubitState(kPi / 2.0, 0.0, 1.0))).real() ==
        doctest::Approx(0.5));
  CHECK(std::abs(expect(Operator2::pi0(), density_matrix(QubitState(kPi, 0.0, 1.0)))) <
        1e-15);

  // frozen value crosschecked against a bare-loop trace
  const QubitState s(kPi / 3.0, kPi / 4.0, 0.8);
  const Complex got = expect(ladder, density_matrix(s));
  const Complex frozen(0.2449489742783178, 0.2449489742783178);
  CHECK(std::abs(got - frozen) < 1e-12);
  const Complex oracle = naive_trace_product(density_matrix(s).entries(), ladder.entries());
  CHECK(std::abs(got - oracle) < 1e-14);

  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const QubitState r = random_qubit(rng);
    const Complex ev = expect(ladder, density_matrix(r));
    CHECK(std::abs(ev) == doctest::Approx(0.5 * r.mu * std::sin(r.theta)).epsilon(1e-11));
    if (r.mu * std::sin(r.theta) > 1e-6)
      CHECK(std::abs(qsi::test::wrap_diff(std::arg(ev), r.phi)) < 1e-9);
  }
}

TEST_CASE("expectation rejects dimension mismatch") {
  const Eigen::MatrixXcd mixed3 = Eigen::MatrixXcd::Identity(3, 3) / 3.0;
  const DensityMatrix rho{mixed3};
  CHECK_THROWS_AS(expect(Operator2::sigma_minus(), rho), std::invalid_argument);
}

TEST_CASE("operator role tags and the polar factorization") {
  CHECK(Operator2::sigma_minus().entries()(0, 1) == Complex(1.0, 0.0));
  CHECK(Operator2::sigma_minus().entries()(1, 0) == Complex(0.0, 0.0));
  const Eigen::Matrix2cd product =
      Operator2::pi0().entries() * Operator2::sigma_x().entries();
  CHECK((product - Operator2::sigma_minus().entries()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("qudit amplitudes at reference states") {
  const Eigen::VectorXcd equal = qudit_amplitudes(QuditPureState(2, {kPi / 2.0}, {0.0}));
  CHECK(equal(0).real() == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(equal(1).real() == doctest::Approx(1.0 / std::sqrt(2.0)));

  const Eigen::VectorXcd top = qudit_amplitudes(QuditPureState(3, {0.0, 1.1}, {0.4, -2.0}));
  CHECK(std::abs(top(0) - Complex(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(top(1)) < 1e-15);
  CHECK(std::abs(top(2)) < 1e-15);

  // product evaluation: d=3, both angles at pi/2, zero phases
  const Eigen::VectorXcd half = qudit_amplitudes(QuditPureState(3, {kPi / 2.0, kPi / 2.0}, {0.0, 0.0}));
  CHECK(half(0).real() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(half(1).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(half(2).real() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("qudit amplitudes stay normalized across dimensions") {
  std::mt19937_64 rng(13);
  for (int d = 2; d <= 8; ++d) {
    for (int i = 0; i < 1000 / (d - 1); ++i) {
      const QuditPureState s = random_qudit(rng, d);
      CHECK(qudit_amplitudes(s).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("subspace moments against the embedded two-vector") {
  const SubspaceMoments base = subspace_moments(QuditPureState(2, {kPi / 2.0}, {0.0}), 1);
  CHECK(base.m_sigma.real() == doctest::Approx(0.5));
  CHECK(base.m_pi == doctest::Approx(0.5));
  CHECK(base.norm_sq == doctest::Approx(1.0));

  // theta_1 = pi puts full weight in the lower subspace
  const QuditPureState lower(3, {kPi, 0.9}, {0.3, 0.7});
  CHECK(subspace_weight(lower, 2) == doctest::Approx(1.0));
  const SubspaceMoments lo = subspace_moments(lower, 2);
  CHECK(std::abs(lo.m_sigma) == doctest::Approx(0.5 * std::sin(0.9)).epsilon(1e-12));
  CHECK(lo.m_pi == doctest::Approx(std::cos(0.45) * std::cos(0.45)).epsilon(1e-12));

  // brute-force inner products on the embedded two-vector
  std::mt19937_64 rng(14);
  const QuditPureState probe(4, {kPi / 3.0, kPi / 2.0, kPi / 4.0}, {0.1, 0.2, 0.3});
  for (int d = 2; d <= 6; ++d) {
    for (int rep = 0; rep < 50; ++rep) {
      const QuditPureState s = rep == 0 && d == 4 ? probe : random_qudit(rng, d);
      for (int k = 1; k <= d - 1; ++k) {
        Complex prefix(1.0, 0.0);
        for (int j = 0; j < k - 1; ++j)
          prefix *= std::sin(0.5 * s.thetas[j]) * std::exp(Complex(0.0, s.phis[j]));
        const double cos_next = k == d - 1 ? 1.0 : std::cos(0.5 * s.thetas[k]);
        const Complex a = prefix * std::cos(0.5 * s.thetas[k - 1]);
        const Complex b = prefix * std::sin(0.5 * s.thetas[k - 1]) *
                          std::exp(Complex(0.0, s.phis[k - 1])) * cos_next;
        const SubspaceMoments mo = subspace_moments(s, k);
        CHECK(std::abs(mo.m_sigma - std::conj(a) * b) < 1e-12);
        CHECK(mo.m_pi == doctest::Approx(std::norm(a)).epsilon(1e-12));
        CHECK(mo.norm_sq == doctest::Approx(std::norm(a) + std::norm(b)).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(subspace_moments(probe, 0), std::out_of_range);
  CHECK_THROWS_AS(subspace_moments(probe, 4), std::out_of_range);
}

TEST_CASE("fidelity conventions") {
  const DensityMatrix zero = density_matrix(QubitState(0.0, 0.0, 1.0));
  const DensityMatrix one = density_matrix(QubitState(kPi, 0.0, 1.0));
  const DensityMatrix mixed = density_matrix(QubitState(kPi / 2.0, 0.0, 0.0));

  CHECK(fidelity(zero, zero) == doctest::Approx(1.0));
  CHECK(fidelity(zero, one) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(fidelity(mixed, zero) == doctest::Approx(0.5));

  // Uhlmann route must agree with the 2x2 closed form
  // Tr(rho sigma) + 2 sqrt(det rho det sigma)
  std::mt19937_64 rng(15);
  for (int i = 0; i < 200; ++i) {
    const DensityMatrix a = density_matrix(random_qubit(rng));
    const DensityMatrix b = density_matrix(random_qubit(rng));
    const double closed =
        (a.entries() * b.entries()).trace().real() +
        2.0 * std::sqrt(std::max(0.0, a.entries().determinant().real() *
                                          b.entries().determinant().real()));
    CHECK(fidelity(a, b) == doctest::Approx(closed).epsilon(1e-9));
  }
}

TEST_CASE("entanglement entropy of the reduced state") {
  CHECK(entanglement_entropy(QubitState(kPi / 2.0, 0.0, 0.0)) == doctest::Approx(1.0));
  CHECK(entanglement_entropy(QubitState(0.0, 0.0, 0.3)) == doctest::Approx(0.0));

  // eigen-decomposition oracle on the 2x2 matrix
  const QubitState s(kPi / 2.0, 0.0, 0.6);
  const double frozen = 0.7219280948873623;  // binary entropy of 0.8
  CHECK(entanglement_entropy(s) == doctest::Approx(frozen).epsilon(1e-12));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(density_matrix(s).entries());
  double oracle = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double lam = es.eigenvalues()(i);
    if (lam > 0.0) oracle -= lam * std::log2(lam);
  }
  CHECK(entanglement_entropy(s) == doctest::Approx(oracle).epsilon(1e-12));

  std::mt19937_64 rng(16);
  for (int i = 0; i < 500; ++i) {
    const QubitState r = random_qubit(rng);
    const double e = entanglement_entropy(r);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
    const double len = r.bloch_length();
    if (std::abs(len - 1.0) < 1e-12) CHECK(e < 1e-9);
    if (len < 1e-12) CHECK(e == doctest::Approx(1.0));
  }
}

TEST_CASE("state validation rejects out-of-range parameters") {
  CHECK_THROWS_AS(QubitState(-0.1, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(QubitState(0.1, 0.0, 1.2), std::invalid_argument);
  CHECK_THROWS_AS(QuditPureState(1, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(QuditPureState(3, {0.1}, {0.2, 0.3}), std::invalid_argument);

  Eigen::Matrix2cd bad;
  bad << Complex(0.9, 0.0), Complex(0.4, 0.0), Complex(0.4, 0.0), Complex(0.1, 0.0);
  CHECK_THROWS_AS(DensityMatrix{bad}, std::invalid_argument);  // negative eigenvalue

  Eigen::Matrix2cd not_herm;
  not_herm << Complex(0.5, 0.0), Complex(0.1, 0.2), Complex(0.1, 0.3), Complex(0.5, 0.0);
  CHECK_THROWS_AS(DensityMatrix{not_herm}, std::invalid_argument);
}
