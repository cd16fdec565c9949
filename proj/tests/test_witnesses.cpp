#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "superswap/swap.hpp"
#include "superswap/witnesses.hpp"
#include "test_util.hpp"

using namespace superswap;

namespace {

DensityMatrix two_qubit(const Matrix& m) {
  return DensityMatrix(m, Dims{2, 2});
}

DensityMatrix werner(double p) {
  const Matrix m = p * bell_psi_minus().projector().matrix() +
                   (1.0 - p) * 0.25 * Matrix::Identity(4, 4);
  return two_qubit(m);
}

DensityMatrix phi_plus() {
  Vector v = Vector::Zero(4);
  v(0) = 1.0 / std::sqrt(2.0);
  v(3) = 1.0 / std::sqrt(2.0);
  return StateVector(v, Dims{2, 2}).projector();
}

/// The normalized single-herald cavity state at the reference operating
/// point (gamma = 1, d = 0.1 wavelengths, window T = 5).
DensityMatrix reference_state() {
  return analytic_rho_c(DecayParams(1.0, 0.1), 5.0).normalized();
}

DensityMatrix random_product(std::mt19937_64& rng) {
  return two_qubit(kron(testutil::random_density(rng, 2),
                        testutil::random_density(rng, 2)));
}

Matrix random_unitary2(std::mt19937_64& rng) {
  return expm(testutil::random_hermitian(rng, 2), Complex(0.0, 1.0));
}

template <typename F>
double bisect_root(F f, double lo, double hi) {
  // Assumes f(lo) and f(hi) bracket the root with f increasing.
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("conditioned expectations of the Bell states") {
  const DensityMatrix psim = bell_psi_minus().projector();
  const DensityMatrix psip = bell_psi_plus().projector();
  const DensityMatrix phip = phi_plus();

  for (int axis : {0, 1, 2})
    for (int outcome : {1, -1}) {
      // The singlet anticorrelates every axis.
      const Conditional c = conditional_expectation(psim, axis, outcome);
      CHECK(std::abs(c.probability - 0.5) < 1e-12);
      CHECK(std::abs(c.expectation + outcome) < 1e-12);
    }

  // psi+ correlates x and y, anticorrelates z; phi+ the complement.
  const double sign_psip[3] = {+1.0, +1.0, -1.0};
  const double sign_phip[3] = {+1.0, -1.0, +1.0};
  for (int axis : {0, 1, 2})
    for (int outcome : {1, -1}) {
      const Conditional cp = conditional_expectation(psip, axis, outcome);
      CHECK(std::abs(cp.expectation - sign_psip[axis] * outcome) < 1e-12);
      const Conditional cf = conditional_expectation(phip, axis, outcome);
      CHECK(std::abs(cf.expectation - sign_phip[axis] * outcome) < 1e-12);
    }
}

TEST_CASE("conditioned expectations of a product state") {
  // Alice holds |0>; Bob holds the Bloch vector (0.3, 0.2, -0.4).
  Matrix bob = 0.5 * (Matrix::Identity(2, 2) + 0.3 * sigma_x() +
                      0.2 * sigma_y() - 0.4 * sigma_z());
  Matrix alice = Matrix::Zero(2, 2);
  alice(0, 0) = 1.0;
  const DensityMatrix rho = two_qubit(kron(alice, bob));

  // Along x both outcomes are equally likely and steer nothing: Bob's
  // expectation stays at his own Bloch component.
  for (int outcome : {1, -1}) {
    const Conditional c = conditional_expectation(rho, 0, outcome);
    CHECK(std::abs(c.probability - 0.5) < 1e-12);
    CHECK(std::abs(c.expectation - 0.3) < 1e-12);
  }
  // Along z Alice always reads +1; the -1 branch is empty.
  const Conditional plus = conditional_expectation(rho, 2, 1);
  CHECK(std::abs(plus.probability - 1.0) < 1e-12);
  CHECK(std::abs(plus.expectation + 0.4) < 1e-12);
  const Conditional minus = conditional_expectation(rho, 2, -1);
  CHECK(minus.probability == 0.0);
  CHECK(minus.expectation == 0.0);
}

TEST_CASE("witness inputs are validated") {
  const DensityMatrix rho = werner(0.5);
  CHECK_THROWS_AS(conditional_expectation(rho, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(conditional_expectation(rho, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(steering_parameter(rho, 4), std::invalid_argument);

  const DensityMatrix sub = two_qubit(0.5 * rho.matrix());
  CHECK_THROWS_AS(steering_parameter(sub, 3), std::invalid_argument);
  CHECK_THROWS_AS(chsh_max(sub), std::invalid_argument);

  Matrix one_qubit = Matrix::Identity(2, 2) * 0.5;
  CHECK_THROWS_AS(
      steering_parameter(DensityMatrix(one_qubit, Dims{2}), 3),
      std::invalid_argument);

  ChshSettings s;
  s.a = Eigen::Vector3d(0, 0, 2);  // not unit
  s.a_prime = Eigen::Vector3d(1, 0, 0);
  s.b = Eigen::Vector3d(0, 1, 0);
  s.b_prime = Eigen::Vector3d(0, 0, 1);
  CHECK_THROWS_AS(chsh_value(rho, s), std::invalid_argument);
}

TEST_CASE("steering parameter: exact values") {
  CHECK(std::abs(steering_parameter(bell_psi_minus().projector(), 2) - 2.0) <
        1e-12);
  CHECK(std::abs(steering_parameter(bell_psi_minus().projector(), 3) - 3.0) <
        1e-12);
  CHECK(std::abs(steering_parameter(bell_psi_plus().projector(), 3) - 3.0) <
        1e-12);
  CHECK(std::abs(steering_parameter(phi_plus(), 3) - 3.0) < 1e-12);

  const DensityMatrix mixed = two_qubit(0.25 * Matrix::Identity(4, 4));
  CHECK(steering_parameter(mixed, 2) == 0.0);
  CHECK(steering_parameter(mixed, 3) == 0.0);

  // Depolarized singlet: each axis contributes p^2.
  for (double p : {0.0, 0.2, 0.5, 0.7, 0.9, 1.0}) {
    CHECK(std::abs(steering_parameter(werner(p), 2) - 2.0 * p * p) < 1e-12);
    CHECK(std::abs(steering_parameter(werner(p), 3) - 3.0 * p * p) < 1e-12);
  }
}

TEST_CASE("steering parameter: structural properties") {
  std::mt19937_64 rng(918273);

  SUBCASE("separable states never exceed 1") {
    for (int k = 0; k < 40; ++k) {
      const DensityMatrix rho = random_product(rng);
      CHECK(steering_parameter(rho, 3) <= 1.0 + 1e-9);
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
      Matrix m = Matrix::Zero(4, 4);
      double total = 0.0;
      for (int j = 0; j < 5; ++j) {
        const double w = u(rng);
        m += w * random_product(rng).matrix();
        total += w;
      }
      CHECK(steering_parameter(two_qubit(m / total), 3) <= 1.0 + 1e-9);
    }
  }

  SUBCASE("the two-axis sum is part of the three-axis sum") {
    for (int k = 0; k < 50; ++k) {
      const DensityMatrix rho =
          two_qubit(testutil::random_density(rng, 4, 1 + int(k % 4)));
      CHECK(steering_parameter(rho, 2) <=
            steering_parameter(rho, 3) + 1e-15);
    }
  }
}

TEST_CASE("correlation matrix of known states") {
  const Eigen::Matrix3d t_singlet =
      correlation_matrix(bell_psi_minus().projector());
  CHECK((t_singlet + Eigen::Matrix3d::Identity()).norm() < 1e-12);

  const Eigen::Matrix3d t_psip =
      correlation_matrix(bell_psi_plus().projector());
  CHECK((t_psip - Eigen::Vector3d(1, 1, -1).asDiagonal().toDenseMatrix())
            .norm() < 1e-12);

  const Eigen::Matrix3d t_phip = correlation_matrix(phi_plus());
  CHECK((t_phip - Eigen::Vector3d(1, -1, 1).asDiagonal().toDenseMatrix())
            .norm() < 1e-12);

  Matrix vac = Matrix::Zero(4, 4);
  vac(0, 0) = 1.0;
  const Eigen::Matrix3d t_vac = correlation_matrix(two_qubit(vac));
  CHECK((t_vac - Eigen::Vector3d(0, 0, 1).asDiagonal().toDenseMatrix())
            .norm() < 1e-12);
}

TEST_CASE("maximal CHSH combination: exact values and settings") {
  SUBCASE("singlet saturates the quantum bound") {
    const ChshMax c = chsh_max(bell_psi_minus().projector());
    CHECK(std::abs(c.value - 2.0 * std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(chsh_value(bell_psi_minus().projector(), c.settings) -
                   c.value) < 1e-9);
  }

  SUBCASE("textbook settings also reach the bound on the singlet") {
    ChshSettings s;
    s.a = Eigen::Vector3d(0, 0, 1);
    s.a_prime = Eigen::Vector3d(1, 0, 0);
    s.b = -Eigen::Vector3d(1, 0, 1).normalized();
    s.b_prime = Eigen::Vector3d(1, 0, -1).normalized();
    CHECK(std::abs(chsh_value(bell_psi_minus().projector(), s) -
                   2.0 * std::sqrt(2.0)) < 1e-12);
  }

  SUBCASE("depolarized singlet scales linearly") {
    for (double p : {0.1, 0.5, 1.0 / std::sqrt(2.0), 0.9}) {
      const ChshMax c = chsh_max(werner(p));
      CHECK(std::abs(c.value - 2.0 * std::sqrt(2.0) * p) < 1e-12);
      CHECK(std::abs(chsh_value(werner(p), c.settings) - c.value) < 1e-9);
    }
  }

  SUBCASE("classically correlated states stop exactly at 2") {
    Matrix m = Matrix::Zero(4, 4);
    m(0, 0) = 0.5;
    m(3, 3) = 0.5;
    const ChshMax c = chsh_max(two_qubit(m));
    CHECK(std::abs(c.value - 2.0) < 1e-12);
    CHECK(std::abs(chsh_value(two_qubit(m), c.settings) - 2.0) < 1e-9);
  }

  SUBCASE("vanishing correlations give zero with finite settings") {
    const DensityMatrix mixed = two_qubit(0.25 * Matrix::Identity(4, 4));
    const ChshMax c = chsh_max(mixed);
    CHECK(c.value == 0.0);
    CHECK(c.settings.a.allFinite());
    CHECK(c.settings.b.allFinite());
    CHECK(std::abs(c.settings.b.norm() - 1.0) < 1e-9);
    CHECK(std::abs(chsh_value(mixed, c.settings)) < 1e-12);
    CHECK(chsh_max_numeric(mixed) < 1e-9);
  }

  SUBCASE("separable states satisfy the local bound") {
    std::mt19937_64 rng(5150);
    for (int k = 0; k < 40; ++k)
      CHECK(chsh_max(random_product(rng)).value <= 2.0 + 1e-9);
  }
}

TEST_CASE("closed-form CHSH maximum agrees with alternating ascent") {
  std::mt19937_64 rng(246810);
  for (int k = 0; k < 100; ++k) {
    const DensityMatrix rho =
        two_qubit(testutil::random_density(rng, 4, 1 + int(k % 4)));
    const ChshMax c = chsh_max(rho);
    CHECK(std::abs(c.value - chsh_max_numeric(rho)) < 1e-6);
    CHECK(std::abs(chsh_value(rho, c.settings) - c.value) < 1e-9);
  }
  // Maximally entangled corner case included.
  CHECK(std::abs(chsh_max_numeric(bell_psi_minus().projector()) -
                 2.0 * std::sqrt(2.0)) < 1e-6);
}

TEST_CASE("witnesses are invariant under local unitaries") {
  std::mt19937_64 rng(31415);
  for (int k = 0; k < 20; ++k) {
    const DensityMatrix rho = two_qubit(testutil::random_density(rng, 4));
    const Matrix u = kron(random_unitary2(rng), random_unitary2(rng));
    const DensityMatrix rotated = two_qubit(u * rho.matrix() * u.adjoint());
    CHECK(std::abs(chsh_max(rho).value - chsh_max(rotated).value) < 1e-9);
  }
}

TEST_CASE("witness thresholds of the depolarized singlet") {
  // Steering (three axes) switches on at 1/sqrt(3), the CHSH violation
  // at 1/sqrt(2); locate both by bisection on the implemented witnesses.
  const double p_steer = bisect_root(
      [](double p) { return steering_parameter(werner(p), 3) - 1.0; }, 0.3,
      0.9);
  CHECK(std::abs(p_steer - 1.0 / std::sqrt(3.0)) < 1e-6);

  const double p_chsh = bisect_root(
      [](double p) { return chsh_max(werner(p)).value - 2.0; }, 0.5, 0.9);
  CHECK(std::abs(p_chsh - 1.0 / std::sqrt(2.0)) < 1e-6);
}

TEST_CASE("witnesses of the heralded cavity state") {
  const DensityMatrix rho = reference_state();
  const WitnessResult w = evaluate_witnesses(rho);
  CHECK(std::abs(w.s2 - 1.51270547117213) < 1e-11);
  CHECK(std::abs(w.s3 - 2.09844131771133) < 1e-11);
  CHECK(std::abs(w.b_max - 2.45871557085954) < 1e-11);
  CHECK(std::abs(chsh_value(rho, w.settings) - w.b_max) < 1e-9);

  const Eigen::Matrix3d t = correlation_matrix(rho);
  CHECK(std::abs(t(0, 0) - -0.765333813795789) < 1e-12);
  CHECK(std::abs(t(1, 1) - -0.765333813795789) < 1e-12);
  CHECK(std::abs(t(2, 2) - -0.962073135503524) < 1e-12);
  CHECK(std::abs(t(0, 1)) < 1e-14);
  CHECK(std::abs(t(0, 2)) < 1e-14);
  CHECK(std::abs(t(1, 2)) < 1e-14);

  // Both certify nonclassicality at the reference point, steering with
  // the larger margin.
  CHECK(w.s3 > 1.0);
  CHECK(w.b_max > 2.0);
}
