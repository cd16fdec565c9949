#include "superswap/witnesses.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace superswap {

namespace {

void require_two_qubit_state(const DensityMatrix& rho) {
  if (rho.size() != 4)
    throw std::invalid_argument("witness: state is not two qubits");
  if (std::abs(rho.trace_real() - 1.0) > 1e-9)
    throw std::invalid_argument("witness: state is not normalized");
}

void require_unit(const Eigen::Vector3d& v) {
  if (std::abs(v.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("witness: measurement direction not unit");
}

Matrix bloch_operator(const Eigen::Vector3d& v) {
  return v.x() * sigma_x() + v.y() * sigma_y() + v.z() * sigma_z();
}

double correlation(const Matrix& rho, const Eigen::Vector3d& a,
                   const Eigen::Vector3d& b) {
  return (kron(bloch_operator(a), bloch_operator(b)) * rho).trace().real();
}

/// Unit vector along v, or `fallback` when v is (numerically) zero; the
/// zero case only arises for directions the correlation matrix kills, so
/// any unit vector attains the same CHSH value there.
Eigen::Vector3d unit_or(const Eigen::Vector3d& v,
                        const Eigen::Vector3d& fallback) {
  const double n = v.norm();
  return n > 1e-14 ? Eigen::Vector3d(v / n) : fallback;
}

}  // namespace

Conditional conditional_expectation(const DensityMatrix& rho, int axis,
                                    int outcome) {
  require_two_qubit_state(rho);
  if (axis < 0 || axis > 2)
    throw std::invalid_argument("conditional_expectation: bad axis");
  if (outcome != 1 && outcome != -1)
    throw std::invalid_argument("conditional_expectation: outcome not +-1");

  const Matrix proj =
      0.5 * (Matrix::Identity(2, 2) + double(outcome) * pauli(axis));
  const Matrix id2 = Matrix::Identity(2, 2);
  const double prob = (kron(proj, id2) * rho.matrix()).trace().real();
  if (prob < 1e-12) return {0.0, 0.0};
  const double joint =
      (kron(proj, pauli(axis)) * rho.matrix()).trace().real();
  return {prob, joint / prob};
}

double steering_parameter(const DensityMatrix& rho, int n_axes) {
  if (n_axes != 2 && n_axes != 3)
    throw std::invalid_argument("steering_parameter: n_axes must be 2 or 3");
  const std::vector<int> axes =
      n_axes == 2 ? std::vector<int>{0, 2} : std::vector<int>{0, 1, 2};
  double s = 0.0;
  for (int axis : axes)
    for (int outcome : {1, -1}) {
      const Conditional c = conditional_expectation(rho, axis, outcome);
      s += c.probability * c.expectation * c.expectation;
    }
  return s;
}

double chsh_value(const DensityMatrix& rho, const ChshSettings& s) {
  require_two_qubit_state(rho);
  require_unit(s.a);
  require_unit(s.a_prime);
  require_unit(s.b);
  require_unit(s.b_prime);
  const Matrix& m = rho.matrix();
  return correlation(m, s.a, s.b) + correlation(m, s.a, s.b_prime) +
         correlation(m, s.a_prime, s.b) -
         correlation(m, s.a_prime, s.b_prime);
}

Eigen::Matrix3d correlation_matrix(const DensityMatrix& rho) {
  require_two_qubit_state(rho);
  Eigen::Matrix3d t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      t(i, j) = (kron(pauli(i), pauli(j)) * rho.matrix()).trace().real();
  return t;
}

ChshMax chsh_max(const DensityMatrix& rho) {
  const Eigen::Matrix3d t = correlation_matrix(rho);
  const SymEig eig = eig_sym_full(t.transpose() * t);
  const Eigen::Vector3d c1 = eig.vectors.col(0);
  const Eigen::Vector3d c2 = eig.vectors.col(1);

  // Bob measures along c1 +- c2 mixed by the angle that balances the two
  // correlation strengths; Alice along the images under T.
  const double n1 = (t * c1).norm();
  const double n2 = (t * c2).norm();
  const double theta = std::atan2(n2, n1);

  ChshSettings s;
  s.b = std::cos(theta) * c1 + std::sin(theta) * c2;
  s.b_prime = std::cos(theta) * c1 - std::sin(theta) * c2;
  s.a = unit_or(t * c1, c1);
  s.a_prime = unit_or(t * c2, c2);

  const double u1 = std::max(eig.values(0), 0.0);
  const double u2 = std::max(eig.values(1), 0.0);
  return {2.0 * std::sqrt(u1 + u2), s};
}

double chsh_max_numeric(const DensityMatrix& rho, int restarts,
                        std::uint64_t seed) {
  const Eigen::Matrix3d t = correlation_matrix(rho);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_unit = [&] {
    Eigen::Vector3d v;
    do
      v = Eigen::Vector3d(gauss(gen), gauss(gen), gauss(gen));
    while (v.norm() < 1e-6);
    return Eigen::Vector3d(v.normalized());
  };
  auto objective = [&](const Eigen::Vector3d& a, const Eigen::Vector3d& ap,
                       const Eigen::Vector3d& b, const Eigen::Vector3d& bp) {
    return a.dot(t * (b + bp)) + ap.dot(t * (b - bp));
  };

  double best = 0.0;
  for (int r = 0; r < restarts; ++r) {
    Eigen::Vector3d a = random_unit();
    Eigen::Vector3d ap = random_unit();
    Eigen::Vector3d b = random_unit();
    Eigen::Vector3d bp = random_unit();
    double value = objective(a, ap, b, bp);
    for (int it = 0; it < 500; ++it) {
      a = unit_or(t * (b + bp), a);
      ap = unit_or(t * (b - bp), ap);
      b = unit_or(t.transpose() * (a + ap), b);
      bp = unit_or(t.transpose() * (a - ap), bp);
      const double next = objective(a, ap, b, bp);
      if (std::abs(next - value) < 1e-12) {
        value = next;
        break;
      }
      value = next;
    }
    best = std::max(best, value);
  }
  return best;
}

WitnessResult evaluate_witnesses(const DensityMatrix& rho) {
  const ChshMax c = chsh_max(rho);
  return {steering_parameter(rho, 2), steering_parameter(rho, 3), c.value,
          c.settings};
}

}  // namespace superswap
