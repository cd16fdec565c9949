#include "superswap/model.hpp"

#include <cmath>

namespace superswap {

namespace {

// Lowering operator |-><+| in the atom basis (excited = index 0).
Matrix sigma_minus() {
  Matrix s = Matrix::Zero(2, 2);
  s(1, 0) = 1.0;
  return s;
}

// sigma1- +/- sigma2- on the two-atom space.
Matrix collective_lowering(double sign) {
  const Matrix sm = sigma_minus();
  const Matrix id = Matrix::Identity(2, 2);
  return kron(sm, id) + sign * kron(id, sm);
}

// Lift a two-atom operator to (a1, a2, c1, c2).
Matrix with_cavity_identity(const Matrix& atoms) {
  return kron(atoms, Matrix(Matrix::Identity(4, 4)));
}

}  // namespace

double collective_rate(double d_over_lambda, double gamma) {
  if (d_over_lambda <= 0.0)
    throw std::invalid_argument("collective_rate: separation must be positive");
  if (gamma <= 0.0)
    throw std::invalid_argument("collective_rate: gamma must be positive");
  const double x = 2.0 * M_PI * d_over_lambda;
  return gamma * std::sin(x) / x;
}

DecayParams::DecayParams(double gamma_, double d_over_lambda_)
    : gamma(gamma_),
      d_over_lambda(d_over_lambda_),
      Gamma(collective_rate(d_over_lambda_, gamma_)) {}

StateVector DickeBasis::t1() { return basis_state(atom_dims(), {0, 0}); }

StateVector DickeBasis::tm1() { return basis_state(atom_dims(), {1, 1}); }

StateVector DickeBasis::t0() {
  Vector v = Vector::Zero(4);
  v(1) = v(2) = 1.0 / std::sqrt(2.0);
  return StateVector(v, atom_dims());
}

StateVector DickeBasis::s0() {
  Vector v = Vector::Zero(4);
  v(1) = 1.0 / std::sqrt(2.0);
  v(2) = -1.0 / std::sqrt(2.0);
  return StateVector(v, atom_dims());
}

JumpOperators jump_operators(const DecayParams& p) {
  JumpOperators j;
  j.j_sym = std::sqrt((p.gamma + p.Gamma) / 2.0) *
            with_cavity_identity(collective_lowering(+1.0));
  j.j_antisym = std::sqrt((p.gamma - p.Gamma) / 2.0) *
                with_cavity_identity(collective_lowering(-1.0));
  return j;
}

Matrix effective_hamiltonian(const DecayParams& p) {
  const JumpOperators j = jump_operators(p);
  const Matrix k = j.j_sym.adjoint() * j.j_sym +
                   j.j_antisym.adjoint() * j.j_antisym;
  return Complex(0.0, -0.5) * k;
}

std::array<Matrix, 4> dicke_sector_projectors() {
  const StateVector states[4] = {DickeBasis::t1(), DickeBasis::t0(),
                                 DickeBasis::s0(), DickeBasis::tm1()};
  std::array<Matrix, 4> out;
  for (int k = 0; k < 4; ++k) {
    const Vector& v = states[k].amplitudes();
    out[k] = with_cavity_identity(v * v.adjoint());
  }
  return out;
}

std::array<double, 4> dicke_sector_rates(const DecayParams& p) {
  return {2.0 * p.gamma, p.gamma + p.Gamma, p.gamma - p.Gamma, 0.0};
}

StateVector jc_evolve(const StateVector& s, const CouplingParams& c,
                      double t) {
  if (s.dims() != Dims{2, 2})
    throw std::invalid_argument("jc_evolve: expected one (atom, cavity) pair");
  // |+,1> couples to the two-photon state, which the truncation drops.
  if (std::norm(s.amplitudes()(1)) > 1e-10)
    throw std::domain_error("jc_evolve: amplitude on |+,1> violates the cavity truncation");

  // Exchange block {|+,0>, |-,1>} rotates; |-,0> is dark.
  const double angle = c.g * t;
  const Complex cos_a(std::cos(angle), 0.0);
  const Complex msin_a(0.0, -std::sin(angle));
  Vector out = s.amplitudes();
  const Complex a0 = out(0), a3 = out(3);
  out(0) = cos_a * a0 + msin_a * a3;
  out(3) = msin_a * a0 + cos_a * a3;
  return StateVector(std::move(out), s.dims());
}

StateVector prepare_atom_cavity_singlet(const CouplingParams& c) {
  if (c.g <= 0.0)
    throw std::invalid_argument("prepare_atom_cavity_singlet: coupling must be positive");
  StateVector s = jc_evolve(basis_state({2, 2}, {0, 0}), c,
                            M_PI / (4.0 * c.g));
  // Rephase |1>_c so the pair reads (|0>_c|+> - |1>_c|->)/sqrt(2).
  Matrix phase = Matrix::Identity(2, 2);
  phase(1, 1) = Complex(0.0, -1.0);
  return apply_local(s, phase, 1);
}

StateVector prepare_swap_input(const CouplingParams& c) {
  const StateVector pair = prepare_atom_cavity_singlet(c);
  // kron gives (a1, c1, a2, c2); regroup atoms and cavities.
  return permute_subsystems(kron(pair, pair), {0, 2, 1, 3});
}

}  // namespace superswap
