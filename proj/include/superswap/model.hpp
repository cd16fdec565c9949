#pragma once

// Two distant two-level atoms decaying collectively into free space, each
// holding half of an atom-cavity entangled pair.  Subsystem ordering used
// throughout: (atom 1, atom 2, cavity 1, cavity 2), all qubits.  Atom
// index 0 = excited |+>, 1 = ground |->; cavity index = photon number.

#include <array>

#include "superswap/qmath.hpp"

namespace superswap {

/// Cross-damping rate gamma * sin(2 pi d/lambda) / (2 pi d/lambda) of two
/// atoms separated by d.
double collective_rate(double d_over_lambda, double gamma);

/// Collective decay parameters for one atom pair.
struct DecayParams {
  double gamma;          // single-atom decay rate
  double d_over_lambda;  // separation in transition wavelengths
  double Gamma;          // cross-damping rate, |Gamma| <= gamma

  DecayParams(double gamma, double d_over_lambda);

  /// Subradiant-to-superradiant rate ratio (gamma - Gamma)/(gamma + Gamma).
  double kappa() const { return (gamma - Gamma) / (gamma + Gamma); }
};

inline Dims full_dims() { return {2, 2, 2, 2}; }
inline Dims atom_dims() { return {2, 2}; }
inline Dims cavity_dims() { return {2, 2}; }

/// Collective (Dicke) basis of the two-atom space.
struct DickeBasis {
  static StateVector t1();   // |++>
  static StateVector t0();   // (|+-> + |-+>)/sqrt(2)
  static StateVector s0();   // (|+-> - |-+>)/sqrt(2)
  static StateVector tm1();  // |-->
};

/// Collective jump operators on the full four-qubit space, identity on
/// the cavity factors:
///   j_sym      = sqrt((gamma+Gamma)/2) (sigma1- + sigma2-)
///   j_antisym  = sqrt((gamma-Gamma)/2) (sigma1- - sigma2-)
struct JumpOperators {
  Matrix j_sym;
  Matrix j_antisym;
};

JumpOperators jump_operators(const DecayParams& p);

/// No-jump generator -(i/2) sum_k Jk^dag Jk on the full space; diagonal
/// in the Dicke basis with sector rates {2g, g+G, g-G, 0}.
Matrix effective_hamiltonian(const DecayParams& p);

/// Projectors onto the Dicke sectors (t1, t0, s0, tm1) lifted to the
/// full space (identity on the cavities).
std::array<Matrix, 4> dicke_sector_projectors();

/// Decay rates of the four sectors, ordered as the projectors.
std::array<double, 4> dicke_sector_rates(const DecayParams& p);

/// Resonant atom-cavity exchange coupling.
struct CouplingParams {
  double g;  // vacuum Rabi coupling
};

/// Evolve an (atom, cavity) pair under g (sigma+ b + sigma- b^dag) for
/// time t.  The cavity is truncated to {0, 1} photons; amplitude beyond
/// 1e-10 on |+,1> (which would leak to two photons) raises an error.
StateVector jc_evolve(const StateVector& s, const CouplingParams& c,
                      double t);

/// Quarter-period exchange pulse plus a fixed phase on the |1>_c
/// component, turning |+,0> into (|0>_c |+> - |1>_c |->)/sqrt(2).
StateVector prepare_atom_cavity_singlet(const CouplingParams& c);

/// Both atom-cavity singlets, reordered to (atom1, atom2, cav1, cav2).
StateVector prepare_swap_input(const CouplingParams& c);

}  // namespace superswap
