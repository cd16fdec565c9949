#pragma once

// Nonlocality witnesses on a two-qubit state: the conditioned-variance
// steering parameter and the maximal CHSH combination.

#include <cstdint>

#include "superswap/qmath.hpp"

namespace superswap {

/// Outcome probability and conditioned expectation of one steering round.
struct Conditional {
  double probability;  // P(Alice reads `outcome` along `axis`)
  double expectation;  // Bob's same-axis expectation given that outcome
};

/// Alice (qubit 0) measures a Pauli axis (0 = x, 1 = y, 2 = z) and reads
/// +1 or -1; Bob's conditioned same-axis expectation follows.  A
/// zero-probability branch returns {0, 0}.
Conditional conditional_expectation(const DensityMatrix& rho, int axis,
                                    int outcome);

/// Steering parameter: sum over n_axes Pauli axes (2 -> {x, z},
/// 3 -> {x, y, z}) of sum_b P(b) <B>_b^2.  Values above 1 rule out a
/// local-hidden-state model for Bob.
double steering_parameter(const DensityMatrix& rho, int n_axes);

/// Bloch measurement directions of a CHSH round; all four unit length.
struct ChshSettings {
  Eigen::Vector3d a, a_prime, b, b_prime;
};

/// E(a,b) + E(a,b') + E(a',b) - E(a',b') at the given settings, with
/// E(a,b) = tr[rho (a.sigma (x) b.sigma)].
double chsh_value(const DensityMatrix& rho, const ChshSettings& s);

/// T_ij = tr[rho (sigma_i (x) sigma_j)].
Eigen::Matrix3d correlation_matrix(const DensityMatrix& rho);

struct ChshMax {
  double value;
  ChshSettings settings;  // attain `value` in chsh_value
};

/// Maximal CHSH combination 2 sqrt(u1 + u2), with u1, u2 the two largest
/// eigenvalues of T^T T, plus maximizing settings built from the
/// eigenvectors.  Values above 2 violate the local bound.
ChshMax chsh_max(const DensityMatrix& rho);

/// The same maximum found by alternating ascent over settings from
/// random starts; shares nothing with chsh_max beyond the correlation
/// matrix.
double chsh_max_numeric(const DensityMatrix& rho, int restarts = 32,
                        std::uint64_t seed = 7042);

struct WitnessResult {
  double s2;
  double s3;
  double b_max;
  ChshSettings settings;
};

/// Both steering parameters and the CHSH maximum of one state.
WitnessResult evaluate_witnesses(const DensityMatrix& rho);

}  // namespace superswap
