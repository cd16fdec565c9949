#pragma once

// Post-selected entanglement swap: the collective decay of the two atoms
// acts as the Bell measurement.  Exactly one detected photon projects the
// cavities onto a Bell-state mixture; the detection time decides which
// channel is announced and whether the phase correction is applied.

#include <optional>

#include "superswap/trajectories.hpp"

namespace superswap {

enum class OutcomeKind {
  success_psi_minus,           // single photon classified subradiant
  success_psi_plus_corrected,  // single photon classified superradiant
  failure_zero_photons,
  failure_two_photons,
  discarded_inefficiency,      // photons emitted but none detected
};

struct SwapOutcome {
  OutcomeKind kind;
  DensityMatrix cavity_state;           // (cavity 1, cavity 2), unit trace
  std::optional<double> emission_time;  // set for single-photon outcomes
};

struct EfficiencyModel {
  double eta = 1.0;  // probability that an emitted photon is detected
};

/// Time at which the superradiant and subradiant single-photon emission
/// densities cross; detections before it are classified superradiant.
/// Requires 0 < Gamma < gamma.
double crossover_time(const DecayParams& p);

/// Drop each recorded emission with probability 1 - eta (the photon was
/// emitted but the detector missed it).  State and weight are untouched.
TrajectoryRecord apply_efficiency(const TrajectoryRecord& rec,
                                  const EfficiencyModel& eff,
                                  RngStream& rng);

/// Sort a record into a swap outcome by detected-photon count.  A single
/// detection before the crossover gets the announced phase correction
/// (Z on cavity 2), which exchanges the two Bell components.
SwapOutcome classify_and_correct(const TrajectoryRecord& rec,
                                 const DecayParams& p, double t_max);

/// apply_efficiency followed by classify_and_correct.  Records whose
/// every emission went undetected are labeled discarded_inefficiency
/// rather than failure_zero_photons.
SwapOutcome postselect(const TrajectoryRecord& rec, const DecayParams& p,
                       double t_max, const EfficiencyModel& eff,
                       RngStream& rng);

/// Closed-form (sub-normalized) cavity-pair state conditioned on exactly
/// one photon in [0, T] with ideal detection.  The trace is the
/// post-selection probability.
DensityMatrix analytic_rho_c(const DecayParams& p, double T);

/// Closed form with finite detector efficiency: an eta-weighted copy of
/// the ideal state plus the misidentified one-of-two-photon mass on
/// |00><00|.
DensityMatrix analytic_rho_c_eta(const DecayParams& p, double T,
                                 const EfficiencyModel& eff);

/// Trace of analytic_rho_c_eta.
double success_probability(const DecayParams& p, double T,
                           const EfficiencyModel& eff);

/// Cavity Bell states (|10> +- |01>)/sqrt(2) on (cavity 1, cavity 2).
StateVector bell_psi_plus();
StateVector bell_psi_minus();

}  // namespace superswap
