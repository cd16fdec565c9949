#pragma once

// Quantum-trajectory unraveling of the two-atom collective decay.  The
// no-jump generator is diagonal on the Dicke sectors, so waiting times
// are sampled by inverting the exact sector-resolved survival function;
// no small-time-step loop is involved.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "superswap/model.hpp"

namespace superswap {

/// Counter-seeded deterministic RNG stream.  Identical (seed, stream)
/// pairs reproduce identical sequences regardless of threading, which is
/// what makes ensemble results independent of the worker count.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  /// Uniform double strictly inside (0, 1).
  double next_uniform();

 private:
  std::uint64_t state_;
};

enum class Channel { symmetric, antisymmetric };

struct EmissionEvent {
  double time;
  Channel channel;
};

/// One unraveled history: recorded emissions plus the normalized state
/// at the end of the observation window.
struct TrajectoryRecord {
  std::vector<EmissionEvent> events;
  StateVector final_state;
  double weight = 1.0;
};

/// Sample the next emission after t_now, or evolve to t_max if none
/// occurs.  Returns the (event, post-jump state) pair, or (nullopt,
/// no-jump state at t_max).  States are returned normalized.
std::pair<std::optional<EmissionEvent>, StateVector> sample_next_event(
    const StateVector& state, const DecayParams& p, double t_now,
    double t_max, RngStream& rng);

/// Unravel one history of the window [0, t_max].  At most two emissions
/// can occur from the two-excitation manifold.
TrajectoryRecord run_trajectory(const StateVector& initial,
                                const DecayParams& p, double t_max,
                                RngStream& rng);

/// Average of |psi><psi| over n_trajectories independent histories at
/// time t.  Trajectory i always draws from stream (seed, i) and partial
/// sums fold in fixed 1024-trajectory chunks, so the result is bitwise
/// identical for any worker count.  workers <= 0 means use all cores.
DensityMatrix ensemble_density(const StateVector& initial,
                               const DecayParams& p, double t,
                               std::size_t n_trajectories,
                               std::uint64_t seed, int workers = 0);

/// Fixed-step RK4 integration of the collective-decay master equation
/// (no coherent drive).  Serves as the deterministic cross-check for the
/// trajectory ensemble.
DensityMatrix master_equation_evolve(const DensityMatrix& rho0,
                                     const DecayParams& p, double t,
                                     double dt = 0.01);

}  // namespace superswap
