#include "superswap/swap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace superswap {

namespace {

Matrix vacuum_projector() {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = 1.0;  // |00><00| on the cavity pair
  return m;
}

DensityMatrix cavity_marginal(const StateVector& full) {
  return partial_trace(full.projector(), {2, 3});
}

}  // namespace

double crossover_time(const DecayParams& p) {
  if (!(p.Gamma > 0.0) || !(p.Gamma < p.gamma))
    throw std::domain_error(
        "crossover_time: needs 0 < Gamma < gamma (distinct nonzero rates)");
  return std::log((p.gamma + p.Gamma) / (p.gamma - p.Gamma)) / (2.0 * p.Gamma);
}

TrajectoryRecord apply_efficiency(const TrajectoryRecord& rec,
                                  const EfficiencyModel& eff, RngStream& rng) {
  if (!(eff.eta >= 0.0) || !(eff.eta <= 1.0))
    throw std::invalid_argument("apply_efficiency: eta outside [0, 1]");
  TrajectoryRecord out = rec;
  out.events.clear();
  for (const EmissionEvent& ev : rec.events)
    if (rng.next_uniform() < eff.eta) out.events.push_back(ev);
  return out;
}

SwapOutcome classify_and_correct(const TrajectoryRecord& rec,
                                 const DecayParams& p, double t_max) {
  if (rec.final_state.dims() != full_dims())
    throw std::invalid_argument("classify_and_correct: not a two-pair state");
  if (rec.events.size() > 2)
    throw std::invalid_argument(
        "classify_and_correct: more than two emissions from two atoms");
  for (const EmissionEvent& ev : rec.events)
    if (!(ev.time >= 0.0) || !(ev.time <= t_max))
      throw std::invalid_argument(
          "classify_and_correct: emission outside the observation window");

  if (rec.events.empty())
    return {OutcomeKind::failure_zero_photons, cavity_marginal(rec.final_state),
            std::nullopt};
  if (rec.events.size() == 2)
    return {OutcomeKind::failure_two_photons, cavity_marginal(rec.final_state),
            std::nullopt};

  const double t = rec.events.front().time;
  if (t < crossover_time(p)) {
    // Early photon: announced superradiant.  The heralded cavity state is
    // psi+; a Z on cavity 2 turns it into the canonical psi-.
    StateVector corrected = apply_local(rec.final_state, sigma_z(), 3);
    return {OutcomeKind::success_psi_plus_corrected, cavity_marginal(corrected),
            t};
  }
  return {OutcomeKind::success_psi_minus, cavity_marginal(rec.final_state), t};
}

SwapOutcome postselect(const TrajectoryRecord& rec, const DecayParams& p,
                       double t_max, const EfficiencyModel& eff,
                       RngStream& rng) {
  TrajectoryRecord thinned = apply_efficiency(rec, eff, rng);
  SwapOutcome out = classify_and_correct(thinned, p, t_max);
  if (thinned.events.empty() && !rec.events.empty())
    out.kind = OutcomeKind::discarded_inefficiency;
  return out;
}

DensityMatrix analytic_rho_c(const DecayParams& p, double T) {
  if (!(T >= 0.0)) throw std::invalid_argument("analytic_rho_c: T < 0");
  const double g = p.gamma;
  const double G = p.Gamma;
  const double k = p.kappa();
  // The correction flips psi+ into psi- for photons before the crossover,
  // so each Bell weight integrates its own emission density on one side
  // of t_c and the other's on the far side.
  const double tc = std::min(crossover_time(p), T);
  const double A = std::exp(-(g + G) * tc);
  const double B = std::exp(-(g - G) * tc);
  const double ep = std::exp(-(g + G) * T);
  const double em = std::exp(-(g - G) * T);
  const double e2 = std::exp(-2.0 * g * T);
  const double w0 = 0.25 * ((ep - e2) / k + k * (em - e2));
  const double wm = 0.25 * ((1.0 - A) + (B - em));
  const double wp = 0.25 * ((1.0 - B) + (A - ep));

  Matrix m = w0 * vacuum_projector() +
             wp * bell_psi_plus().projector().matrix() +
             wm * bell_psi_minus().projector().matrix();
  return DensityMatrix(m, cavity_dims());
}

DensityMatrix analytic_rho_c_eta(const DecayParams& p, double T,
                                 const EfficiencyModel& eff) {
  if (!(eff.eta >= 0.0) || !(eff.eta <= 1.0))
    throw std::invalid_argument("analytic_rho_c_eta: eta outside [0, 1]");
  const double g = p.gamma;
  const double G = p.Gamma;
  const double k = p.kappa();
  const double ep = std::exp(-(g + G) * T);
  const double em = std::exp(-(g - G) * T);
  const double e2 = std::exp(-2.0 * g * T);
  // Twice the probability that both photons were emitted in [0, T]; a
  // single detected one then heralds a spurious |00> component.
  const double two_photon =
      2.0 * (g * g + G * G) / (g * g - G * G) * (1.0 + e2) - (2.0 / k) * ep -
      2.0 * k * em - 4.0 * G * G / (g * g - G * G) * (1.0 - e2);

  const double eta = eff.eta;
  Matrix m = eta * analytic_rho_c(p, T).matrix() +
             0.25 * eta * (1.0 - eta) * two_photon * vacuum_projector();
  return DensityMatrix(m, cavity_dims());
}

double success_probability(const DecayParams& p, double T,
                           const EfficiencyModel& eff) {
  return analytic_rho_c_eta(p, T, eff).trace_real();
}

StateVector bell_psi_plus() {
  Vector v = Vector::Zero(4);
  v(1) = 1.0 / std::sqrt(2.0);
  v(2) = 1.0 / std::sqrt(2.0);
  return StateVector(v, cavity_dims());
}

StateVector bell_psi_minus() {
  Vector v = Vector::Zero(4);
  v(1) = -1.0 / std::sqrt(2.0);
  v(2) = 1.0 / std::sqrt(2.0);
  return StateVector(v, cavity_dims());
}

}  // namespace superswap
