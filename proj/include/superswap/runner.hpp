#pragma once

// Experiment drivers: parameter sweeps over the closed form and the
// trajectory sampler, the two record-sorting scenarios, result export,
// and self-validation.  All Monte Carlo paths assign random streams by
// trajectory index and fold partial sums in fixed chunk order, so every
// result is bitwise independent of the worker count.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "superswap/swap.hpp"
#include "superswap/witnesses.hpp"

namespace superswap {

enum class RunMode { analytic, monte_carlo, both };

/// Accepts "analytic", "mc", "monte_carlo", "both".
RunMode parse_run_mode(const std::string& text);
std::string run_mode_name(RunMode mode);

/// Value grid: "0.3" | "a,b,c" | "lo:hi:step" | "lo:hi:n:log".
std::vector<double> parse_sweep(const std::string& text);

struct ExperimentConfig {
  double gamma = 1.0;
  std::vector<double> d_values = {0.1};
  std::vector<double> t_values = {5.0};
  std::vector<double> eta_values = {1.0};
  std::size_t trajectories = 100000;
  std::uint64_t seed = 20240915;
  RunMode mode = RunMode::both;
  int workers = 0;  // <= 0: all cores
};

/// Flat "key = value" file; '#' starts a comment; unknown keys are
/// errors.  Keys: gamma, d, T, eta, trajectories, seed, mode, workers.
ExperimentConfig load_config(const std::string& path);

/// Set one config key from its textual value (same keys as the file).
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

std::vector<double> default_distance_grid();  // 0.02 .. 0.45, step 0.01
std::vector<double> default_time_grid();      // 40 log points in [0.1, 10]

struct ResultRow {
  double d_over_lambda = 0;
  double T = 0;
  double eta = 1;
  double s2 = 0;
  double s3 = 0;
  double b_max = 0;
  double success_prob = 0;
  std::string source;  // "analytic" | "monte_carlo"
  double s2_err = 0;   // standard errors; zero for analytic rows
  double s3_err = 0;
  double b_max_err = 0;
  double success_prob_err = 0;
};

/// Witnesses of the conditioned closed form at one operating point.
ResultRow analytic_point(double gamma, double d, double T, double eta);

/// Trajectory estimate at one operating point.  Standard errors come
/// from 20 contiguous trajectory blocks; `point_index` decorrelates the
/// random streams of different sweep points.
ResultRow monte_carlo_point(const ExperimentConfig& cfg, double d, double T,
                            double eta, std::uint64_t point_index = 0);

/// Rows over the distance grid (config d list if it has >1 entry, the
/// default grid otherwise) at the single configured time, for every
/// configured efficiency.  Mode picks analytic rows, trajectory rows, or
/// both per point.
std::vector<ResultRow> sweep_distance(const ExperimentConfig& cfg);

/// Same over the time grid at the single configured distance.
std::vector<ResultRow> sweep_time(const ExperimentConfig& cfg);

/// Header: d_over_lambda,T,eta,s2,s3,b_max,success_prob,source,
/// s2_err,s3_err,b_max_err,success_prob_err.
void write_csv(const std::vector<ResultRow>& rows, std::ostream& out);

/// Rows plus run metadata as a JSON document.
std::string to_json(const std::vector<ResultRow>& rows,
                    const ExperimentConfig& cfg, double wall_seconds);

struct SubsetEstimate {
  std::string label;
  std::uint64_t records = 0;
  double mass = 0;
  double chsh = 0;  // relabeled combination for the "super" subset
  double chsh_err = 0;
  double s3 = 0;
  double s3_err = 0;
};

struct DelayedChoiceResult {
  std::vector<SubsetEstimate> subsets;  // zero, sub, super, two[, discarded]
  SubsetEstimate unsorted;              // every record, no sorting applied
  std::array<double, 3> unsorted_t_diag{};
  std::array<double, 3> unsorted_t_diag_err{};
  std::uint64_t total_records = 0;
};

/// Both cavities are measured with cycling fixed settings while the
/// photon record is still unexamined; afterwards the herald sorts the
/// already-recorded outcomes into subsets.  The "super" subset gets the
/// announced phase flip as an outcome relabeling.
DelayedChoiceResult delayed_choice_experiment(const ExperimentConfig& cfg,
                                              double d, double T);

struct GroupEstimate {
  std::string label;
  std::uint64_t records = 0;
  double mass = 0;
  double s3 = 0;
  double s3_err = 0;
};

struct ThreeTimeResult {
  std::vector<GroupEstimate> groups;  // zero, single, two[, discarded]
  std::uint64_t total_records = 0;
  // Timing record: the first measurement closes as the window opens, every
  // herald lands strictly inside the window, and the partner reads out at
  // the close.  Herald extremes are NaN when nothing was heralded.
  double alice_time = 0;
  double herald_time_min = 0;
  double herald_time_max = 0;
  double bob_time = 0;
};

/// Alice measures cavity 1 along a cycling axis before the decay window
/// even opens; Bob measures cavity 2 after the herald (including its
/// phase correction).  The herald then groups Alice's long-fixed
/// outcomes by detected-photon count.
ThreeTimeResult steering_into_past_experiment(const ExperimentConfig& cfg,
                                              double d, double T);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double value = 0;  // observed figure of merit
  double bound = 0;  // limit it must stay under
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_passed() const;
};

/// Cross-checks of the stack against its independent counterparts:
/// trajectories vs master equation, sampled vs closed-form conditioned
/// state, spectral vs iterative CHSH maximum, witness thresholds of the
/// depolarized singlet, and the crossover-time identity.
ValidationReport validate(int workers = 0);

}  // namespace superswap
