#include "superswap/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

namespace superswap {

namespace {

constexpr std::size_t kChunk = 1024;
constexpr std::size_t kBlocks = 20;

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  if (pos != t.size())
    throw std::invalid_argument("trailing characters in number: '" + text +
                                "'");
  return v;
}

std::uint64_t parse_u64(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty() || t[0] == '-')
    throw std::invalid_argument("not a non-negative integer: '" + text + "'");
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(t, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a non-negative integer: '" + text + "'");
  }
  if (pos != t.size())
    throw std::invalid_argument("trailing characters in integer: '" + text +
                                "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t p = s.find(sep, start);
    if (p == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

/// Run body(i, partial) for i in [0, n) on a worker pool.  Trajectory i
/// lands in partial[i / kChunk], so folding the returned partials in
/// vector order reproduces the single-thread result bit for bit.
template <typename Partial>
std::vector<Partial> chunked_map(
    std::size_t n, int workers,
    const std::function<void(std::size_t, Partial&)>& body) {
  const std::size_t n_chunks = n == 0 ? 0 : (n + kChunk - 1) / kChunk;
  std::vector<Partial> partials(n_chunks);
  if (n_chunks == 0) return partials;

  const unsigned hw = std::thread::hardware_concurrency();
  std::size_t n_threads =
      workers > 0 ? std::size_t(workers) : std::size_t(hw ? hw : 1);
  n_threads = std::min(n_threads, n_chunks);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    try {
      for (;;) {
        const std::size_t c = next.fetch_add(1);
        if (c >= n_chunks) return;
        const std::size_t begin = c * kChunk;
        const std::size_t end = std::min(n, begin + kChunk);
        for (std::size_t i = begin; i < end; ++i) body(i, partials[c]);
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  if (n_threads <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(run);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return partials;
}

/// Mean and standard error of the non-NaN block estimates.
std::pair<double, double> block_sem(const std::vector<double>& estimates) {
  std::vector<double> good;
  for (double v : estimates)
    if (std::isfinite(v)) good.push_back(v);
  const std::size_t m = good.size();
  if (m < 2) return {nan_value(), nan_value()};
  double mean = 0;
  for (double v : good) mean += v;
  mean /= double(m);
  double var = 0;
  for (double v : good) var += (v - mean) * (v - mean);
  var /= double(m - 1);
  return {mean, std::sqrt(var / double(m))};
}

Matrix bloch_operator(const Eigen::Vector3d& v) {
  return v.x() * sigma_x() + v.y() * sigma_y() + v.z() * sigma_z();
}

/// Projective measurement of a Bloch axis on one subsystem of a pure
/// state: samples the outcome and collapses the state in place.
int sample_axis(StateVector& s, int subsystem, const Eigen::Vector3d& axis,
                RngStream& rng) {
  const Matrix proj_plus =
      0.5 * (Matrix::Identity(2, 2) + bloch_operator(axis));
  const StateVector plus = apply_local(s, proj_plus, subsystem);
  const StateVector minus(s.amplitudes() - plus.amplitudes(), s.dims());
  const double p_plus = plus.squared_norm();
  int outcome = rng.next_uniform() < p_plus ? 1 : -1;
  // A branch of (numerically) zero weight cannot be collapsed onto.
  if (outcome == 1 && p_plus < 1e-14) outcome = -1;
  if (outcome == -1 && minus.squared_norm() < 1e-14) outcome = 1;
  s = (outcome == 1 ? plus : minus).normalized();
  return outcome;
}

/// Same measurement on one side of a two-qubit mixed state (no collapse
/// needed: only the outcome is used).
int sample_axis_mixed(const DensityMatrix& rho, int subsystem,
                      const Eigen::Vector3d& axis, RngStream& rng) {
  const Matrix op = lift_operator(bloch_operator(axis), rho.dims(), subsystem);
  const double e = (op * rho.matrix()).trace().real();
  const double p_plus = std::clamp(0.5 * (1.0 + e), 0.0, 1.0);
  return rng.next_uniform() < p_plus ? 1 : -1;
}

bool is_success(OutcomeKind kind) {
  return kind == OutcomeKind::success_psi_minus ||
         kind == OutcomeKind::success_psi_plus_corrected;
}

using PairTally = std::array<std::array<std::uint64_t, 2>, 2>;  // [a][b]

std::uint64_t tally_count(const PairTally& t) {
  return t[0][0] + t[0][1] + t[1][0] + t[1][1];
}

/// Correlation estimate (n++ + n-- - n+- - n-+)/n; NaN on empty counts.
double tally_correlation(const PairTally& t) {
  const std::uint64_t n = tally_count(t);
  if (n == 0) return nan_value();
  return (double(t[1][1]) + double(t[0][0]) - double(t[1][0]) -
          double(t[0][1])) /
         double(n);
}

/// Conditioned-variance sum P(a) <b|a>^2 over both outcomes of one axis.
double tally_steering_term(const PairTally& t) {
  const std::uint64_t n = tally_count(t);
  if (n == 0) return nan_value();
  double s = 0;
  for (int a = 0; a < 2; ++a) {
    const std::uint64_t na = t[a][0] + t[a][1];
    if (na == 0) continue;
    const double e = (double(t[a][1]) - double(t[a][0])) / double(na);
    s += double(na) / double(n) * e * e;
  }
  return s;
}

}  // namespace

RunMode parse_run_mode(const std::string& text) {
  const std::string t = trim(text);
  if (t == "analytic") return RunMode::analytic;
  if (t == "mc" || t == "monte_carlo") return RunMode::monte_carlo;
  if (t == "both") return RunMode::both;
  throw std::invalid_argument("unknown mode '" + text +
                              "' (expected analytic, mc, or both)");
}

std::string run_mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::analytic:
      return "analytic";
    case RunMode::monte_carlo:
      return "monte_carlo";
    case RunMode::both:
      return "both";
  }
  return "both";
}

std::vector<double> parse_sweep(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw std::invalid_argument("empty value list");
  if (t.find(',') != std::string::npos) {
    std::vector<double> out;
    for (const std::string& item : split(t, ','))
      out.push_back(parse_double(item));
    return out;
  }
  const std::vector<std::string> tokens = split(t, ':');
  if (tokens.size() == 1) return {parse_double(tokens[0])};
  if (tokens.size() == 3) {  // lo:hi:step, inclusive
    const double lo = parse_double(tokens[0]);
    const double hi = parse_double(tokens[1]);
    const double step = parse_double(tokens[2]);
    if (!(step > 0)) throw std::invalid_argument("sweep step must be > 0");
    if (hi < lo) throw std::invalid_argument("sweep upper end below lower");
    const auto count = std::size_t((hi - lo) / step + 1e-9) + 1;
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back(lo + double(k) * step);
    return out;
  }
  if (tokens.size() == 4 && trim(tokens[3]) == "log") {  // lo:hi:n:log
    const double lo = parse_double(tokens[0]);
    const double hi = parse_double(tokens[1]);
    const std::uint64_t n = parse_u64(tokens[2]);
    if (!(lo > 0) || !(hi > lo))
      throw std::invalid_argument("log sweep needs 0 < lo < hi");
    if (n < 2) throw std::invalid_argument("log sweep needs >= 2 points");
    std::vector<double> out;
    out.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k)
      out.push_back(lo * std::pow(hi / lo, double(k) / double(n - 1)));
    return out;
  }
  throw std::invalid_argument("bad sweep '" + text +
                              "' (use x | a,b,c | lo:hi:step | lo:hi:n:log)");
}

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "gamma") {
    cfg.gamma = parse_double(value);
    if (!(cfg.gamma > 0)) throw std::invalid_argument("gamma must be > 0");
  } else if (key == "d") {
    cfg.d_values = parse_sweep(value);
    for (double d : cfg.d_values)
      if (!(d > 0)) throw std::invalid_argument("d must be > 0");
  } else if (key == "T") {
    cfg.t_values = parse_sweep(value);
    for (double t : cfg.t_values)
      if (!(t >= 0)) throw std::invalid_argument("T must be >= 0");
  } else if (key == "eta") {
    cfg.eta_values = parse_sweep(value);
    for (double e : cfg.eta_values)
      if (!(e >= 0) || !(e <= 1))
        throw std::invalid_argument("eta must be within [0, 1]");
  } else if (key == "trajectories") {
    cfg.trajectories = parse_u64(value);
    if (cfg.trajectories == 0)
      throw std::invalid_argument("trajectories must be >= 1");
  } else if (key == "seed") {
    cfg.seed = parse_u64(value);
  } else if (key == "mode") {
    cfg.mode = parse_run_mode(value);
  } else if (key == "workers") {
    const std::string t = trim(value);
    std::size_t pos = 0;
    int w = 0;
    try {
      w = std::stoi(t, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("workers must be an integer");
    }
    if (pos != t.size())
      throw std::invalid_argument("workers must be an integer");
    cfg.workers = w;
  } else {
    throw std::invalid_argument("unknown configuration key: " + key);
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key = value");
    try {
      apply_override(cfg, trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return cfg;
}

std::vector<double> default_distance_grid() {
  std::vector<double> out;
  out.reserve(44);
  for (int k = 0; k <= 43; ++k) out.push_back(0.02 + 0.01 * k);
  return out;
}

std::vector<double> default_time_grid() {
  std::vector<double> out;
  out.reserve(40);
  for (int k = 0; k < 40; ++k)
    out.push_back(0.1 * std::pow(100.0, double(k) / 39.0));
  return out;
}

ResultRow analytic_point(double gamma, double d, double T, double eta) {
  const DecayParams p(gamma, d);
  const DensityMatrix rho = analytic_rho_c_eta(p, T, {eta});
  ResultRow row;
  row.d_over_lambda = d;
  row.T = T;
  row.eta = eta;
  row.source = "analytic";
  row.success_prob = rho.trace_real();
  if (row.success_prob > 1e-14) {
    const WitnessResult w = evaluate_witnesses(rho.normalized());
    row.s2 = w.s2;
    row.s3 = w.s3;
    row.b_max = w.b_max;
  } else {
    row.s2 = row.s3 = row.b_max = nan_value();
  }
  return row;
}

namespace {

struct PointPartial {
  std::array<Matrix, kBlocks> acc{};
  std::array<std::uint64_t, kBlocks> succ{};
};

}  // namespace

ResultRow monte_carlo_point(const ExperimentConfig& cfg, double d, double T,
                            double eta, std::uint64_t point_index) {
  const DecayParams p(cfg.gamma, d);
  const EfficiencyModel eff{eta};
  const StateVector initial = prepare_swap_input(CouplingParams{1.0});
  const std::size_t n = cfg.trajectories;
  const std::uint64_t stream_base = point_index * std::uint64_t(n);

  const auto partials = chunked_map<PointPartial>(
      n, cfg.workers, [&](std::size_t i, PointPartial& part) {
        RngStream rng(cfg.seed, stream_base + i);
        const TrajectoryRecord rec = run_trajectory(initial, p, T, rng);
        const SwapOutcome out = postselect(rec, p, T, eff, rng);
        if (!is_success(out.kind)) return;
        const std::size_t block = i * kBlocks / n;
        if (part.acc[block].size() == 0) part.acc[block] = Matrix::Zero(4, 4);
        part.acc[block] += out.cavity_state.matrix();
        ++part.succ[block];
      });

  std::array<Matrix, kBlocks> block_acc;
  std::array<std::uint64_t, kBlocks> block_succ{};
  for (auto& m : block_acc) m = Matrix::Zero(4, 4);
  for (const PointPartial& part : partials)
    for (std::size_t b = 0; b < kBlocks; ++b) {
      if (part.acc[b].size() != 0) block_acc[b] += part.acc[b];
      block_succ[b] += part.succ[b];
    }

  Matrix total = Matrix::Zero(4, 4);
  std::uint64_t n_succ = 0;
  for (std::size_t b = 0; b < kBlocks; ++b) {
    total += block_acc[b];
    n_succ += block_succ[b];
  }

  ResultRow row;
  row.d_over_lambda = d;
  row.T = T;
  row.eta = eta;
  row.source = "monte_carlo";
  const double frac = double(n_succ) / double(n);
  row.success_prob = frac;
  row.success_prob_err = std::sqrt(frac * (1.0 - frac) / double(n));

  if (n_succ == 0) {
    row.s2 = row.s3 = row.b_max = nan_value();
    row.s2_err = row.s3_err = row.b_max_err = nan_value();
    return row;
  }

  auto witnesses_of = [](const Matrix& acc, std::uint64_t count) {
    Matrix m = acc / double(count);
    m = 0.5 * (m + Matrix(m.adjoint()));
    return evaluate_witnesses(DensityMatrix(m, cavity_dims()).normalized());
  };

  const WitnessResult w = witnesses_of(total, n_succ);
  row.s2 = w.s2;
  row.s3 = w.s3;
  row.b_max = w.b_max;

  std::vector<double> s2_blocks, s3_blocks, bmax_blocks;
  for (std::size_t b = 0; b < kBlocks; ++b) {
    if (block_succ[b] == 0) continue;
    const WitnessResult wb = witnesses_of(block_acc[b], block_succ[b]);
    s2_blocks.push_back(wb.s2);
    s3_blocks.push_back(wb.s3);
    bmax_blocks.push_back(wb.b_max);
  }
  row.s2_err = block_sem(s2_blocks).second;
  row.s3_err = block_sem(s3_blocks).second;
  row.b_max_err = block_sem(bmax_blocks).second;
  return row;
}

std::vector<ResultRow> sweep_distance(const ExperimentConfig& cfg) {
  if (cfg.t_values.size() != 1)
    throw std::invalid_argument(
        "distance sweep: configure exactly one time window");
  const double T = cfg.t_values.front();
  const std::vector<double> grid =
      cfg.d_values.size() > 1 ? cfg.d_values : default_distance_grid();
  std::vector<ResultRow> rows;
  std::uint64_t point = 0;
  for (double eta : cfg.eta_values)
    for (double d : grid) {
      if (cfg.mode != RunMode::monte_carlo)
        rows.push_back(analytic_point(cfg.gamma, d, T, eta));
      if (cfg.mode != RunMode::analytic)
        rows.push_back(monte_carlo_point(cfg, d, T, eta, point));
      ++point;
    }
  return rows;
}

std::vector<ResultRow> sweep_time(const ExperimentConfig& cfg) {
  if (cfg.d_values.size() != 1)
    throw std::invalid_argument("time sweep: configure exactly one distance");
  const double d = cfg.d_values.front();
  const std::vector<double> grid =
      cfg.t_values.size() > 1 ? cfg.t_values : default_time_grid();
  std::vector<ResultRow> rows;
  std::uint64_t point = 0;
  for (double eta : cfg.eta_values)
    for (double T : grid) {
      if (cfg.mode != RunMode::monte_carlo)
        rows.push_back(analytic_point(cfg.gamma, d, T, eta));
      if (cfg.mode != RunMode::analytic)
        rows.push_back(monte_carlo_point(cfg, d, T, eta, point));
      ++point;
    }
  return rows;
}

void write_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "d_over_lambda,T,eta,s2,s3,b_max,success_prob,source,"
         "s2_err,s3_err,b_max_err,success_prob_err\n";
  char buf[64];
  const auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  for (const ResultRow& r : rows)
    out << fmt(r.d_over_lambda) << ',' << fmt(r.T) << ',' << fmt(r.eta) << ','
        << fmt(r.s2) << ',' << fmt(r.s3) << ',' << fmt(r.b_max) << ','
        << fmt(r.success_prob) << ',' << r.source << ',' << fmt(r.s2_err)
        << ',' << fmt(r.s3_err) << ',' << fmt(r.b_max_err) << ','
        << fmt(r.success_prob_err) << '\n';
}

std::string to_json(const std::vector<ResultRow>& rows,
                    const ExperimentConfig& cfg, double wall_seconds) {
  nlohmann::json j;
  j["version"] = "0.1.0";
  j["wall_clock_seconds"] = wall_seconds;
  j["config"] = {{"gamma", cfg.gamma},
                 {"d", cfg.d_values},
                 {"T", cfg.t_values},
                 {"eta", cfg.eta_values},
                 {"trajectories", cfg.trajectories},
                 {"seed", cfg.seed},
                 {"mode", run_mode_name(cfg.mode)},
                 {"workers", cfg.workers}};
  nlohmann::json out_rows = nlohmann::json::array();
  for (const ResultRow& r : rows)
    out_rows.push_back({{"d_over_lambda", r.d_over_lambda},
                        {"T", r.T},
                        {"eta", r.eta},
                        {"s2", r.s2},
                        {"s3", r.s3},
                        {"b_max", r.b_max},
                        {"success_prob", r.success_prob},
                        {"source", r.source},
                        {"s2_err", r.s2_err},
                        {"s3_err", r.s3_err},
                        {"b_max_err", r.b_max_err},
                        {"success_prob_err", r.success_prob_err}});
  j["rows"] = out_rows;
  return j.dump(2);
}

namespace {

// Record subsets of the sorting scenarios.
enum Subset { kZero = 0, kSub = 1, kSuper = 2, kTwo = 3, kDiscarded = 4 };
constexpr std::size_t kSubsets = 5;
constexpr std::size_t kPairs = 7;

struct SettingsPair {
  Eigen::Vector3d alice;
  Eigen::Vector3d bob;
};

/// Four CHSH pairs from (a, a') x (b, b') followed by the three
/// same-axis pairs that estimate the diagonal of the correlation matrix.
std::array<SettingsPair, kPairs> delayed_choice_settings() {
  const Eigen::Vector3d x(1, 0, 0), y(0, 1, 0), z(0, 0, 1);
  const Eigen::Vector3d b = -(x + z).normalized();
  const Eigen::Vector3d bp = (z - x).normalized();
  return {{{x, b}, {x, bp}, {z, b}, {z, bp}, {x, x}, {y, y}, {z, z}}};
}

using SubsetTally = std::array<PairTally, kPairs>;

struct DelayedPartial {
  std::array<std::array<SubsetTally, kSubsets>, kBlocks> tally{};
};

void fold_tally(SubsetTally& into, const SubsetTally& from) {
  for (std::size_t k = 0; k < kPairs; ++k)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) into[k][a][b] += from[k][a][b];
}

std::uint64_t subset_records(const SubsetTally& t) {
  std::uint64_t n = 0;
  for (const PairTally& pt : t) n += tally_count(pt);
  return n;
}

/// CHSH combination of the four correlation estimates.  The herald tells
/// the "super" subset that a phase flip (Z on cavity 2) is owed; since
/// Z maps the Bob settings {b, b'} to {-b', -b}, honoring it on recorded
/// outcomes means swapping and negating the first two correlations and
/// negating the last two.
double subset_chsh(const SubsetTally& t, bool relabel_super) {
  const double e0 = tally_correlation(t[0]);
  const double e1 = tally_correlation(t[1]);
  const double e2 = tally_correlation(t[2]);
  const double e3 = tally_correlation(t[3]);
  if (relabel_super) return -e1 - e0 - e3 + e2;
  return e0 + e1 + e2 - e3;
}

/// Steering sum over the three same-axis pairs.  The phase flip of the
/// "super" subset negates Bob's x and y outcomes, which the squares make
/// irrelevant, so no relabeling is needed here.
double subset_s3(const SubsetTally& t) {
  double s = 0;
  for (std::size_t k = 4; k < kPairs; ++k) {
    const double term = tally_steering_term(t[k]);
    if (!std::isfinite(term)) return nan_value();
    s += term;
  }
  return s;
}

SubsetTally tally_sum(const std::array<SubsetTally, kSubsets>& per_subset) {
  SubsetTally total{};
  for (const SubsetTally& t : per_subset) fold_tally(total, t);
  return total;
}

}  // namespace

DelayedChoiceResult delayed_choice_experiment(const ExperimentConfig& cfg,
                                              double d, double T) {
  const DecayParams p(cfg.gamma, d);
  const EfficiencyModel eff{cfg.eta_values.front()};
  const double tstar = crossover_time(p);
  const StateVector initial = prepare_swap_input(CouplingParams{1.0});
  const auto settings = delayed_choice_settings();
  const std::size_t n = cfg.trajectories;

  const auto partials = chunked_map<DelayedPartial>(
      n, cfg.workers, [&](std::size_t i, DelayedPartial& part) {
        RngStream rng(cfg.seed, i);
        const TrajectoryRecord rec = run_trajectory(initial, p, T, rng);
        const TrajectoryRecord det = apply_efficiency(rec, eff, rng);

        int subset = kZero;
        if (det.events.empty())
          subset = rec.events.empty() ? kZero : kDiscarded;
        else if (det.events.size() == 2)
          subset = kTwo;
        else
          subset = det.events.front().time < tstar ? kSuper : kSub;

        // Both cavities are measured before anyone looks at the photon
        // record, so the raw (uncorrected) state is what gets probed.
        const std::size_t pair = i % kPairs;
        StateVector s = rec.final_state;
        const int a = sample_axis(s, 2, settings[pair].alice, rng);
        const int b = sample_axis(s, 3, settings[pair].bob, rng);
        const std::size_t block = i * kBlocks / n;
        ++part.tally[block][subset][pair][(a + 1) / 2][(b + 1) / 2];
      });

  std::array<std::array<SubsetTally, kSubsets>, kBlocks> block_tally{};
  for (const DelayedPartial& part : partials)
    for (std::size_t b = 0; b < kBlocks; ++b)
      for (std::size_t s = 0; s < kSubsets; ++s)
        fold_tally(block_tally[b][s], part.tally[b][s]);

  std::array<SubsetTally, kSubsets> total{};
  for (std::size_t b = 0; b < kBlocks; ++b)
    for (std::size_t s = 0; s < kSubsets; ++s)
      fold_tally(total[s], block_tally[b][s]);

  DelayedChoiceResult result;
  result.total_records = n;
  const char* labels[kSubsets] = {"zero", "sub", "super", "two", "discarded"};
  for (std::size_t s = 0; s < kSubsets; ++s) {
    SubsetEstimate est;
    est.label = labels[s];
    est.records = subset_records(total[s]);
    est.mass = double(est.records) / double(n);
    if (s == kDiscarded && est.records == 0) continue;
    const bool relabel = s == kSuper;
    est.chsh = subset_chsh(total[s], relabel);
    est.s3 = subset_s3(total[s]);
    std::vector<double> chsh_blocks, s3_blocks;
    for (std::size_t b = 0; b < kBlocks; ++b) {
      chsh_blocks.push_back(subset_chsh(block_tally[b][s], relabel));
      s3_blocks.push_back(subset_s3(block_tally[b][s]));
    }
    est.chsh_err = block_sem(chsh_blocks).second;
    est.s3_err = block_sem(s3_blocks).second;
    result.subsets.push_back(est);
  }

  // The unsorted ensemble: every record, outcomes exactly as taken.
  const SubsetTally all = tally_sum(total);
  result.unsorted.label = "unsorted";
  result.unsorted.records = subset_records(all);
  result.unsorted.mass = 1.0;
  result.unsorted.chsh = subset_chsh(all, false);
  result.unsorted.s3 = subset_s3(all);
  std::vector<double> chsh_blocks, s3_blocks;
  std::array<std::vector<double>, 3> diag_blocks;
  for (std::size_t b = 0; b < kBlocks; ++b) {
    const SubsetTally bt = tally_sum(block_tally[b]);
    chsh_blocks.push_back(subset_chsh(bt, false));
    s3_blocks.push_back(subset_s3(bt));
    for (int axis = 0; axis < 3; ++axis)
      diag_blocks[axis].push_back(tally_correlation(bt[4 + axis]));
  }
  result.unsorted.chsh_err = block_sem(chsh_blocks).second;
  result.unsorted.s3_err = block_sem(s3_blocks).second;
  for (int axis = 0; axis < 3; ++axis) {
    result.unsorted_t_diag[axis] = tally_correlation(all[4 + axis]);
    result.unsorted_t_diag_err[axis] = block_sem(diag_blocks[axis]).second;
  }
  return result;
}

namespace {

struct ThreeTimePartial {
  // [block][group][axis][a][b]
  std::array<std::array<std::array<PairTally, 3>, 4>, kBlocks> tally{};
  double herald_min = std::numeric_limits<double>::infinity();
  double herald_max = -std::numeric_limits<double>::infinity();
};

}  // namespace

ThreeTimeResult steering_into_past_experiment(const ExperimentConfig& cfg,
                                              double d, double T) {
  const DecayParams p(cfg.gamma, d);
  const EfficiencyModel eff{cfg.eta_values.front()};
  const StateVector initial = prepare_swap_input(CouplingParams{1.0});
  const std::array<Eigen::Vector3d, 3> axes = {Eigen::Vector3d(1, 0, 0),
                                               Eigen::Vector3d(0, 1, 0),
                                               Eigen::Vector3d(0, 0, 1)};
  const std::size_t n = cfg.trajectories;
  enum Group { gZero = 0, gSingle = 1, gTwo = 2, gDiscarded = 3 };

  const auto partials = chunked_map<ThreeTimePartial>(
      n, cfg.workers, [&](std::size_t i, ThreeTimePartial& part) {
        const std::size_t axis = i % 3;
        RngStream rng(cfg.seed, i);

        // Alice's cavity is measured before the decay window opens.
        StateVector s = initial;
        const int a = sample_axis(s, 2, axes[axis], rng);

        const TrajectoryRecord rec = run_trajectory(s, p, T, rng);
        const SwapOutcome out = postselect(rec, p, T, eff, rng);
        int group = gZero;
        switch (out.kind) {
          case OutcomeKind::failure_zero_photons:
            group = gZero;
            break;
          case OutcomeKind::failure_two_photons:
            group = gTwo;
            break;
          case OutcomeKind::discarded_inefficiency:
            group = gDiscarded;
            break;
          default:
            group = gSingle;
            break;
        }

        if (group == gSingle && out.emission_time) {
          part.herald_min = std::min(part.herald_min, *out.emission_time);
          part.herald_max = std::max(part.herald_max, *out.emission_time);
        }

        // Bob measures after the record is classified, so his qubit
        // carries the announced phase correction where one is owed.
        const int b = sample_axis_mixed(out.cavity_state, 1, axes[axis], rng);
        const std::size_t block = i * kBlocks / n;
        ++part.tally[block][group][axis][(a + 1) / 2][(b + 1) / 2];
      });

  std::array<std::array<std::array<PairTally, 3>, 4>, kBlocks> block_tally{};
  double herald_min = std::numeric_limits<double>::infinity();
  double herald_max = -std::numeric_limits<double>::infinity();
  for (const ThreeTimePartial& part : partials) {
    herald_min = std::min(herald_min, part.herald_min);
    herald_max = std::max(herald_max, part.herald_max);
    for (std::size_t b = 0; b < kBlocks; ++b)
      for (int g = 0; g < 4; ++g)
        for (int ax = 0; ax < 3; ++ax)
          for (int ai = 0; ai < 2; ++ai)
            for (int bi = 0; bi < 2; ++bi)
              block_tally[b][g][ax][ai][bi] += part.tally[b][g][ax][ai][bi];
  }

  auto s3_of = [](const std::array<PairTally, 3>& t) {
    double s = 0;
    for (const PairTally& pt : t) {
      const double term = tally_steering_term(pt);
      if (!std::isfinite(term)) return nan_value();
      s += term;
    }
    return s;
  };

  ThreeTimeResult result;
  result.total_records = n;
  result.alice_time = 0.0;
  result.bob_time = T;
  const bool any_herald = herald_min <= herald_max;
  result.herald_time_min = any_herald ? herald_min : nan_value();
  result.herald_time_max = any_herald ? herald_max : nan_value();
  const char* labels[4] = {"zero", "single", "two", "discarded"};
  for (int g = 0; g < 4; ++g) {
    std::array<PairTally, 3> total{};
    for (std::size_t b = 0; b < kBlocks; ++b)
      for (int ax = 0; ax < 3; ++ax)
        for (int ai = 0; ai < 2; ++ai)
          for (int bi = 0; bi < 2; ++bi)
            total[ax][ai][bi] += block_tally[b][g][ax][ai][bi];

    GroupEstimate est;
    est.label = labels[g];
    for (const PairTally& pt : total) est.records += tally_count(pt);
    est.mass = double(est.records) / double(n);
    if (g == gDiscarded && est.records == 0) continue;
    est.s3 = s3_of(total);
    std::vector<double> s3_blocks;
    for (std::size_t b = 0; b < kBlocks; ++b)
      s3_blocks.push_back(s3_of(block_tally[b][g]));
    est.s3_err = block_sem(s3_blocks).second;
    result.groups.push_back(est);
  }
  return result;
}

bool ValidationReport::all_passed() const {
  for (const ValidationCheck& c : checks)
    if (!c.passed) return false;
  return true;
}

ValidationReport validate(int workers) {
  ValidationReport report;
  const auto add = [&report](const std::string& name, double value,
                             double bound) {
    report.checks.push_back({name, value <= bound, value, bound});
  };

  const DecayParams p(1.0, 0.1);
  const StateVector input = prepare_swap_input(CouplingParams{1.0});

  {  // Trajectory ensemble against deterministic integration.
    const DensityMatrix mc = ensemble_density(input, p, 1.0, 20000, 777,
                                              workers);
    const DensityMatrix me =
        master_equation_evolve(input.projector(), p, 1.0, 0.002);
    add("trajectories-vs-master-equation", trace_distance(mc, me), 0.02);
  }

  {  // Conditioned sample against the closed form.
    Matrix acc = Matrix::Zero(4, 4);
    std::uint64_t n_succ = 0;
    const std::size_t n = 20000;
    for (std::size_t i = 0; i < n; ++i) {
      RngStream rng(778, i);
      const TrajectoryRecord rec = run_trajectory(input, p, 5.0, rng);
      const SwapOutcome out = postselect(rec, p, 5.0, {1.0}, rng);
      if (!is_success(out.kind)) continue;
      acc += out.cavity_state.matrix();
      ++n_succ;
    }
    Matrix m = acc / double(n_succ);
    m = 0.5 * (m + Matrix(m.adjoint()));
    const double td = trace_distance(DensityMatrix(m, cavity_dims()),
                                     analytic_rho_c(p, 5.0).normalized());
    add("conditioned-sample-vs-closed-form", td, 0.03);
  }

  {  // Spectral CHSH maximum against alternating ascent.
    std::mt19937_64 gen(99);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst = 0;
    for (int k = 0; k < 25; ++k) {
      Matrix g(4, 4);
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) g(r, c) = Complex(gauss(gen), gauss(gen));
      Matrix rho = g * g.adjoint();
      rho /= rho.trace().real();
      const DensityMatrix state(rho, cavity_dims());
      worst = std::max(
          worst, std::abs(chsh_max(state).value - chsh_max_numeric(state)));
    }
    add("chsh-spectral-vs-ascent", worst, 1e-6);
  }

  {  // Witness thresholds of the depolarized singlet.
    const auto werner = [](double w) {
      const Matrix m = w * bell_psi_minus().projector().matrix() +
                       (1.0 - w) * 0.25 * Matrix::Identity(4, 4);
      return DensityMatrix(m, cavity_dims());
    };
    auto bisect = [](const std::function<double(double)>& f, double lo,
                     double hi) {
      for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0 ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    };
    const double p_steer = bisect(
        [&](double w) { return steering_parameter(werner(w), 3) - 1.0; }, 0.3,
        0.9);
    const double p_chsh = bisect(
        [&](double w) { return chsh_max(werner(w)).value - 2.0; }, 0.5, 0.9);
    add("steering-threshold-vs-1/sqrt3",
        std::abs(p_steer - 1.0 / std::sqrt(3.0)), 1e-6);
    add("chsh-threshold-vs-1/sqrt2", std::abs(p_chsh - 1.0 / std::sqrt(2.0)),
        1e-6);
  }

  {  // Crossover identity exp(-(g±G)t*) = kappa^((g±G)/(2G)).
    double worst = 0;
    for (double d = 0.05; d < 0.46; d += 0.05) {
      const DecayParams q(1.0, d);
      const double ts = crossover_time(q);
      const double k = q.kappa();
      worst = std::max(
          worst, std::abs(std::exp(-(q.gamma + q.Gamma) * ts) -
                          std::pow(k, (q.gamma + q.Gamma) /
                                          (2.0 * q.Gamma))));
      worst = std::max(
          worst, std::abs(std::exp(-(q.gamma - q.Gamma) * ts) -
                          std::pow(k, (q.gamma - q.Gamma) /
                                          (2.0 * q.Gamma))));
    }
    add("crossover-identity", worst, 1e-12);
  }

  return report;
}

}  // namespace superswap
