#include "superswap/trajectories.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace superswap {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t a = seed;
  std::uint64_t b = stream ^ 0x6A09E667F3BCC909ull;
  state_ = splitmix64(a) ^ splitmix64(b);
}

std::uint64_t RngStream::next_u64() { return splitmix64(state_); }

double RngStream::next_uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::pair<std::optional<EmissionEvent>, StateVector> sample_next_event(
    const StateVector& state, const DecayParams& p, double t_now,
    double t_max, RngStream& rng) {
  if (state.dims() != full_dims())
    throw std::invalid_argument("sample_next_event: expected the four-qubit space");
  if (!(t_max >= t_now))
    throw std::invalid_argument("sample_next_event: window must satisfy t_now <= t_max");
  const double nrm2 = state.squared_norm();
  if (nrm2 < 1e-300)
    throw std::domain_error("sample_next_event: zero state");

  static const std::array<Matrix, 4> projectors = dicke_sector_projectors();
  const std::array<double, 4> rates = dicke_sector_rates(p);

  std::array<Vector, 4> parts;
  std::array<double, 4> pops;
  for (int k = 0; k < 4; ++k) {
    parts[k] = projectors[k] * state.amplitudes();
    pops[k] = parts[k].squaredNorm() / nrm2;
  }

  // Survival probability of the no-jump evolution: each Dicke sector
  // decays at its own rate, so S(dt) = sum_k q_k exp(-r_k dt).
  auto survival = [&](double dt) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += pops[k] * std::exp(-rates[k] * dt);
    return s;
  };
  auto no_jump = [&](double dt) {
    Vector v = Vector::Zero(state.size());
    for (int k = 0; k < 4; ++k)
      v += std::exp(-0.5 * rates[k] * dt) * parts[k];
    return v;
  };

  const double window = t_max - t_now;
  const double u = rng.next_uniform();
  if (u <= survival(window))
    return {std::nullopt, StateVector(no_jump(window), full_dims()).normalized()};

  // Invert S(dt) = u by bisection; S is strictly decreasing from 1 and
  // u > S(window), so the root lies inside (0, window).
  double lo = 0.0, hi = window;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (survival(mid) >= u ? lo : hi) = mid;
  }
  const double dt = 0.5 * (lo + hi);

  const JumpOperators j = jump_operators(p);
  const Vector at_jump = no_jump(dt);
  Vector sym = j.j_sym * at_jump;
  Vector antisym = j.j_antisym * at_jump;
  const double w_sym = sym.squaredNorm();
  const double w_antisym = antisym.squaredNorm();
  if (w_sym + w_antisym < 1e-300)
    throw std::logic_error("sample_next_event: no decaying amplitude at sampled jump");

  const bool symmetric = rng.next_uniform() < w_sym / (w_sym + w_antisym);
  EmissionEvent ev{t_now + dt,
                   symmetric ? Channel::symmetric : Channel::antisymmetric};
  Vector post = symmetric ? std::move(sym) : std::move(antisym);
  return {ev, StateVector(std::move(post), full_dims()).normalized()};
}

TrajectoryRecord run_trajectory(const StateVector& initial,
                                const DecayParams& p, double t_max,
                                RngStream& rng) {
  if (t_max < 0.0)
    throw std::invalid_argument("run_trajectory: negative window");
  StateVector s = initial.normalized();
  std::vector<EmissionEvent> events;
  double t = 0.0;
  while (true) {
    auto [ev, next] = sample_next_event(s, p, t, t_max, rng);
    s = std::move(next);
    if (!ev) break;
    events.push_back(*ev);
    t = ev->time;
    if (events.size() > 4)
      throw std::logic_error("run_trajectory: emission count exceeds the excitation budget");
  }
  return TrajectoryRecord{std::move(events), std::move(s), 1.0};
}

DensityMatrix ensemble_density(const StateVector& initial,
                               const DecayParams& p, double t,
                               std::size_t n_trajectories,
                               std::uint64_t seed, int workers) {
  if (n_trajectories == 0)
    throw std::invalid_argument("ensemble_density: need at least one trajectory");

  constexpr std::size_t kChunk = 1024;
  const std::size_t n_chunks = (n_trajectories + kChunk - 1) / kChunk;
  const Eigen::Index dim = initial.size();
  std::vector<Matrix> partials(n_chunks);

  unsigned n_workers = workers > 0
                           ? static_cast<unsigned>(workers)
                           : std::max(1u, std::thread::hardware_concurrency());
  n_workers = static_cast<unsigned>(
      std::min<std::size_t>(n_workers, n_chunks));

  std::atomic<std::size_t> next_chunk{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&]() {
    try {
      for (;;) {
        const std::size_t c = next_chunk.fetch_add(1);
        if (c >= n_chunks) return;
        Matrix acc = Matrix::Zero(dim, dim);
        const std::size_t begin = c * kChunk;
        const std::size_t end = std::min(n_trajectories, begin + kChunk);
        for (std::size_t i = begin; i < end; ++i) {
          RngStream rng(seed, i);
          TrajectoryRecord rec = run_trajectory(initial, p, t, rng);
          const Vector& v = rec.final_state.amplitudes();
          acc.noalias() += v * v.adjoint();
        }
        partials[c] = std::move(acc);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(work);
  work();
  for (std::thread& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  // Fold in chunk order: the sum is independent of which worker produced
  // which chunk.
  Matrix sum = Matrix::Zero(dim, dim);
  for (const Matrix& part : partials) sum += part;
  sum /= static_cast<double>(n_trajectories);
  return DensityMatrix(0.5 * (sum + Matrix(sum.adjoint())), initial.dims());
}

DensityMatrix master_equation_evolve(const DensityMatrix& rho0,
                                     const DecayParams& p, double t,
                                     double dt) {
  if (rho0.dims() != full_dims())
    throw std::invalid_argument("master_equation_evolve: expected the four-qubit space");
  if (!(dt > 0.0))
    throw std::invalid_argument("master_equation_evolve: step must be positive");
  if (t < 0.0)
    throw std::invalid_argument("master_equation_evolve: negative time");

  const JumpOperators j = jump_operators(p);
  const Matrix j1 = j.j_sym, j2 = j.j_antisym;
  const Matrix k = j1.adjoint() * j1 + j2.adjoint() * j2;
  auto lindblad = [&](const Matrix& r) {
    return Matrix(j1 * r * j1.adjoint() + j2 * r * j2.adjoint() -
                  0.5 * (k * r + r * k));
  };

  const int steps = std::max(1, static_cast<int>(std::ceil(t / dt - 1e-9)));
  const double h = t / steps;
  Matrix r = rho0.matrix();
  for (int s = 0; s < steps; ++s) {
    const Matrix k1 = lindblad(r);
    const Matrix k2 = lindblad(Matrix(r + 0.5 * h * k1));
    const Matrix k3 = lindblad(Matrix(r + 0.5 * h * k2));
    const Matrix k4 = lindblad(Matrix(r + h * k3));
    r += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  if (std::abs(r.trace().real() - rho0.trace_real()) > 1e-8)
    throw std::runtime_error("master_equation_evolve: trace drift, step too large");
  return DensityMatrix(0.5 * (r + Matrix(r.adjoint())), rho0.dims());
}

}  // namespace superswap
