// Copyright 2026 The mclt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MCLT_CORE_KERNELS_HPP
#define MCLT_CORE_KERNELS_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mclt/empirical_measure.hpp"
#include "mclt/error.hpp"
#include "mclt/rng.hpp"
#include "mclt/stats.hpp"

namespace mclt {

template <class State>
struct MetricSpace {
  std::function<double(const State&, const State&)> dist;
  std::string description;
};

/// One-step transition law, available only through sampling. Samplers must
/// not mutate shared state: one Kernel is read concurrently by all workers.
template <class State>
class Kernel {
 public:
  using Sampler = std::function<State(const State&, Rng&)>;

  Kernel(Sampler sampler, MetricSpace<State> space)
      : sampler_(std::move(sampler)), space_(std::move(space)) {}

  State sample(const State& x, Rng& rng) const { return sampler_(x, rng); }
  const MetricSpace<State>& space() const noexcept { return space_; }
  double dist(const State& x, const State& y) const { return space_.dist(x, y); }

 private:
  Sampler sampler_;
  MetricSpace<State> space_;
};

template <class State>
struct Trajectory {
  std::vector<State> states;  // states[0] is the initial state
  std::uint64_t seed = 0;

  std::size_t steps() const noexcept { return states.empty() ? 0 : states.size() - 1; }
};

template <class State>
using LyapunovFn = std::function<double(const State&)>;

template <class State>
using InitialSampler = std::function<State(Rng&)>;

/// Kernel Pi(x, .) = delta_x.
template <class State>
Kernel<State> identity_kernel(MetricSpace<State> space) {
  return Kernel<State>([](const State& x, Rng&) { return x; }, std::move(space));
}

inline MetricSpace<double> real_line() {
  return {[](const double& a, const double& b) { return std::abs(a - b); }, "real line, |x - y|"};
}

/// Finite state space {0, ..., n-1} with an exact row-stochastic matrix.
/// The matrix view is what oracle computations use; kernel() is the sampler
/// seen by the generic machinery.
class FiniteKernel {
 public:
  using Matrix = std::vector<std::vector<double>>;

  /// Discrete metric (distance 1 between distinct states).
  explicit FiniteKernel(Matrix transition);
  FiniteKernel(Matrix transition, Matrix distance);

  std::size_t size() const noexcept { return transition_.size(); }
  const Matrix& matrix() const noexcept { return transition_; }
  const Matrix& distance() const noexcept { return distance_; }
  double probability(int from, int to) const { return transition_.at(from).at(to); }

  MetricSpace<int> space() const;
  Kernel<int> kernel() const;

 private:
  Matrix transition_;
  Matrix distance_;
};

/// x -> x + 1 mod n.
FiniteKernel cycle_kernel(std::size_t n);

/// Two states with P(0 -> 1) = p and P(1 -> 0) = q.
FiniteKernel two_state_kernel(double p, double q);

/// Solves pi P = pi, sum pi = 1 by Gaussian elimination. The chain must
/// have a unique invariant law.
std::vector<double> stationary_distribution(const FiniteKernel& kernel);

template <class State>
Trajectory<State> simulate_chain(const Kernel<State>& kernel, const State& init, std::size_t n,
                                 std::uint64_t seed) {
  Trajectory<State> traj;
  traj.seed = seed;
  traj.states.reserve(n + 1);
  traj.states.push_back(init);
  Rng rng(seed);
  for (std::size_t k = 0; k < n; ++k) traj.states.push_back(kernel.sample(traj.states.back(), rng));
  return traj;
}

/// Initial state drawn from the same stream, before the first transition.
template <class State>
Trajectory<State> simulate_chain(const Kernel<State>& kernel, const InitialSampler<State>& init,
                                 std::size_t n, std::uint64_t seed) {
  Trajectory<State> traj;
  traj.seed = seed;
  traj.states.reserve(n + 1);
  Rng rng(seed);
  traj.states.push_back(init(rng));
  for (std::size_t k = 0; k < n; ++k) traj.states.push_back(kernel.sample(traj.states.back(), rng));
  return traj;
}

/// Runs n steps from x on the given stream and returns the endpoint.
template <class State>
State advance(const Kernel<State>& kernel, State x, std::size_t n, Rng& rng) {
  for (std::size_t k = 0; k < n; ++k) x = kernel.sample(x, rng);
  return x;
}

/// One n-step draw per atom of mu, weights kept. Monte-Carlo stand-in for P^n mu.
template <class State>
EmpiricalMeasure<State> estimate_pushforward(const Kernel<State>& kernel,
                                             const EmpiricalMeasure<State>& mu, std::size_t n,
                                             std::uint64_t seed, int workers = 1) {
  require(!mu.empty(), "estimate_pushforward: measure must be nonempty");
  if (n == 0) return mu;
  const auto& atoms = mu.atoms();
  std::vector<typename EmpiricalMeasure<State>::Atom> out(atoms.size(), atoms.front());
  parallel_for(atoms.size(), workers, [&](std::size_t r) {
    Rng rng(derive_seed(seed, stream::replica, r));
    out[r] = {advance(kernel, atoms[r].point, n, rng), atoms[r].weight};
  });
  return EmpiricalMeasure<State>(std::move(out));
}

/// Monte-Carlo estimate of U^n f(x) over `replicas` independent n-step runs.
template <class State, class Fn>
Estimate estimate_dual(const Kernel<State>& kernel, Fn&& f, const State& x, std::size_t n,
                       std::size_t replicas, std::uint64_t seed, int workers = 1) {
  require(replicas >= 2, "estimate_dual: replicas must be >= 2");
  std::vector<double> values(replicas);
  parallel_for(replicas, workers, [&](std::size_t r) {
    Rng rng(derive_seed(seed, stream::replica, r));
    values[r] = f(advance(kernel, x, n, rng));
  });
  return summarize(values);
}

struct DriftPoint {
  Estimate estimate;  // of U V(x), or U V^2(x)
  double lyapunov = 0.0;
  double bound = 0.0;  // a V(x) + b, or (a V(x) + b)^2
  bool pass = false;
};

struct DriftReport {
  std::vector<DriftPoint> points;
  bool all_pass = true;
  std::size_t failures = 0;
};

/// Checks U V <= a V + b (or U V^2 <= (a V + b)^2 when `squared`) at each
/// grid state, accepting at estimate <= bound + 3 stderr.
template <class State>
DriftReport check_drift(const Kernel<State>& kernel, const LyapunovFn<State>& lyapunov,
                        const std::vector<State>& grid, double a, double b, bool squared,
                        std::size_t replicas, std::uint64_t seed, int workers = 1) {
  require(a > 0.0 && a < 1.0, "check_drift: a must lie in (0, 1)");
  require(b >= 0.0, "check_drift: b must be nonnegative");
  require(!grid.empty(), "check_drift: grid must be nonempty");
  DriftReport report;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    DriftPoint point;
    point.lyapunov = lyapunov(grid[g]);
    const double linear = a * point.lyapunov + b;
    point.bound = squared ? linear * linear : linear;
    point.estimate = estimate_dual(
        kernel,
        [&](const State& y) {
          const double v = lyapunov(y);
          return squared ? v * v : v;
        },
        grid[g], 1, replicas, derive_seed(seed, stream::grid, g), workers);
    point.pass = point.estimate.mean <= point.bound + 3.0 * point.estimate.stderr_;
    if (!point.pass) {
      report.all_pass = false;
      ++report.failures;
    }
    report.points.push_back(point);
  }
  return report;
}

}  // namespace mclt

#endif  // MCLT_CORE_KERNELS_HPP
