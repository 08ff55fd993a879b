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

#ifndef MCLT_COUPLING_HPP
#define MCLT_COUPLING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mclt/core_kernels.hpp"
#include "mclt/error.hpp"
#include "mclt/rng.hpp"
#include "mclt/stats.hpp"

namespace mclt {

/// One step of the augmented coupling: the pair and the flag (true when the
/// contractive part Q fired).
template <class State>
struct CoupledOutcome {
  State u;
  State v;
  bool fired = false;
};

/// Substochastic kernel Q on pairs, dominated by the marginals of Pi.
template <class State>
struct SubKernel {
  using PairSampler = std::function<std::pair<State, State>(const State&, const State&, Rng&)>;
  using PointSampler = std::function<State(const State&, const State&, Rng&)>;

  std::function<double(const State&, const State&)> mass;  // Q(x, y, X^2)
  PairSampler sample_given_fire;                           // draw from Q(x, y, .) / mass
  // Draws from (Pi(x, .) - Q(x, y, . x X)) / (1 - mass) and
  // (Pi(y, .) - Q(x, y, X x .)) / (1 - mass); needed by the product residual.
  PointSampler leftover_first;
  PointSampler leftover_second;
};

/// Q = 0: every step goes to the residual, which is then the independent
/// product of Pi(x, .) and Pi(y, .).
template <class State>
SubKernel<State> zero_subkernel(const Kernel<State>& pi) {
  SubKernel<State> q;
  q.mass = [](const State&, const State&) { return 0.0; };
  q.sample_given_fire = [](const State&, const State&, Rng&) -> std::pair<State, State> {
    throw Error(ErrorCode::precondition, "zero sub-kernel never fires");
  };
  q.leftover_first = [pi](const State& x, const State&, Rng& rng) { return pi.sample(x, rng); };
  q.leftover_second = [pi](const State&, const State& y, Rng& rng) { return pi.sample(y, rng); };
  return q;
}

enum class ResidualMode { independent, user_supplied };

template <class State>
using ResidualSampler = std::function<std::pair<State, State>(const State&, const State&, Rng&)>;

/// Draw from R(x, y, .) / (1 - q) for the product residual
///
///   R(x, y, A x B) = (Pi(x, A) - Q(x, y, A x X)) (Pi(y, B) - Q(x, y, X x B)) / (1 - q),
///
/// i.e. two independent draws from the normalized leftover marginals.
template <class State>
std::pair<State, State> residual_step(const SubKernel<State>& q, const State& x, const State& y,
                                      Rng& rng) {
  require(q.mass(x, y) < 1.0, "residual_step: residual is zero when Q has full mass");
  require(static_cast<bool>(q.leftover_first) && static_cast<bool>(q.leftover_second),
          "residual_step: sub-kernel does not provide leftover marginal samplers");
  State u = q.leftover_first(x, y, rng);
  State v = q.leftover_second(x, y, rng);
  return {std::move(u), std::move(v)};
}

/// Markovian coupling C = Q + R of Pi, sampled with the Q/R flag.
template <class State>
class CoupledKernel {
 public:
  using JointStep = std::function<CoupledOutcome<State>(const State&, const State&, Rng&)>;
  using MassFn = std::function<double(const State&, const State&)>;

  CoupledKernel(Kernel<State> pi, SubKernel<State> q, ResidualMode mode,
                ResidualSampler<State> user_residual = {})
      : pi_(std::move(pi)), q_(std::move(q)), mode_(mode), user_residual_(std::move(user_residual)) {
    require(static_cast<bool>(q_->mass) && static_cast<bool>(q_->sample_given_fire),
            "coupled kernel: sub-kernel needs mass and sample_given_fire");
    if (mode_ == ResidualMode::user_supplied) {
      require(static_cast<bool>(user_residual_), "coupled kernel: user residual sampler missing");
    } else {
      require(static_cast<bool>(q_->leftover_first) && static_cast<bool>(q_->leftover_second),
              "coupled kernel: independent residual needs leftover marginal samplers");
    }
  }

  /// Coupling given directly as a joint sampler that reports the Q-event
  /// itself; the residual is whatever the sampler does off that event.
  static CoupledKernel joint(Kernel<State> pi, JointStep step, MassFn mass = {}) {
    return CoupledKernel(std::move(pi), std::move(step), std::move(mass));
  }

  const Kernel<State>& pi() const noexcept { return pi_; }
  ResidualMode residual_mode() const noexcept { return mode_; }
  const SubKernel<State>* sub_kernel() const noexcept { return q_ ? &*q_ : nullptr; }

  bool has_exact_mass() const noexcept { return q_.has_value() || static_cast<bool>(joint_mass_); }
  double mass(const State& x, const State& y) const {
    require(has_exact_mass(), "coupled kernel: no closed-form Q mass available");
    return q_ ? q_->mass(x, y) : joint_mass_(x, y);
  }

  CoupledOutcome<State> step(const State& x, const State& y, Rng& rng) const {
    if (joint_) return joint_(x, y, rng);
    const double m = q_->mass(x, y);
    if (m >= 1.0 || (m > 0.0 && rng.uniform() < m)) {
      auto [u, v] = q_->sample_given_fire(x, y, rng);
      return {std::move(u), std::move(v), true};
    }
    auto [u, v] = mode_ == ResidualMode::independent ? residual_step(*q_, x, y, rng)
                                                     : user_residual_(x, y, rng);
    return {std::move(u), std::move(v), false};
  }

 private:
  CoupledKernel(Kernel<State> pi, JointStep step, MassFn mass)
      : pi_(std::move(pi)),
        mode_(ResidualMode::user_supplied),
        joint_(std::move(step)),
        joint_mass_(std::move(mass)) {}

  Kernel<State> pi_;
  std::optional<SubKernel<State>> q_;
  ResidualMode mode_;
  ResidualSampler<State> user_residual_;
  JointStep joint_;
  MassFn joint_mass_;
};

template <class State>
CoupledOutcome<State> coupled_step(const CoupledKernel<State>& ck, const State& x, const State& y,
                                   Rng& rng) {
  return ck.step(x, y, rng);
}

template <class State>
struct CoupledTrajectory {
  std::vector<std::pair<State, State>> pairs;
  std::vector<std::uint8_t> flags;  // flags[0] belongs to the initial pair and is always 0
  std::uint64_t seed = 0;

  std::size_t steps() const noexcept { return pairs.empty() ? 0 : pairs.size() - 1; }
};

template <class State>
CoupledTrajectory<State> simulate_coupled(const CoupledKernel<State>& ck, const State& x0,
                                          const State& y0, std::size_t n, std::uint64_t seed) {
  CoupledTrajectory<State> traj;
  traj.seed = seed;
  traj.pairs.reserve(n + 1);
  traj.flags.reserve(n + 1);
  traj.pairs.emplace_back(x0, y0);
  traj.flags.push_back(0);
  Rng rng(seed);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& [x, y] = traj.pairs.back();
    auto out = ck.step(x, y, rng);
    traj.pairs.emplace_back(std::move(out.u), std::move(out.v));
    traj.flags.push_back(out.fired ? 1 : 0);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Hitting and absorption times on a finite horizon.

enum class HitVariant {
  rho,    // first n >= 1 in A
  rho_m,  // first n >= m in A
  tau,    // first n >= 1 after which every observed state is in A
};

/// `value` is the time when observed. A censored result means no qualifying
/// time exists up to the horizon; `value` is then the horizon and only says
/// the true time exceeds it (for tau: the path left A at or before it).
struct HittingTime {
  std::size_t value = 0;
  bool censored = false;
};

/// Generic form over an index predicate in_set(k), k = 0..horizon.
template <class Pred>
HittingTime hitting_time(std::size_t horizon, Pred&& in_set, HitVariant variant, std::size_t m = 1) {
  if (variant == HitVariant::tau) {
    if (horizon == 0 || !in_set(horizon)) return {horizon, true};
    std::size_t n = horizon;
    while (n > 1 && in_set(n - 1)) --n;
    return {n, false};
  }
  const std::size_t start = variant == HitVariant::rho ? 1 : m;
  require(start >= 1, "hitting_time: m must be >= 1");
  for (std::size_t k = start; k <= horizon; ++k) {
    if (in_set(k)) return {k, false};
  }
  return {horizon, true};
}

template <class State, class Pred>
HittingTime hitting_time(const Trajectory<State>& traj, Pred&& in_set, HitVariant variant,
                         std::size_t m = 1) {
  return hitting_time(
      traj.steps(), [&](std::size_t k) { return in_set(traj.states[k]); }, variant, m);
}

/// Predicate over (u, v, flag).
template <class State, class Pred>
HittingTime hitting_time(const CoupledTrajectory<State>& traj, Pred&& in_set, HitVariant variant,
                         std::size_t m = 1) {
  return hitting_time(
      traj.steps(),
      [&](std::size_t k) { return in_set(traj.pairs[k].first, traj.pairs[k].second, traj.flags[k] != 0); },
      variant, m);
}

struct ExpMoment {
  Estimate estimate;  // of E(Lambda^-rho) over uncensored samples
  std::size_t censored = 0;
  std::size_t total = 0;
  bool lower_bound = false;  // any censoring makes the estimate a lower bound
};

/// Estimates E(Lambda^{-rho}) from stopping-time samples.
ExpMoment exp_moment(std::span<const HittingTime> samples, double base);

// ---------------------------------------------------------------------------
// Geometric decay fits.

struct GeometricFit {
  double rate = 0.0;       // q-hat
  double amplitude = 0.0;  // c-fit, value at step 0 of the fitted curve
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Least squares of log(value) on step over the given points. Empty when
/// fewer than three points are supplied.
std::optional<GeometricFit> fit_geometric(std::span<const double> steps, std::span<const double> values);

struct DecayCurve {
  std::vector<Estimate> steps;  // E|g(phi1_n) - g(phi2_n)|, n = 0..n_max
  std::vector<std::uint8_t> usable;
  std::optional<GeometricFit> fit;
};

/// Monte-Carlo curve of E|g(phi1_n) - g(phi2_n)| under the coupling, with a
/// geometric fit over the steps where the mean exceeds 10 standard errors.
template <class State, class Fn>
DecayCurve decay_curve(const CoupledKernel<State>& ck, Fn&& g, const State& x0, const State& y0,
                       std::size_t n_max, std::size_t replicas, std::uint64_t seed, int workers = 1) {
  require(replicas >= 100, "decay_curve: replicas must be >= 100");
  std::vector<double> diffs(replicas * (n_max + 1));
  parallel_for(replicas, workers, [&](std::size_t r) {
    Rng rng(derive_seed(seed, stream::coupling, r));
    State x = x0, y = y0;
    diffs[r * (n_max + 1)] = std::abs(g(x) - g(y));
    for (std::size_t k = 1; k <= n_max; ++k) {
      auto out = ck.step(x, y, rng);
      x = std::move(out.u);
      y = std::move(out.v);
      diffs[r * (n_max + 1) + k] = std::abs(g(x) - g(y));
    }
  });
  DecayCurve curve;
  std::vector<double> column(replicas), xs, ys;
  for (std::size_t k = 0; k <= n_max; ++k) {
    for (std::size_t r = 0; r < replicas; ++r) column[r] = diffs[r * (n_max + 1) + k];
    const Estimate e = summarize(column);
    const bool usable = e.mean > 0.0 && e.mean > 10.0 * e.stderr_;
    curve.steps.push_back(e);
    curve.usable.push_back(usable ? 1 : 0);
    if (usable) {
      xs.push_back(static_cast<double>(k));
      ys.push_back(e.mean);
    }
  }
  curve.fit = fit_geometric(xs, ys);
  return curve;
}

// ---------------------------------------------------------------------------
// Conditions on the coupling.

template <class State>
struct CouplingConditionParams {
  std::function<bool(const State&, const State&)> in_f;  // the set F of pairs
  double delta = 0.5;                                     // contraction factor
  double beta = 1.0;                                      // exponent in the mass deficit bound
  double c_beta = 1.0;
  LyapunovFn<State> lyapunov;
  double a = 0.5;  // drift constants; the start set for the hitting bound is
  double b = 1.0;  // V(x) + V(y) < 4 b / (1 - a)
  double big_gamma = 1.0;  // K = {(x, y) in F : V(x) + V(y) < big_gamma}
  double gamma = 0.9;      // base of the exponential moment of rho_K
  double c_gamma = 100.0;  // declared bound on that moment
  std::size_t replicas = 2000;
  std::size_t hitting_replicas = 500;
  std::size_t horizon = 200;
};

struct PairConditionCheck {
  bool in_f = false;
  double distance = 0.0;
  // contraction under the normalized Q
  Estimate contraction;
  double contraction_bound = 0.0;
  bool contraction_pass = true;
  std::size_t fired = 0;
  std::size_t support_violations = 0;
  // Q(x, y, U(delta * rho(x, y)))
  Estimate near_mass;
  // 1 - Q(x, y, X^2)
  Estimate deficit;
  double deficit_bound = 0.0;
  bool deficit_pass = true;
};

struct HittingConditionCheck {
  std::size_t pair_index = 0;
  ExpMoment moment;
  bool pass = false;
};

struct CouplingConditionReport {
  std::vector<PairConditionCheck> pairs;
  bool contraction_pass = true;  // B2
  bool near_mass_pass = true;    // B3
  double near_mass_min = 0.0;
  std::size_t near_mass_argmin = 0;
  bool deficit_pass = true;  // B4
  std::vector<HittingConditionCheck> hitting;
  bool hitting_pass = true;  // B5
  std::size_t hitting_coverage = 0;  // sample pairs inside the start set
  double sublevel = 0.0;             // 4 b / (1 - a)
  double gamma0 = 0.0;               // largest observed distance of a pair in K
  bool all_pass = true;
};

/// Monte-Carlo report on the contraction (B2), near-mass (B3), mass deficit
/// (B4) and exponential hitting (B5) conditions over user-declared sample
/// pairs. Acceptance thresholds are estimate vs bound + 3 stderr. Sampled
/// pairs are evidence, never a certificate over all of F.
template <class State>
CouplingConditionReport check_coupling_conditions(const CoupledKernel<State>& ck,
                                                  const CouplingConditionParams<State>& params,
                                                  const std::vector<std::pair<State, State>>& sample_pairs,
                                                  std::uint64_t seed, int workers = 1) {
  require(static_cast<bool>(params.in_f) && static_cast<bool>(params.lyapunov),
          "coupling conditions: F and V must be provided");
  require(params.delta > 0.0 && params.delta < 1.0, "coupling conditions: delta must lie in (0, 1)");
  require(params.beta > 0.0 && params.beta <= 1.0, "coupling conditions: beta must lie in (0, 1]");
  require(params.gamma > 0.0 && params.gamma < 1.0, "coupling conditions: gamma must lie in (0, 1)");
  require(params.a > 0.0 && params.a < 1.0, "coupling conditions: a must lie in (0, 1)");
  require(params.replicas >= 2 && params.hitting_replicas >= 2, "coupling conditions: too few replicas");
  require(!sample_pairs.empty(), "coupling conditions: no sample pairs");

  const auto& space = ck.pi().space();
  CouplingConditionReport report;
  report.near_mass_min = std::numeric_limits<double>::infinity();
  const std::size_t reps = params.replicas;

  struct Draw {
    double distance = 0.0;
    bool fired = false;
    bool in_f = false;
  };
  std::vector<Draw> draws(reps);
  std::vector<double> buffer;

  for (std::size_t p = 0; p < sample_pairs.size(); ++p) {
    const auto& [x, y] = sample_pairs[p];
    PairConditionCheck check;
    check.in_f = params.in_f(x, y);
    check.distance = space.dist(x, y);
    if (!check.in_f) {
      report.pairs.push_back(check);
      continue;
    }
    const std::uint64_t pair_seed = derive_seed(seed, stream::condition, p);
    parallel_for(reps, workers, [&](std::size_t r) {
      Rng rng(derive_seed(pair_seed, stream::replica, r));
      auto out = ck.step(x, y, rng);
      draws[r] = {space.dist(out.u, out.v), out.fired, params.in_f(out.u, out.v)};
    });

    buffer.clear();
    for (const auto& d : draws) {
      if (!d.fired) continue;
      ++check.fired;
      if (!d.in_f) ++check.support_violations;
      buffer.push_back(d.distance);
    }
    check.contraction_bound = params.delta * check.distance;
    if (!buffer.empty()) {
      check.contraction = summarize(buffer);
      check.contraction_pass = check.support_violations == 0 &&
                               check.contraction.mean <= check.contraction_bound + 3.0 * check.contraction.stderr_;
    }

    buffer.clear();
    for (const auto& d : draws) {
      buffer.push_back(d.fired && d.in_f && d.distance <= params.delta * check.distance ? 1.0 : 0.0);
    }
    check.near_mass = summarize(buffer);

    if (ck.has_exact_mass()) {
      check.deficit.mean = 1.0 - ck.mass(x, y);
      check.deficit.count = 0;
    } else {
      buffer.clear();
      for (const auto& d : draws) buffer.push_back(d.fired ? 0.0 : 1.0);
      check.deficit = summarize(buffer);
    }
    check.deficit_bound = params.c_beta * std::pow(check.distance, params.beta);
    check.deficit_pass = check.deficit.mean <= check.deficit_bound + 3.0 * check.deficit.stderr_;

    report.contraction_pass = report.contraction_pass && check.contraction_pass;
    report.deficit_pass = report.deficit_pass && check.deficit_pass;
    if (check.near_mass.mean < report.near_mass_min) {
      report.near_mass_min = check.near_mass.mean;
      report.near_mass_argmin = p;
    }
    report.pairs.push_back(check);
  }
  if (std::isfinite(report.near_mass_min)) {
    const auto& worst = report.pairs[report.near_mass_argmin].near_mass;
    report.near_mass_pass = report.near_mass_min - 3.0 * worst.stderr_ > 0.0;
  } else {
    report.near_mass_min = 0.0;
    report.near_mass_pass = false;  // no pair of the sample lies in F
  }

  // Exponential moment of the hitting time of K from the drift sublevel set.
  report.sublevel = 4.0 * params.b / (1.0 - params.a);
  auto in_k = [&](const State& u, const State& v) {
    return params.in_f(u, v) && params.lyapunov(u) + params.lyapunov(v) < params.big_gamma;
  };
  std::vector<HittingTime> times(params.hitting_replicas);
  std::vector<double> widest(params.hitting_replicas);
  for (std::size_t p = 0; p < sample_pairs.size(); ++p) {
    const auto& [x, y] = sample_pairs[p];
    if (params.lyapunov(x) + params.lyapunov(y) >= report.sublevel) continue;
    ++report.hitting_coverage;
    const std::uint64_t pair_seed = derive_seed(seed, stream::stationary, p);
    parallel_for(params.hitting_replicas, workers, [&](std::size_t r) {
      auto traj = simulate_coupled(ck, x, y, params.horizon, derive_seed(pair_seed, stream::replica, r));
      double wide = 0.0;
      for (std::size_t k = 1; k < traj.pairs.size(); ++k) {
        const auto& [u, v] = traj.pairs[k];
        if (in_k(u, v)) wide = std::max(wide, space.dist(u, v));
      }
      widest[r] = wide;
      times[r] = hitting_time(
          traj, [&](const State& u, const State& v, bool) { return in_k(u, v); }, HitVariant::rho);
    });
    for (double w : widest) report.gamma0 = std::max(report.gamma0, w);
    HittingConditionCheck check;
    check.pair_index = p;
    const auto censored = static_cast<std::size_t>(
        std::count_if(times.begin(), times.end(), [](const HittingTime& t) { return t.censored; }));
    if (censored == times.size()) {
      check.moment.censored = censored;
      check.moment.total = times.size();
      check.pass = false;
    } else {
      check.moment = exp_moment(times, params.gamma);
      check.pass = check.moment.censored == 0 && check.moment.estimate.mean <= params.c_gamma;
    }
    report.hitting_pass = report.hitting_pass && check.pass;
    report.hitting.push_back(check);
  }
  if (report.hitting_coverage == 0) report.hitting_pass = false;

  report.all_pass = report.contraction_pass && report.near_mass_pass && report.deficit_pass &&
                    report.hitting_pass;
  return report;
}

// ---------------------------------------------------------------------------
// Exact finite-state couplings.

/// C = Q + R on pairs of a finite space, with the product residual. Q is
/// indexed as q[((x n + y) n + u) n + v]. Scalar may be an exact rational
/// type; the result is indexed as c[(x n + y)][(u n + v)].
template <class Scalar>
std::vector<std::vector<Scalar>> coupled_transition(const std::vector<std::vector<Scalar>>& pi,
                                                    const std::vector<Scalar>& q) {
  const std::size_t n = pi.size();
  std::vector<std::vector<Scalar>> c(n * n, std::vector<Scalar>(n * n, Scalar(0)));
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      auto at = [&](std::size_t u, std::size_t v) -> const Scalar& { return q[((x * n + y) * n + u) * n + v]; };
      Scalar mass(0);
      std::vector<Scalar> first(n, Scalar(0)), second(n, Scalar(0));
      for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
          mass += at(u, v);
          first[u] += at(u, v);
          second[v] += at(u, v);
        }
      }
      auto& row = c[x * n + y];
      for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
          row[u * n + v] = at(u, v);
          if (mass < Scalar(1)) {
            row[u * n + v] += (pi[x][u] - first[u]) * (pi[y][v] - second[v]) / (Scalar(1) - mass);
          }
        }
      }
    }
  }
  return c;
}

/// Whether Q's marginals are dominated by the rows of Pi, entrywise, and Q >= 0.
template <class Scalar>
bool dominated_by(const std::vector<std::vector<Scalar>>& pi, const std::vector<Scalar>& q,
                  const Scalar& tolerance = Scalar(0)) {
  const std::size_t n = pi.size();
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t u = 0; u < n; ++u) {
        Scalar first(0), second(0);
        for (std::size_t v = 0; v < n; ++v) {
          const Scalar& a = q[((x * n + y) * n + u) * n + v];
          const Scalar& b = q[((x * n + y) * n + v) * n + u];
          if (a < Scalar(0)) return false;
          first += a;
          second += b;
        }
        if (first > pi[x][u] + tolerance || second > pi[y][u] + tolerance) return false;
      }
    }
  }
  return true;
}

class FiniteCoupling {
 public:
  using Matrix = FiniteKernel::Matrix;

  /// Rejects a Q that is negative or not dominated by Pi.
  FiniteCoupling(FiniteKernel pi, std::vector<double> q);

  /// Q(x, y, (u, u)) = min(Pi(x, u), Pi(y, u)): mass sits on the diagonal only.
  static FiniteCoupling maximal(const FiniteKernel& pi);

  const FiniteKernel& pi() const noexcept { return pi_; }
  std::size_t size() const noexcept { return pi_.size(); }
  double q(int x, int y, int u, int v) const;
  double mass(int x, int y) const;
  const std::vector<double>& q_tensor() const noexcept { return q_; }

  /// Exact transition matrix of C on n^2 pair states.
  Matrix coupled_matrix() const;

  SubKernel<int> sub_kernel() const;
  CoupledKernel<int> coupled_kernel() const;

 private:
  FiniteKernel pi_;
  std::vector<double> q_;
};

}  // namespace mclt

#endif  // MCLT_COUPLING_HPP
