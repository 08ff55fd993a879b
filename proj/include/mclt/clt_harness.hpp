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

#ifndef MCLT_CLT_HARNESS_HPP
#define MCLT_CLT_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mclt/core_kernels.hpp"
#include "mclt/error.hpp"
#include "mclt/metrics_stats.hpp"
#include "mclt/rng.hpp"
#include "mclt/stats.hpp"

namespace mclt {

/// Bounded Lipschitz observable with its declared bounds.
template <class State>
struct Observable {
  std::function<double(const State&)> g;
  double lip_bound = 1.0;
  double sup_bound = 1.0;
  std::string name;

  double operator()(const State& s) const { return g(s); }
};

/// Largest violation of the declared bounds on the given points and pairs;
/// both are <= 0 when the declaration holds there.
struct ObservableSpotCheck {
  double sup_excess = 0.0;
  double lip_excess = 0.0;
  bool pass = true;
};

template <class State>
ObservableSpotCheck spot_check(const Observable<State>& obs, const MetricSpace<State>& space,
                               const std::vector<State>& points) {
  ObservableSpotCheck out;
  out.sup_excess = -obs.sup_bound;
  out.lip_excess = -obs.lip_bound;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const double gp = obs(points[p]);
    out.sup_excess = std::max(out.sup_excess, std::abs(gp) - obs.sup_bound);
    for (std::size_t q = p + 1; q < points.size(); ++q) {
      const double d = space.dist(points[p], points[q]);
      if (d > 0.0) out.lip_excess = std::max(out.lip_excess, std::abs(gp - obs(points[q])) / d - obs.lip_bound);
    }
  }
  constexpr double kSlack = 1e-12;
  out.pass = out.sup_excess <= kSlack && out.lip_excess <= kSlack;
  return out;
}

/// (sum_{k=1..n} (g(phi_k) - center)) / sqrt(n).
template <class State, class Fn>
double partial_sum(const Trajectory<State>& traj, Fn&& g, double center) {
  const std::size_t n = traj.steps();
  require(n >= 1, "partial_sum: trajectory needs at least one step");
  double sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) sum += g(traj.states[k]) - center;
  return sum / std::sqrt(static_cast<double>(n));
}

/// Path features of B_n on [0, 1], unscaled. The endpoint is accumulated
/// exactly as in partial_sum.
struct PathFeatures {
  double endpoint = 0.0;     // B_n(1) = s_n
  double running_max = 0.0;  // max(0, max_k S_k) / sqrt(n)
  double bridge = 0.0;       // max_k |S_k - (k / n) S_n| / sqrt(n)
};

template <class State, class Fn>
PathFeatures path_features(const Trajectory<State>& traj, Fn&& g, double center) {
  const std::size_t n = traj.steps();
  require(n >= 1, "path_features: trajectory needs at least one step");
  std::vector<double> partial(n + 1, 0.0);
  double sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    sum += g(traj.states[k]) - center;
    partial[k] = sum;
  }
  const double root = std::sqrt(static_cast<double>(n));
  PathFeatures f;
  f.endpoint = sum / root;
  double top = 0.0, bridge = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    top = std::max(top, partial[k]);
    bridge = std::max(bridge, std::abs(partial[k] - static_cast<double>(k) / static_cast<double>(n) * sum));
  }
  f.running_max = top / root;
  f.bridge = bridge / root;
  return f;
}

/// Long-run time average of g and the batch-means asymptotic variance from
/// the same run.
struct CenterEstimate {
  double center = 0.0;
  double stderr_ = 0.0;
  BatchMeansResult variance;
  std::size_t steps = 0;
  std::size_t burn_in = 0;
};

/// Default length of the auxiliary run for replicas of length n.
inline std::size_t default_aux_steps(std::size_t n) { return std::max<std::size_t>(1000000, 5000 * n); }

template <class State, class Fn>
CenterEstimate estimate_center(const Kernel<State>& kernel, Fn&& g, const State& x0, std::size_t burn_in,
                               std::size_t steps, std::uint64_t seed, std::size_t batch_len = 0) {
  if (batch_len == 0) batch_len = default_batch_length(steps);
  require(steps >= 10 * batch_len, "estimate_center: run shorter than 10 batch lengths");
  Rng rng(seed);
  State x = advance(kernel, x0, burn_in, rng);
  std::vector<double> means;
  means.reserve(steps / batch_len);
  CompensatedSum total, batch;
  std::size_t in_batch = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    x = kernel.sample(x, rng);
    const double v = g(x);
    total.add(v);
    batch.add(v);
    if (++in_batch == batch_len) {
      means.push_back(batch.value() / static_cast<double>(batch_len));
      batch = CompensatedSum();
      in_batch = 0;
    }
  }
  CenterEstimate out;
  out.steps = steps;
  out.burn_in = burn_in;
  out.center = total.value() / static_cast<double>(steps);
  out.variance = batch_variance_from_means(means, batch_len);
  out.stderr_ = std::sqrt(out.variance.sigma2 / static_cast<double>(steps));
  return out;
}

// ---------------------------------------------------------------------------

struct CltOptions {
  std::size_t n = 2000;
  std::size_t replicas = 4000;
  bool stationary_start = true;
  std::size_t burn_in = 50;         // per replica, before the counted steps
  std::size_t aux_burn_in = 1000;   // auxiliary run
  std::size_t aux_steps = 0;        // 0: default_aux_steps(n)
  std::size_t batch_len = 0;        // 0: default_batch_length(aux_steps)
  std::optional<double> center;     // skip the auxiliary center estimate
  std::optional<double> sigma2;     // skip the auxiliary variance estimate
  double threshold = 0.0;           // 0: ks_critical_1pct(replicas)
  std::uint64_t seed = 0;
  int workers = 1;
};

struct CltReport {
  double sigma2 = 0.0;
  double sigma2_stderr = 0.0;
  double center = 0.0;
  double center_stderr = 0.0;
  double ks = 0.0;
  double threshold = 0.0;
  std::size_t replicas = 0;
  std::size_t n = 0;
  std::size_t burn_in = 0;
  bool stationary_start = true;
  bool pass = false;
  std::vector<double> sums;  // s_n per replica, before standardization
};

namespace detail {

inline constexpr double kDegenerateVariance = 1e-12;

template <class State, class Fn>
void resolve_center(const Kernel<State>& kernel, Fn&& g, const State& x0, const CltOptions& opt,
                    double& center, double& center_se, double& sigma2, double& sigma2_se) {
  if (opt.center && opt.sigma2) {
    center = *opt.center;
    sigma2 = *opt.sigma2;
    center_se = sigma2_se = 0.0;
  } else {
    const std::size_t steps = opt.aux_steps ? opt.aux_steps : default_aux_steps(opt.n);
    const auto est = estimate_center(kernel, g, x0, opt.aux_burn_in, steps,
                                     derive_seed(opt.seed, stream::auxiliary), opt.batch_len);
    center = opt.center ? *opt.center : est.center;
    center_se = opt.center ? 0.0 : est.stderr_;
    sigma2 = opt.sigma2 ? *opt.sigma2 : est.variance.sigma2;
    sigma2_se = opt.sigma2 ? 0.0 : est.variance.stderr_;
  }
  if (!(sigma2 >= kDegenerateVariance)) {
    throw Error(ErrorCode::degenerate_variance,
                "asymptotic variance estimate " + std::to_string(sigma2) + " is below 1e-12");
  }
}

inline double resolve_threshold(const CltOptions& opt) {
  if (opt.threshold > 0.0) return opt.threshold;
  require(opt.replicas >= 1000, "clt: the default KS threshold needs replicas >= 1000");
  return ks_critical_1pct(opt.replicas);
}

}  // namespace detail

/// KS test of standardized s_n against N(0, 1) over independent replicas.
template <class State, class Fn>
CltReport clt_test(const Kernel<State>& kernel, Fn&& g, const State& x0, const CltOptions& opt) {
  require(opt.n >= 1, "clt_test: n must be >= 1");
  CltReport rep;
  rep.threshold = detail::resolve_threshold(opt);
  detail::resolve_center(kernel, g, x0, opt, rep.center, rep.center_stderr, rep.sigma2, rep.sigma2_stderr);
  rep.replicas = opt.replicas;
  rep.n = opt.n;
  rep.burn_in = opt.stationary_start ? opt.burn_in : 0;
  rep.stationary_start = opt.stationary_start;
  rep.sums.assign(opt.replicas, 0.0);
  const double center = rep.center;
  parallel_for(opt.replicas, opt.workers, [&](std::size_t r) {
    Rng rng(derive_seed(opt.seed, stream::replica, r));
    State x = opt.stationary_start ? advance(kernel, x0, opt.burn_in, rng) : x0;
    double sum = 0.0;
    for (std::size_t k = 1; k <= opt.n; ++k) {
      x = kernel.sample(x, rng);
      sum += g(x) - center;
    }
    rep.sums[r] = sum / std::sqrt(static_cast<double>(opt.n));
  });
  const double sigma = std::sqrt(rep.sigma2);
  std::vector<double> standardized(rep.sums.size());
  for (std::size_t r = 0; r < rep.sums.size(); ++r) standardized[r] = rep.sums[r] / sigma;
  rep.ks = ks_statistic(standardized, normal_cdf);
  rep.pass = rep.ks < rep.threshold;
  return rep;
}

// ---------------------------------------------------------------------------

/// P(sup_{[0,1]} W <= x) = max(0, 2 Phi(x) - 1).
inline double reflection_cdf(double x) noexcept { return std::max(0.0, 2.0 * normal_cdf(x) - 1.0); }

struct DonskerReport {
  double sigma2 = 0.0;
  double sigma2_stderr = 0.0;
  double center = 0.0;
  std::size_t replicas = 0;
  std::size_t n = 0;
  std::vector<PathFeatures> features;  // unscaled, per replica
  double ks_max = 0.0;       // running max / sigma vs the reflection law
  double ks_endpoint = 0.0;  // endpoint / sigma vs N(0, 1)
  double ks_bridge = 0.0;    // bridge deviation / sigma vs the Kolmogorov law
  double threshold = 0.0;
  bool consistent = true;  // running max >= max(0, endpoint) on every path
  bool pass = false;
};

/// Replicas start after opt.burn_in steps from x0, which should make the
/// start law close to the invariant one; opt.stationary_start is ignored.
template <class State, class Fn>
DonskerReport donsker_test(const Kernel<State>& kernel, Fn&& g, const State& x0, const CltOptions& opt) {
  require(opt.n >= 1, "donsker_test: n must be >= 1");
  DonskerReport rep;
  rep.threshold = detail::resolve_threshold(opt);
  double center_se = 0.0;
  detail::resolve_center(kernel, g, x0, opt, rep.center, center_se, rep.sigma2, rep.sigma2_stderr);
  rep.replicas = opt.replicas;
  rep.n = opt.n;
  rep.features.resize(opt.replicas);
  parallel_for(opt.replicas, opt.workers, [&](std::size_t r) {
    Rng rng(derive_seed(opt.seed, stream::replica, r));
    const State start = advance(kernel, x0, opt.burn_in, rng);
    const auto traj = simulate_chain(kernel, start, opt.n, derive_seed(opt.seed, stream::stationary, r));
    rep.features[r] = path_features(traj, g, rep.center);
  });
  const double sigma = std::sqrt(rep.sigma2);
  std::vector<double> tops, ends, bridges;
  for (const auto& f : rep.features) {
    tops.push_back(f.running_max / sigma);
    ends.push_back(f.endpoint / sigma);
    bridges.push_back(f.bridge / sigma);
    rep.consistent = rep.consistent && f.running_max >= std::max(0.0, f.endpoint);
  }
  rep.ks_max = ks_statistic(tops, reflection_cdf);
  rep.ks_endpoint = ks_statistic(ends, normal_cdf);
  rep.ks_bridge = ks_statistic(bridges, [](double x) { return x <= 0.0 ? 0.0 : 1.0 - kolmogorov_survival(x); });
  rep.pass = rep.consistent && rep.ks_max < rep.threshold;
  return rep;
}

// ---------------------------------------------------------------------------

struct MwOptions {
  std::vector<std::size_t> n_list;  // increasing
  std::size_t replicas = 2000;
  // The weighted grid stands for the invariant law and `center` for the mean
  // of g under it, so sum_x w(x) V_n g-bar(x) = 0 and only deviations from
  // the weighted mean are estimated.
  bool invariant_weights = true;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct MwPoint {
  std::size_t n = 0;
  std::vector<Estimate> values;  // V_n g-bar at each grid point
  double mean_square = 0.0;      // sum_x w(x) (V_n g-bar)(x)^2, bias-corrected
  double root = 0.0;
  double root_stderr = 0.0;
};

struct MwReport {
  std::vector<MwPoint> points;
  double slope = 0.0;  // of root against n
  double slope_stderr = 0.0;
  double growth_p_value = 1.0;  // one-sided, H0: slope <= 0
  bool growth = false;          // p < 0.01
  std::size_t high_variance = 0;  // grid estimates with stderr above |value|
};

/// Monte-Carlo V_n g-bar(x) = sum_{k=1..n} E_x(g(phi_k)) - n center on a
/// weighted grid, and its weighted mean square. Replica r uses the same
/// random stream at every grid point.
template <class State, class Fn>
MwReport mw_diagnostic(const Kernel<State>& kernel, Fn&& g, double center, const std::vector<State>& grid,
                       const std::vector<double>& weights, const MwOptions& opt) {
  require(!opt.n_list.empty(), "mw_diagnostic: n_list is empty");
  require(std::is_sorted(opt.n_list.begin(), opt.n_list.end()) &&
              std::adjacent_find(opt.n_list.begin(), opt.n_list.end()) == opt.n_list.end() && opt.n_list[0] >= 1,
          "mw_diagnostic: n_list must be strictly increasing and positive");
  require(!grid.empty() && grid.size() == weights.size(), "mw_diagnostic: grid and weights differ in size");
  require(opt.replicas >= 2, "mw_diagnostic: need at least two replicas");
  const std::size_t nn = opt.n_list.size(), reps = opt.replicas, n_max = opt.n_list.back(), m = grid.size();

  MwReport rep;
  rep.points.resize(nn);
  for (std::size_t p = 0; p < nn; ++p) rep.points[p].n = opt.n_list[p];
  // sums[(r * m + x) * nn + p]: centered partial sum up to n_list[p] from grid[x]
  std::vector<double> sums(reps * m * nn);
  parallel_for(reps, opt.workers, [&](std::size_t r) {
    const std::uint64_t replica_seed = derive_seed(opt.seed, stream::replica, r);
    for (std::size_t x = 0; x < m; ++x) {
      Rng rng(replica_seed);
      State s = grid[x];
      double sum = 0.0;
      std::size_t next = 0;
      for (std::size_t k = 1; k <= n_max; ++k) {
        s = kernel.sample(s, rng);
        sum += g(s) - center;
        if (k == opt.n_list[next]) sums[(r * m + x) * nn + next++] = sum;
      }
    }
  });
  std::vector<double> column(reps);
  for (std::size_t p = 0; p < nn; ++p) {
    for (std::size_t x = 0; x < m; ++x) {
      for (std::size_t r = 0; r < reps; ++r) {
        double v = sums[(r * m + x) * nn + p];
        if (opt.invariant_weights) {
          for (std::size_t y = 0; y < m; ++y) v -= weights[y] * sums[(r * m + y) * nn + p];
        }
        column[r] = v;
      }
      rep.points[p].values.push_back(summarize(column));
    }
  }
  std::vector<double> ns, roots, ses;
  for (auto& pt : rep.points) {
    double sq = 0.0, var = 0.0, noise = 0.0;
    for (std::size_t x = 0; x < m; ++x) {
      const Estimate& e = pt.values[x];
      sq += weights[x] * (e.mean * e.mean - e.stderr_ * e.stderr_);
      var += 4.0 * weights[x] * weights[x] * e.mean * e.mean * e.stderr_ * e.stderr_;
      noise += weights[x] * e.stderr_ * e.stderr_;
      if (e.stderr_ > std::abs(e.mean)) ++rep.high_variance;
    }
    pt.mean_square = std::max(0.0, sq);
    pt.root = std::sqrt(pt.mean_square);
    pt.root_stderr = pt.root > 0.0 ? std::sqrt(var) / (2.0 * pt.root) : std::sqrt(noise);
    ns.push_back(static_cast<double>(pt.n));
    roots.push_back(pt.root);
    ses.push_back(pt.root_stderr);
  }
  if (nn >= 2) {
    double mean_n = 0.0, mean_r = 0.0;
    for (std::size_t p = 0; p < nn; ++p) {
      mean_n += ns[p] / static_cast<double>(nn);
      mean_r += roots[p] / static_cast<double>(nn);
    }
    double sxx = 0.0, sxy = 0.0, var = 0.0;
    for (std::size_t p = 0; p < nn; ++p) {
      sxx += (ns[p] - mean_n) * (ns[p] - mean_n);
      sxy += (ns[p] - mean_n) * (roots[p] - mean_r);
    }
    for (std::size_t p = 0; p < nn; ++p) var += std::pow((ns[p] - mean_n) / sxx, 2) * ses[p] * ses[p];
    rep.slope = sxy / sxx;
    rep.slope_stderr = std::sqrt(var);
    if (rep.slope_stderr > 0.0) {
      rep.growth_p_value = 1.0 - normal_cdf(rep.slope / rep.slope_stderr);
    } else {
      rep.growth_p_value = rep.slope > 0.0 ? 0.0 : 1.0;
    }
    rep.growth = rep.growth_p_value < 0.01;
  }
  return rep;
}

}  // namespace mclt

#endif  // MCLT_CLT_HARNESS_HPP
