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

#ifndef MCLT_ERGODICITY_HPP
#define MCLT_ERGODICITY_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mclt/core_kernels.hpp"
#include "mclt/coupling.hpp"
#include "mclt/empirical_measure.hpp"
#include "mclt/metrics_stats.hpp"
#include "mclt/rng.hpp"

namespace mclt {

/// Empirical measure of the points with equal points merged into one atom.
template <class State>
EmpiricalMeasure<State> collapsed(const std::vector<State>& points) {
  require(!points.empty(), "collapsed: no points");
  std::vector<typename EmpiricalMeasure<State>::Atom> atoms;
  std::vector<std::size_t> counts;
  for (const auto& p : points) {
    std::size_t k = 0;
    while (k < atoms.size() && !(atoms[k].point == p)) ++k;
    if (k == atoms.size()) {
      atoms.push_back({p, 0.0});
      counts.push_back(0);
    }
    ++counts[k];
  }
  const double total = static_cast<double>(points.size());
  for (std::size_t k = 0; k < atoms.size(); ++k) atoms[k].weight = static_cast<double>(counts[k]) / total;
  return EmpiricalMeasure<State>(std::move(atoms));
}

struct ErgodicityOptions {
  std::size_t steps = 30;           // curve at n = 0..steps
  std::size_t sample_size = 100000;
  std::size_t stationary_burn_in = 200;
  double noise_factor = 10.0;  // usable steps have distance > noise_factor * floor
  std::size_t cap = kDefaultSupportCap;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct ErgodicityCurve {
  std::vector<double> distance;  // d_FM(P^n mu, mu*), n = 0..steps
  std::vector<std::uint8_t> usable;
  double noise_floor = 0.0;  // d_FM between two independent samples of mu*
  bool decreasing = false;   // over the usable steps
  std::optional<GeometricFit> fit;
};

/// Fortet-Mourier distance between the law after n steps from `start`
/// and the invariant law, both as samples pushed through `project` (a
/// binning map for continuous states). The invariant law is sampled by
/// running the chain from x_ref for stationary_burn_in steps.
template <class State>
ErgodicityCurve ergodicity_curve(const Kernel<State>& kernel, const InitialSampler<State>& start,
                                 const State& x_ref, const std::function<State(const State&)>& project,
                                 const ErgodicityOptions& opt) {
  require(opt.sample_size >= 2, "ergodicity_curve: sample size too small");
  const std::size_t m = opt.sample_size, steps = opt.steps;
  auto stationary = [&](std::uint64_t tag) {
    std::vector<State> pts(m);
    parallel_for(m, opt.workers, [&](std::size_t r) {
      Rng rng(derive_seed(derive_seed(opt.seed, stream::stationary, tag), stream::replica, r));
      pts[r] = project(advance(kernel, x_ref, opt.stationary_burn_in, rng));
    });
    return collapsed(pts);
  };
  const auto target = stationary(0);
  const auto twin = stationary(1);

  std::vector<State> paths(m * (steps + 1));
  parallel_for(m, opt.workers, [&](std::size_t r) {
    Rng rng(derive_seed(opt.seed, stream::replica, r));
    State x = start(rng);
    paths[r * (steps + 1)] = project(x);
    for (std::size_t k = 1; k <= steps; ++k) {
      x = kernel.sample(x, rng);
      paths[r * (steps + 1) + k] = project(x);
    }
  });

  ErgodicityCurve curve;
  const auto& space = kernel.space();
  curve.noise_floor = fortet_mourier(target, twin, space, opt.cap).distance;
  std::vector<State> column(m);
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k <= steps; ++k) {
    for (std::size_t r = 0; r < m; ++r) column[r] = paths[r * (steps + 1) + k];
    const double d = fortet_mourier(collapsed(column), target, space, opt.cap).distance;
    curve.distance.push_back(d);
    const bool usable = d > opt.noise_factor * curve.noise_floor;
    curve.usable.push_back(usable ? 1 : 0);
    if (usable) {
      xs.push_back(static_cast<double>(k));
      ys.push_back(d);
    }
  }
  curve.decreasing = ys.size() >= 2;
  for (std::size_t p = 1; p < ys.size(); ++p) curve.decreasing = curve.decreasing && ys[p] < ys[p - 1];
  curve.fit = fit_geometric(xs, ys);
  return curve;
}

}  // namespace mclt

#endif  // MCLT_ERGODICITY_HPP
