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

#ifndef MCLT_METRICS_STATS_HPP
#define MCLT_METRICS_STATS_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mclt/core_kernels.hpp"
#include "mclt/empirical_measure.hpp"
#include "mclt/error.hpp"

namespace mclt {

inline constexpr std::size_t kDefaultSupportCap = 2000;

/// Optimal value of the bounded-Lipschitz program together with its
/// maximizer on the support points.
struct FortetMourierResult {
  double distance = 0.0;
  std::vector<double> values;  // f_i, |f_i| <= 1, |f_i - f_j| <= d(i, j)
};

/// Fortet-Mourier distance of a signed, mass-balanced measure on k points:
///
///   max sum_i f_i w_i  s.t.  |f_i| <= 1,  |f_i - f_j| <= d(i, j).
///
/// Restricting the supremum over all f with ||f||_BL <= 1 to the support
/// loses nothing: any feasible vector extends to the whole space with the
/// same bounds (McShane extension x -> min_i f_i + d(x, x_i), clipped to
/// [-1, 1]). The program is solved through its dual, an uncapacitated
/// transport problem with cost min(d, 2), by successive shortest paths. The
/// returned values are re-verified against both constraint families.
FortetMourierResult fortet_mourier_signed(std::span<const double> weights,
                                          const std::function<double(std::size_t, std::size_t)>& dist,
                                          std::size_t cap = kDefaultSupportCap);

/// Checks |f_i| <= 1 and |f_i - f_j| <= d(i, j) within `tol`.
bool is_bl_feasible(std::span<const double> values,
                    const std::function<double(std::size_t, std::size_t)>& dist, double tol = 1e-9);

template <class State>
struct FortetMourierSolution {
  double distance = 0.0;
  std::vector<State> support;  // union of both supports, equal atoms merged
  std::vector<double> values;  // optimal f on the support
};

template <class State>
FortetMourierSolution<State> fortet_mourier(const EmpiricalMeasure<State>& mu1,
                                            const EmpiricalMeasure<State>& mu2,
                                            const MetricSpace<State>& space,
                                            std::size_t cap = kDefaultSupportCap) {
  FortetMourierSolution<State> out;
  std::vector<double> weights;
  auto add = [&](const State& p, double w) {
    for (std::size_t k = 0; k < out.support.size(); ++k) {
      if (out.support[k] == p) {
        weights[k] += w;
        return;
      }
    }
    require(out.support.size() < cap,
            "fortet_mourier: combined support exceeds the cap of " + std::to_string(cap) +
                " points; subsample or bin the measures",
            ErrorCode::support_cap_exceeded);
    out.support.push_back(p);
    weights.push_back(w);
  };
  for (const auto& a : mu1.atoms()) add(a.point, a.weight);
  for (const auto& a : mu2.atoms()) add(a.point, -a.weight);
  auto result = fortet_mourier_signed(
      weights, [&](std::size_t i, std::size_t j) { return space.dist(out.support[i], out.support[j]); },
      cap);
  out.distance = result.distance;
  out.values = std::move(result.values);
  return out;
}

/// sup_x |F_n(x) - cdf(x)| evaluated at the jump points of F_n.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Default Kolmogorov critical value at the 1% level, 1.63 / sqrt(m).
inline double ks_critical_1pct(std::size_t m) { return 1.63 / std::sqrt(static_cast<double>(m)); }

struct BatchMeansResult {
  double sigma2 = 0.0;
  double stderr_ = 0.0;
  std::size_t batch_len = 0;
  std::size_t batches = 0;
};

/// ceil(n^(1/3)), the default batch length.
std::size_t default_batch_length(std::size_t n);

/// Batch-means estimate of the asymptotic variance lim Var(sum / sqrt(n)):
/// batch_len times the sample variance of the non-overlapping batch means.
BatchMeansResult batch_mean_variance(std::span<const double> series, std::size_t batch_len);

/// Same estimate from precomputed batch means.
BatchMeansResult batch_variance_from_means(std::span<const double> means, std::size_t batch_len);

}  // namespace mclt

#endif  // MCLT_METRICS_STATS_HPP
