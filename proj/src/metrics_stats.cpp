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

#include "mclt/metrics_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mclt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Transport cost between support points: min(d, 2).
double truncated(double d) { return std::min(d, 2.0); }

}  // namespace

FortetMourierResult fortet_mourier_signed(std::span<const double> weights,
                                          const std::function<double(std::size_t, std::size_t)>& dist,
                                          std::size_t cap) {
  const std::size_t n = weights.size();
  require(n > 0, "fortet_mourier: empty support");
  require(n <= cap,
          "fortet_mourier: combined support of " + std::to_string(n) + " points exceeds the cap of " +
              std::to_string(cap) + "; subsample or bin the measures",
          ErrorCode::support_cap_exceeded);
  double total = 0.0, mass = 0.0;
  for (double w : weights) {
    require(std::isfinite(w), "fortet_mourier: weights must be finite");
    total += w;
    mass += std::abs(w);
  }
  require(std::abs(total) <= 1e-9 * std::max(1.0, mass),
          "fortet_mourier: signed weights must sum to zero");
  const double tol = 1e-14 * std::max(1.0, mass);

  std::vector<std::size_t> supply, demand;
  for (std::size_t k = 0; k < n; ++k) {
    if (weights[k] > tol) supply.push_back(k);
    if (weights[k] < -tol) demand.push_back(k);
  }
  FortetMourierResult out;
  out.values.assign(n, 0.0);
  if (supply.empty() || demand.empty()) return out;

  const std::size_t ns = supply.size(), nd = demand.size(), nodes = ns + nd;
  std::vector<double> cost(ns * nd), flow(ns * nd, 0.0);
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t d = 0; d < nd; ++d) {
      const double c = dist(supply[s], demand[d]);
      require(std::isfinite(c) && c >= 0.0, "fortet_mourier: distances must be finite and >= 0");
      cost[s * nd + d] = truncated(c);
    }
  }
  std::vector<double> remaining(nodes);
  for (std::size_t s = 0; s < ns; ++s) remaining[s] = weights[supply[s]];
  for (std::size_t d = 0; d < nd; ++d) remaining[ns + d] = -weights[demand[d]];

  // Node potentials keep every residual reduced cost nonnegative.
  std::vector<double> potential(nodes, 0.0), label(nodes);
  std::vector<long> pred(nodes);
  std::vector<char> settled(nodes);

  for (;;) {
    std::fill(label.begin(), label.end(), kInf);
    std::fill(pred.begin(), pred.end(), -1);
    std::fill(settled.begin(), settled.end(), 0);
    bool any_source = false;
    for (std::size_t s = 0; s < ns; ++s) {
      if (remaining[s] > tol) {
        label[s] = 0.0;
        any_source = true;
      }
    }
    if (!any_source) break;

    long target = -1;
    for (;;) {
      long u = -1;
      double best = kInf;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (!settled[v] && label[v] < best) {
          best = label[v];
          u = static_cast<long>(v);
        }
      }
      if (u < 0) break;
      settled[u] = 1;
      const auto uu = static_cast<std::size_t>(u);
      if (uu >= ns && remaining[uu] > tol) {
        target = u;
        break;
      }
      if (uu < ns) {
        for (std::size_t d = 0; d < nd; ++d) {
          const std::size_t v = ns + d;
          if (settled[v]) continue;
          const double rc = std::max(0.0, cost[uu * nd + d] + potential[uu] - potential[v]);
          if (label[uu] + rc < label[v]) {
            label[v] = label[uu] + rc;
            pred[v] = u;
          }
        }
      } else {
        const std::size_t d = uu - ns;
        for (std::size_t s = 0; s < ns; ++s) {
          if (settled[s] || flow[s * nd + d] <= tol) continue;
          const double rc = std::max(0.0, -cost[s * nd + d] + potential[uu] - potential[s]);
          if (label[uu] + rc < label[s]) {
            label[s] = label[uu] + rc;
            pred[s] = u;
          }
        }
      }
    }
    if (target < 0) break;

    const double reach = label[target];
    for (std::size_t v = 0; v < nodes; ++v) potential[v] += std::min(label[v], reach);

    double delta = remaining[target];
    long v = target;
    while (pred[v] >= 0) {
      const long u = pred[v];
      if (static_cast<std::size_t>(u) >= ns) {  // reverse arc: cancels flow s <- d
        delta = std::min(delta, flow[v * nd + (u - ns)]);
      }
      v = u;
    }
    delta = std::min(delta, remaining[v]);

    v = target;
    while (pred[v] >= 0) {
      const long u = pred[v];
      if (static_cast<std::size_t>(u) < ns) {
        flow[u * nd + (v - ns)] += delta;
      } else {
        double& f = flow[v * nd + (u - ns)];
        f -= delta;
        if (f <= tol) f = 0.0;
      }
      v = u;
    }
    remaining[v] -= delta;
    remaining[target] -= delta;
  }

  CompensatedSum primal;
  for (std::size_t k = 0; k < ns * nd; ++k) {
    if (flow[k] > 0.0) primal.add(flow[k] * cost[k]);
  }

  // Dual values on the demand side, then the c-transform over every support
  // point; the result is min(d, 2)-Lipschitz, so its range fits in [-1, 1]
  // after centering.
  std::vector<double> demand_value(nd);
  for (std::size_t d = 0; d < nd; ++d) demand_value[d] = -potential[ns + d];
  double lo = kInf, hi = -kInf;
  for (std::size_t k = 0; k < n; ++k) {
    double g = kInf;
    for (std::size_t d = 0; d < nd; ++d) {
      const double c = k == demand[d] ? 0.0 : truncated(dist(k, demand[d]));
      g = std::min(g, c + demand_value[d]);
    }
    out.values[k] = g;
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  const double shift = 0.5 * (lo + hi);
  CompensatedSum dual;
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = std::clamp(out.values[k] - shift, -1.0, 1.0);
    dual.add(out.values[k] * weights[k]);
  }

  require(is_bl_feasible(out.values, dist), "fortet_mourier: certificate failed verification",
          ErrorCode::internal);
  require(std::abs(dual.value() - primal.value()) <= 1e-9 * std::max(1.0, mass),
          "fortet_mourier: primal and dual values disagree", ErrorCode::internal);
  out.distance = std::clamp(primal.value(), 0.0, 2.0);
  return out;
}

bool is_bl_feasible(std::span<const double> values,
                    const std::function<double(std::size_t, std::size_t)>& dist, double tol) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::abs(values[i]) > 1.0 + tol) return false;
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      if (std::abs(values[i] - values[j]) > dist(i, j) + tol) return false;
    }
  }
  return true;
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  require(samples.size() >= 10, "ks_statistic: need at least 10 samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

std::size_t default_batch_length(std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n)))));
}

BatchMeansResult batch_mean_variance(std::span<const double> series, std::size_t batch_len) {
  require(batch_len >= 1, "batch_mean_variance: batch length must be >= 1");
  require(series.size() >= 10 * batch_len,
          "batch_mean_variance: series of length " + std::to_string(series.size()) +
              " is shorter than 10 batch lengths");
  std::vector<double> means(series.size() / batch_len);
  for (std::size_t b = 0; b < means.size(); ++b) {
    CompensatedSum s;
    for (std::size_t k = 0; k < batch_len; ++k) s.add(series[b * batch_len + k]);
    means[b] = s.value() / static_cast<double>(batch_len);
  }
  return batch_variance_from_means(means, batch_len);
}

BatchMeansResult batch_variance_from_means(std::span<const double> means, std::size_t batch_len) {
  require(means.size() >= 10, "batch means: need at least 10 batches");
  BatchMeansResult out;
  out.batch_len = batch_len;
  out.batches = means.size();
  const Estimate m = summarize(means);
  // stderr of the mean is sqrt(var / batches); recover the sample variance.
  const double var = m.stderr_ * m.stderr_ * static_cast<double>(out.batches);
  out.sigma2 = static_cast<double>(batch_len) * var;
  out.stderr_ = out.sigma2 * std::sqrt(2.0 / static_cast<double>(out.batches - 1));
  return out;
}

}  // namespace mclt
