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

#include "mclt/coupling.hpp"

#include <cmath>
#include <memory>
#include <utility>

namespace mclt {

ExpMoment exp_moment(std::span<const HittingTime> samples, double base) {
  require(base > 0.0 && base < 1.0, "exp_moment: base must lie in (0, 1)");
  require(!samples.empty(), "exp_moment: no samples");
  ExpMoment out;
  out.total = samples.size();
  std::vector<double> values;
  values.reserve(samples.size());
  const double log_base = std::log(base);
  for (const auto& s : samples) {
    if (s.censored) {
      ++out.censored;
      continue;
    }
    values.push_back(std::exp(-static_cast<double>(s.value) * log_base));
  }
  if (values.empty()) {
    throw Error(ErrorCode::horizon_too_short, "exp_moment: every sample is censored; raise the horizon");
  }
  out.estimate = summarize(values);
  out.lower_bound = out.censored > 0;
  return out;
}

std::optional<GeometricFit> fit_geometric(std::span<const double> steps, std::span<const double> values) {
  require(steps.size() == values.size(), "fit_geometric: length mismatch");
  if (steps.size() < 3) return std::nullopt;
  std::vector<double> logs;
  logs.reserve(values.size());
  for (double v : values) {
    require(v > 0.0, "fit_geometric: values must be positive");
    logs.push_back(std::log(v));
  }
  const LinearFit lf = least_squares(steps, logs);
  GeometricFit fit;
  fit.rate = std::exp(lf.slope);
  fit.amplitude = std::exp(lf.intercept);
  fit.r_squared = lf.r_squared;
  fit.points = lf.points;
  return fit;
}

namespace {

constexpr double kDominationTolerance = 1e-12;

}  // namespace

FiniteCoupling::FiniteCoupling(FiniteKernel pi, std::vector<double> q) : pi_(std::move(pi)), q_(std::move(q)) {
  const std::size_t n = pi_.size();
  require(q_.size() == n * n * n * n, "finite coupling: Q must have n^4 entries");
  require(dominated_by(pi_.matrix(), q_, kDominationTolerance),
          "finite coupling: Q is negative or not dominated by the rows of Pi");
}

FiniteCoupling FiniteCoupling::maximal(const FiniteKernel& pi) {
  const std::size_t n = pi.size();
  std::vector<double> q(n * n * n * n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t u = 0; u < n; ++u) {
        q[((x * n + y) * n + u) * n + u] = std::min(pi.matrix()[x][u], pi.matrix()[y][u]);
      }
    }
  }
  return FiniteCoupling(pi, std::move(q));
}

double FiniteCoupling::q(int x, int y, int u, int v) const {
  const auto n = size();
  return q_.at(((static_cast<std::size_t>(x) * n + y) * n + u) * n + v);
}

double FiniteCoupling::mass(int x, int y) const {
  const std::size_t n = size();
  const std::size_t base = (static_cast<std::size_t>(x) * n + y) * n * n;
  CompensatedSum s;
  for (std::size_t k = 0; k < n * n; ++k) s.add(q_[base + k]);
  return std::min(1.0, s.value());
}

FiniteCoupling::Matrix FiniteCoupling::coupled_matrix() const {
  return coupled_transition<double>(pi_.matrix(), q_);
}

SubKernel<int> FiniteCoupling::sub_kernel() const {
  const auto self = std::make_shared<const FiniteCoupling>(*this);
  const std::size_t n = size();
  SubKernel<int> sub;
  sub.mass = [self](const int& x, const int& y) { return self->mass(x, y); };
  sub.sample_given_fire = [self, n](const int& x, const int& y, Rng& rng) {
    const std::size_t base = (static_cast<std::size_t>(x) * n + y) * n * n;
    const std::span<const double> row(self->q_.data() + base, n * n);
    const std::size_t k = rng.categorical(row, self->mass(x, y));
    return std::pair<int, int>(static_cast<int>(k / n), static_cast<int>(k % n));
  };
  auto leftover = [self, n](int x, int y, bool first, Rng& rng) {
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      double used = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        used += first ? self->q(x, y, static_cast<int>(u), static_cast<int>(v))
                      : self->q(x, y, static_cast<int>(v), static_cast<int>(u));
      }
      w[u] = std::max(0.0, self->pi_.matrix()[first ? x : y][u] - used);
      total += w[u];
    }
    require(total > 0.0, "finite coupling: leftover marginal has no mass", ErrorCode::internal);
    return static_cast<int>(rng.categorical(w, total));
  };
  sub.leftover_first = [leftover](const int& x, const int& y, Rng& rng) { return leftover(x, y, true, rng); };
  sub.leftover_second = [leftover](const int& x, const int& y, Rng& rng) { return leftover(x, y, false, rng); };
  return sub;
}

CoupledKernel<int> FiniteCoupling::coupled_kernel() const {
  return CoupledKernel<int>(pi_.kernel(), sub_kernel(), ResidualMode::independent);
}

}  // namespace mclt
