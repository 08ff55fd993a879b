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

#include "mclt/core_kernels.hpp"

#include <cmath>
#include <memory>
#include <utility>

namespace mclt {

namespace {

void validate_stochastic(const FiniteKernel::Matrix& m) {
  require(!m.empty(), "finite kernel: matrix must be nonempty");
  for (std::size_t i = 0; i < m.size(); ++i) {
    require(m[i].size() == m.size(), "finite kernel: matrix must be square");
    double total = 0.0;
    for (double p : m[i]) {
      require(p >= 0.0 && std::isfinite(p), "finite kernel: entries must be nonnegative");
      total += p;
    }
    require(std::abs(total - 1.0) <= 1e-12,
            "finite kernel: row " + std::to_string(i) + " does not sum to 1");
  }
}

FiniteKernel::Matrix discrete_metric(std::size_t n) {
  FiniteKernel::Matrix d(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  return d;
}

}  // namespace

FiniteKernel::FiniteKernel(Matrix transition)
    : FiniteKernel(transition, discrete_metric(transition.size())) {}

FiniteKernel::FiniteKernel(Matrix transition, Matrix distance)
    : transition_(std::move(transition)), distance_(std::move(distance)) {
  validate_stochastic(transition_);
  require(distance_.size() == transition_.size(), "finite kernel: distance matrix has wrong size");
  for (std::size_t i = 0; i < distance_.size(); ++i) {
    require(distance_[i].size() == distance_.size(), "finite kernel: distance matrix must be square");
    require(distance_[i][i] == 0.0, "finite kernel: distance must vanish on the diagonal");
  }
}

MetricSpace<int> FiniteKernel::space() const {
  auto d = std::make_shared<const Matrix>(distance_);
  return {[d](const int& a, const int& b) { return (*d)[a][b]; },
          "finite space of " + std::to_string(size()) + " states"};
}

Kernel<int> FiniteKernel::kernel() const {
  // Inverse-CDF sampling over the row; cumulative rows are precomputed.
  auto cumulative = std::make_shared<Matrix>(transition_);
  for (auto& row : *cumulative) {
    double acc = 0.0;
    for (double& p : row) {
      acc += p;
      p = acc;
    }
  }
  return Kernel<int>(
      [cumulative](const int& x, Rng& rng) {
        const auto& row = (*cumulative)[x];
        const double u = rng.uniform() * row.back();
        for (std::size_t j = 0; j + 1 < row.size(); ++j) {
          if (u < row[j]) return static_cast<int>(j);
        }
        return static_cast<int>(row.size() - 1);
      },
      space());
}

FiniteKernel cycle_kernel(std::size_t n) {
  FiniteKernel::Matrix m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) m[i][(i + 1) % n] = 1.0;
  return FiniteKernel(std::move(m));
}

FiniteKernel two_state_kernel(double p, double q) {
  require(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0,
          "two_state_kernel: probabilities must lie in [0, 1]");
  return FiniteKernel({{1.0 - p, p}, {q, 1.0 - q}});
}

std::vector<double> stationary_distribution(const FiniteKernel& kernel) {
  const std::size_t n = kernel.size();
  // Rows of (P^T - I), the last one replaced by the normalization.
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = kernel.matrix()[j][i] - (i == j ? 1.0 : 0.0);
  }
  for (std::size_t j = 0; j <= n; ++j) a[n - 1][j] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    require(std::abs(a[piv][c]) > 1e-13, "stationary_distribution: invariant law is not unique");
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j <= n; ++j) a[r][j] -= f * a[c][j];
    }
  }
  std::vector<double> pi(n);
  for (std::size_t i = 0; i < n; ++i) pi[i] = a[i][n] / a[i][i];
  return pi;
}

}  // namespace mclt
