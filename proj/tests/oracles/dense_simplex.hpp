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

// Dense tableau simplex with Bland's rule. Slow and simple on purpose: it
// shares no code with the transport solver it checks.

#ifndef MCLT_TESTS_DENSE_SIMPLEX_HPP
#define MCLT_TESTS_DENSE_SIMPLEX_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

/// max c.x subject to A x <= b, x >= 0, with b >= 0 so the origin is feasible.
inline double simplex_max(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                          const std::vector<double>& c) {
  const std::size_t m = A.size(), n = c.size();
  // Tableau columns: n originals, m slacks, rhs.
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(n + m + 1, 0.0));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (b[i] < 0.0) throw std::invalid_argument("simplex_max: b must be nonnegative");
    for (std::size_t j = 0; j < n; ++j) t[i][j] = A[i][j];
    t[i][n + i] = 1.0;
    t[i][n + m] = b[i];
    basis[i] = n + i;
  }
  for (std::size_t j = 0; j < n; ++j) t[m][j] = -c[j];
  constexpr double eps = 1e-12;
  for (int iter = 0; iter < 100000; ++iter) {
    std::size_t enter = n + m;
    for (std::size_t j = 0; j < n + m; ++j) {
      if (t[m][j] < -eps) {
        enter = j;
        break;
      }
    }
    if (enter == n + m) return t[m][n + m];
    std::size_t leave = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      if (t[i][enter] > eps) {
        const double ratio = t[i][n + m] / t[i][enter];
        if (ratio < best - eps || (std::abs(ratio - best) <= eps && leave < m && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave == m) throw std::runtime_error("simplex_max: unbounded");
    const double piv = t[leave][enter];
    for (double& v : t[leave]) v /= piv;
    for (std::size_t i = 0; i <= m; ++i) {
      if (i == leave || t[i][enter] == 0.0) continue;
      const double f = t[i][enter];
      for (std::size_t j = 0; j <= n + m; ++j) t[i][j] -= f * t[leave][j];
    }
    basis[leave] = enter;
  }
  throw std::runtime_error("simplex_max: iteration limit");
}

/// sup over |f| <= 1, |f_i - f_j| <= d(i, j) of sum_i w_i f_i, for weights
/// summing to zero. Uses g = f + 1 in [0, 2].
inline double bounded_lipschitz_lp(const std::vector<double>& w,
                                   const std::function<double(std::size_t, std::size_t)>& dist) {
  const std::size_t n = w.size();
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(n, 0.0);
    row[i] = 1.0;
    A.push_back(row);
    b.push_back(2.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      std::vector<double> row(n, 0.0);
      row[i] = 1.0;
      row[j] = -1.0;
      A.push_back(row);
      b.push_back(dist(i, j));
    }
  }
  double shift = 0.0;
  for (double v : w) shift += v;
  return simplex_max(A, b, w) - shift;
}

}  // namespace oracle

#endif  // MCLT_TESTS_DENSE_SIMPLEX_HPP
