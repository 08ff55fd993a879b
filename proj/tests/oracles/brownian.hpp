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

// Brownian motion on a fine grid, for the law of the running maximum.

#ifndef MCLT_TESTS_BROWNIAN_HPP
#define MCLT_TESTS_BROWNIAN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

/// sup_{[0,1]} W from `paths` walks of `grid` Gaussian steps. Within each
/// step the maximum of the Brownian bridge between the two grid values is
/// drawn exactly, (a + b + sqrt((b - a)^2 - 2 dt log U)) / 2, so the sample
/// carries no discretization bias.
inline std::vector<double> brownian_sup(std::size_t paths, std::size_t grid, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  const double dt = 1.0 / static_cast<double>(grid);
  std::normal_distribution<double> normal(0.0, std::sqrt(dt));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> out(paths);
  for (auto& sup : out) {
    double w = 0.0, top = 0.0;
    for (std::size_t k = 0; k < grid; ++k) {
      const double next = w + normal(engine);
      const double u = 1.0 - uniform(engine);
      const double gap = next - w;
      top = std::max(top, 0.5 * (w + next + std::sqrt(gap * gap - 2.0 * dt * std::log(u))));
      w = next;
    }
    sup = top;
  }
  return out;
}

/// Two-sample Kolmogorov-Smirnov distance.
inline double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace oracle

#endif  // MCLT_TESTS_BROWNIAN_HPP
