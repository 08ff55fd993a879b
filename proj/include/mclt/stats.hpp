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

#ifndef MCLT_STATS_HPP
#define MCLT_STATS_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace mclt {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Monte-Carlo mean with its standard error.
struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

/// Sample mean and standard error (sample variance with n - 1). Values are
/// reduced in the given order with compensated summation.
Estimate summarize(std::span<const double> values);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of y on x. Requires at least two distinct x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

double normal_cdf(double x) noexcept;

/// Asymptotic Kolmogorov survival function P(K > t).
double kolmogorov_survival(double t) noexcept;

}  // namespace mclt

#endif  // MCLT_STATS_HPP
