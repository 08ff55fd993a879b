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

#include "mclt/stats.hpp"

#include <cmath>

#include "mclt/error.hpp"

namespace mclt {

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

Estimate summarize(std::span<const double> values) {
  Estimate out;
  out.count = values.size();
  if (values.empty()) return out;
  CompensatedSum sum;
  for (double v : values) sum.add(v);
  out.mean = sum.value() / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  CompensatedSum squares;
  for (double v : values) {
    const double d = v - out.mean;
    squares.add(d * d);
  }
  const double n = static_cast<double>(values.size());
  const double variance = squares.value() / (n - 1.0);
  out.stderr_ = std::sqrt(variance / n);
  return out;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "least_squares: x and y differ in length");
  require(x.size() >= 2, "least_squares: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  require(sxx > 0.0, "least_squares: x values are all equal");
  LinearFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - (fit.intercept + fit.slope * x[k]);
    ssr += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  if (x.size() > 2) fit.slope_stderr = std::sqrt(ssr / (n - 2.0) / sxx);
  return fit;
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_survival(double t) noexcept {
  if (t <= 0.0) return 1.0;
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  const double p = 2.0 * sum;
  return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

}  // namespace mclt
