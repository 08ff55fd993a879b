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

#ifndef MCLT_EMPIRICAL_MEASURE_HPP
#define MCLT_EMPIRICAL_MEASURE_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mclt/error.hpp"
#include "mclt/stats.hpp"

namespace mclt {

/// Finitely supported probability measure: atoms with nonnegative weights
/// summing to one.
template <class State>
class EmpiricalMeasure {
 public:
  struct Atom {
    State point;
    double weight;
  };

  EmpiricalMeasure() = default;

  explicit EmpiricalMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    validate();
  }

  /// Equal weights 1/n on each point.
  static EmpiricalMeasure uniform(const std::vector<State>& points) {
    require(!points.empty(), "empirical measure needs at least one atom");
    std::vector<Atom> atoms;
    atoms.reserve(points.size());
    const double w = 1.0 / static_cast<double>(points.size());
    for (const auto& p : points) atoms.push_back({p, w});
    return EmpiricalMeasure(std::move(atoms));
  }

  static EmpiricalMeasure dirac(const State& point) { return EmpiricalMeasure({{point, 1.0}}); }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }

  template <class Fn>
  double integrate(Fn&& f) const {
    double total = 0.0;
    for (const auto& a : atoms_) total += a.weight * f(a.point);
    return total;
  }

 private:
  void validate() const {
    require(!atoms_.empty(), "empirical measure needs at least one atom");
    CompensatedSum sum;
    for (const auto& a : atoms_) {
      require(a.weight >= 0.0 && std::isfinite(a.weight), "empirical measure weights must be >= 0");
      sum.add(a.weight);
    }
    const double total = sum.value();
    require(std::abs(total - 1.0) <= 1e-12,
            "empirical measure weights must sum to 1 (got " + std::to_string(total) + ")");
  }

  std::vector<Atom> atoms_;
};

}  // namespace mclt

#endif  // MCLT_EMPIRICAL_MEASURE_HPP
