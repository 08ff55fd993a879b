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

#include <array>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "matrix_oracles.hpp"
#include "mclt/core_kernels.hpp"

namespace mclt {
namespace {

TEST(Rng, DerivedSeedsDifferAcrossTagsAndIndices) {
  EXPECT_NE(derive_seed(1, stream::replica, 0), derive_seed(1, stream::replica, 1));
  EXPECT_NE(derive_seed(1, stream::replica, 0), derive_seed(1, stream::auxiliary, 0));
  EXPECT_NE(derive_seed(1, stream::replica, 0), derive_seed(2, stream::replica, 0));
  EXPECT_EQ(derive_seed(7, stream::grid, 3), derive_seed(7, stream::grid, 3));
}

TEST(Rng, UniformStaysInRange) {
  Rng rng(3);
  for (int k = 0; k < 100000; ++k) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_GT(rng.uniform_pos(), 0.0);
  }
}

TEST(Rng, ParallelForVisitsEachIndexOnce) {
  std::vector<int> hits(1001, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Rng, ParallelForPropagatesExceptions) {
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { require(i != 7, "boom"); }), Error);
}

TEST(FiniteKernel, RejectsNonStochasticRows) {
  EXPECT_THROW(FiniteKernel({{0.5, 0.4}, {0.5, 0.5}}), Error);
  EXPECT_THROW(FiniteKernel({{1.2, -0.2}, {0.5, 0.5}}), Error);
  EXPECT_THROW(FiniteKernel(FiniteKernel::Matrix{{1.0}, {1.0}}), Error);
}

TEST(SimulateChain, CycleIsDeterministic) {
  const auto traj = simulate_chain(cycle_kernel(3).kernel(), 0, 3, 11);
  EXPECT_EQ(traj.states, (std::vector<int>{0, 1, 2, 0}));
  EXPECT_EQ(traj.steps(), 3u);
}

TEST(SimulateChain, ZeroStepsKeepsInitialState) {
  const auto traj = simulate_chain(two_state_kernel(0.3, 0.6).kernel(), 1, 0, 5);
  EXPECT_EQ(traj.states, std::vector<int>{1});
}

TEST(SimulateChain, IdentityKernelIsConstant) {
  const auto traj = simulate_chain(identity_kernel(real_line()), 2.5, 10, 5);
  for (double s : traj.states) EXPECT_EQ(s, 2.5);
}

TEST(SimulateChain, ReplaysFromSeed) {
  const auto k = two_state_kernel(0.3, 0.6).kernel();
  EXPECT_EQ(simulate_chain(k, 0, 500, 42).states, simulate_chain(k, 0, 500, 42).states);
  EXPECT_NE(simulate_chain(k, 0, 500, 42).states, simulate_chain(k, 0, 500, 43).states);
}

TEST(SimulateChain, TwoStateOccupationMatchesStationaryLaw) {
  const auto traj = simulate_chain(two_state_kernel(0.3, 0.6).kernel(), 0, 200000, 8);
  double ones = 0.0;
  for (std::size_t k = 1; k < traj.states.size(); ++k) ones += traj.states[k];
  // pi(1) = 0.3 / 0.9
  EXPECT_NEAR(ones / traj.steps(), 1.0 / 3.0, 0.01);
}

TEST(StationaryDistribution, MatchesEigenOracle) {
  const FiniteKernel k({{0.5, 0.3, 0.2}, {0.1, 0.8, 0.1}, {0.25, 0.25, 0.5}});
  const auto pi = stationary_distribution(k);
  const auto exact = oracle::stationary(oracle::to_eigen(k.matrix()));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(pi[i], exact(i), 1e-12);
}

TEST(Pushforward, ZeroStepsReturnsInput) {
  const auto mu = EmpiricalMeasure<int>({{0, 0.25}, {2, 0.75}});
  const auto out = estimate_pushforward(cycle_kernel(3).kernel(), mu, 0, 1);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.atoms()[1].point, 2);
  EXPECT_EQ(out.atoms()[1].weight, 0.75);
}

TEST(Pushforward, IdentityLeavesMeasureUnchanged) {
  const auto mu = EmpiricalMeasure<double>::uniform({1.0, -3.0, 4.5});
  const auto out = estimate_pushforward(identity_kernel(real_line()), mu, 7, 1);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(out.atoms()[k].point, mu.atoms()[k].point);
}

TEST(Pushforward, CycleTwoStepsFromZero) {
  const auto out = estimate_pushforward(cycle_kernel(3).kernel(), EmpiricalMeasure<int>::dirac(0), 2, 1);
  EXPECT_EQ(out.atoms()[0].point, 2);
  EXPECT_EQ(out.atoms()[0].weight, 1.0);
}

TEST(Pushforward, RejectsEmptyMeasure) {
  EXPECT_THROW(estimate_pushforward(cycle_kernel(3).kernel(), EmpiricalMeasure<int>(), 1, 1), Error);
}

TEST(EstimateDual, ConstantFunctionHasNoError) {
  const auto e = estimate_dual(two_state_kernel(0.3, 0.6).kernel(), [](int) { return 1.0; }, 0, 3, 100, 1);
  EXPECT_EQ(e.mean, 1.0);
  EXPECT_EQ(e.stderr_, 0.0);
}

TEST(EstimateDual, IdentityKernelReturnsF) {
  const auto e = estimate_dual(identity_kernel(real_line()), [](double x) { return x * x; }, 3.0, 5, 10, 1);
  EXPECT_EQ(e.mean, 9.0);
}

TEST(EstimateDual, OneStepIndicator) {
  const auto e = estimate_dual(two_state_kernel(0.3, 0.6).kernel(), [](int s) { return s == 1 ? 1.0 : 0.0; }, 0,
                               1, 20000, 4);
  EXPECT_NEAR(e.mean, 0.3, 3.0 * e.stderr_);
}

TEST(EstimateDual, BoundedByTheSupOfF) {
  const auto k = FiniteKernel({{0.2, 0.8}, {0.9, 0.1}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto e = estimate_dual(k.kernel(), [](int s) { return s == 0 ? -2.0 : 1.5; }, 0, 4, 50, seed);
    EXPECT_LE(std::abs(e.mean), 2.0);
  }
}

TEST(EstimateDual, RequiresTwoReplicas) {
  EXPECT_THROW(estimate_dual(identity_kernel(real_line()), [](double x) { return x; }, 0.0, 1, 1, 1), Error);
}

TEST(EstimateDual, IndependentOfWorkerCount) {
  const auto k = two_state_kernel(0.3, 0.6).kernel();
  auto f = [](int s) { return s * 1.0; };
  const auto serial = estimate_dual(k, f, 0, 5, 999, 17, 1);
  const auto threaded = estimate_dual(k, f, 0, 5, 999, 17, 3);
  EXPECT_EQ(serial.mean, threaded.mean);
  EXPECT_EQ(serial.stderr_, threaded.stderr_);
}

TEST(ChapmanKolmogorov, TwoStepSamplesMatchSquaredMatrix) {
  const FiniteKernel k({{0.5, 0.3, 0.2}, {0.1, 0.8, 0.1}, {0.25, 0.25, 0.5}});
  const auto p2 = oracle::power(oracle::to_eigen(k.matrix()), 2);
  constexpr std::size_t m = 60000;
  for (int x = 0; x < 3; ++x) {
    std::array<double, 3> counts{};
    for (std::size_t r = 0; r < m; ++r) {
      Rng rng(derive_seed(5, stream::replica, r * 3 + x));
      ++counts[advance(k.kernel(), x, 2, rng)];
    }
    double tv = 0.0;
    for (int u = 0; u < 3; ++u) tv += 0.5 * std::abs(counts[u] / m - p2(x, u));
    // MC scale of the TV of three cells is about 1 / sqrt(m)
    EXPECT_LT(tv, 4.0 / std::sqrt(static_cast<double>(m)));
  }
}

TEST(CheckDrift, ZeroLyapunovAlwaysPasses) {
  const auto rep = check_drift<double>(identity_kernel(real_line()), [](const double&) { return 0.0; },
                                       {0.0, 1.0, 5.0}, 0.3, 0.1, false, 10, 1);
  EXPECT_TRUE(rep.all_pass);
}

TEST(CheckDrift, IdentityWithNormFailsWhenContractionIsClaimed) {
  const auto rep = check_drift<double>(identity_kernel(real_line()), [](const double& x) { return std::abs(x); },
                                       {1.0, -2.0, 3.0}, 0.5, 0.0, false, 10, 1);
  EXPECT_FALSE(rep.all_pass);
  EXPECT_EQ(rep.failures, 3u);
}

TEST(CheckDrift, SquaredFormUsesSquaredBound) {
  const auto rep = check_drift<double>(identity_kernel(real_line()), [](const double& x) { return std::abs(x); },
                                       {2.0}, 0.5, 1.0, true, 10, 1);
  EXPECT_EQ(rep.points[0].bound, 4.0);
  EXPECT_EQ(rep.points[0].estimate.mean, 4.0);
  EXPECT_TRUE(rep.all_pass);
}

TEST(CheckDrift, RejectsBadConstants) {
  auto v = [](const double& x) { return std::abs(x); };
  EXPECT_THROW(check_drift<double>(identity_kernel(real_line()), v, {1.0}, 1.0, 1.0, false, 10, 1), Error);
  EXPECT_THROW(check_drift<double>(identity_kernel(real_line()), v, {1.0}, 0.5, -1.0, false, 10, 1), Error);
  EXPECT_THROW(check_drift<double>(identity_kernel(real_line()), v, {}, 0.5, 1.0, false, 10, 1), Error);
}

}  // namespace
}  // namespace mclt
