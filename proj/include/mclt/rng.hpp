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

#ifndef MCLT_RNG_HPP
#define MCLT_RNG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace mclt {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of stream `index` within the family `tag` of a master seed. Replica r
/// of any operation always receives the same seed, whatever the worker count.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(master ^ mix64(tag)) + mix64(index + 0x632be59bd9b4e019ULL));
}

/// Stream tags, so that distinct sub-computations of one experiment never
/// share a random stream.
namespace stream {
inline constexpr std::uint64_t replica = 1;
inline constexpr std::uint64_t auxiliary = 2;
inline constexpr std::uint64_t stationary = 3;
inline constexpr std::uint64_t coupling = 4;
inline constexpr std::uint64_t condition = 5;
inline constexpr std::uint64_t grid = 6;
inline constexpr std::uint64_t center = 7;
}  // namespace stream

/// Per-stream generator. Draws are a pure function of the seed and the
/// number of draws already taken.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe as a log argument.
  double uniform_pos() { return 1.0 - uniform(); }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  double normal() { return normal_(engine_); }

  /// Index drawn from an unnormalized nonnegative weight vector.
  template <class Weights>
  std::size_t categorical(const Weights& w, double total) {
    const double u = uniform() * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k] <= 0.0) continue;
      acc += w[k];
      last = k;
      if (u < acc) return k;
    }
    return last;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Each index is
/// processed exactly once; callers write results into slot i and reduce in
/// index order, which keeps outputs independent of the worker count.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  if (count == 0) return;
  const std::size_t nthreads =
      std::min<std::size_t>(count, static_cast<std::size_t>(workers < 1 ? 1 : workers));
  if (nthreads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += nthreads) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace mclt

#endif  // MCLT_RNG_HPP
