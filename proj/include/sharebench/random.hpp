// Copyright 2026 The ShareBench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHAREBENCH_RANDOM_HPP_
#define SHAREBENCH_RANDOM_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace sharebench {

using Rng = std::mt19937_64;

constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Mixes a master seed with any number of integer coordinates (sweep point,
// repetition, sample index, ...) into an independent stream seed.
template <typename... Parts>
constexpr std::uint64_t DeriveSeed(std::uint64_t master, Parts... parts) {
  std::uint64_t h = SplitMix64(master);
  ((h = SplitMix64(h ^ static_cast<std::uint64_t>(parts))), ...);
  return h;
}

inline double Uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double StandardNormal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

// Uniform index in [0, n).
inline std::size_t UniformIndex(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// k distinct positions out of [0, n), in draw order (partial Fisher-Yates).
inline std::vector<std::size_t> SampleWithoutReplacement(std::size_t n,
                                                         std::size_t k,
                                                         Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  if (k > n) k = n;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + UniformIndex(rng, n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

// ceil() that ignores floating noise just above an integer, so that e.g.
// 10 * (1 - 0.7) counts as 3 rather than 4.
inline std::size_t StableCeil(double v) {
  const double r = std::round(v);
  if (std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v))) {
    return static_cast<std::size_t>(std::max(0.0, r));
  }
  return static_cast<std::size_t>(std::max(0.0, std::ceil(v)));
}

}  // namespace sharebench

#endif  // SHAREBENCH_RANDOM_HPP_
