// Copyright 2026 The Threatscope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Deterministic randomness helpers. Distribution code lives here rather
// than going through std::uniform_*_distribution, whose output is
// implementation-defined; artifacts must be byte-identical under a fixed
// seed regardless of the standard library that built them.

#ifndef THREATSCOPE_RNG_HPP_
#define THREATSCOPE_RNG_HPP_

#include <cstdint>
#include <random>
#include <vector>

namespace threatscope {

using Rng = std::mt19937_64;

// Unbiased integer in [0, n) via rejection sampling. n must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_real(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
inline double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_real(rng);
}

// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
    if (j != i - 1) std::swap(items[i - 1], items[j]);
  }
}

}  // namespace threatscope

#endif  // THREATSCOPE_RNG_HPP_
