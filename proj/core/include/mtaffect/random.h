// Copyright 2026 The mtaffect Authors.
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

#ifndef MTAFFECT_RANDOM_H_
#define MTAFFECT_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace mtaffect {

// Pinned pseudo-random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard. The standard distributions are not
// portable across library implementations, so every derived draw is defined
// here explicitly:
//
//   uniform()      = (next() >> 11) * 2^-53                in [0, 1)
//   index(n)       = rejection-sampled next() mod n        in [0, n)
//   normal()       = Box-Muller on two uniform() draws, caching the sine half
//
// Identical seeds give identical streams on every conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t index(std::uint64_t n);

  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Fisher-Yates, iterating from the back.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent seed for a named sub-stream (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace mtaffect

#endif  // MTAFFECT_RANDOM_H_
