/* Copyright 2026 The Interact Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef INTERACT_RNG_H_
#define INTERACT_RNG_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

namespace interact {

// Counter-based generator: output k of stream (seed, index, stream) is
// SplitMix64(key ^ SplitMix64(k)), so any stream can be regenerated without
// replaying others. Normals use Box-Muller on two consecutive uniforms.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream)
      : key_(Mix(Mix(Mix(seed) ^ (index * 0xd1b54a32d192ed03ULL)) ^
                 (stream * 0x8cb92ba72f3d8dd7ULL))) {}

  static constexpr std::uint64_t Mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t NextU64() { return Mix(key_ ^ Mix(counter_++)); }

  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  std::size_t Index(std::size_t n) {
    return n == 0 ? 0 : static_cast<std::size_t>(Uniform() * static_cast<double>(n));
  }
  bool Bernoulli(double p) { return Uniform() < p; }
  double Normal() {
    const double u1 = 1.0 - Uniform();  // (0, 1]
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace interact

#endif  // INTERACT_RNG_H_
