// Copyright 2026 The DPCL Authors
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

#ifndef DPCL_RNG_H_
#define DPCL_RNG_H_

#include <cstdint>
#include <random>

namespace dpcl {

// Every random draw in the library is a pure function of a seed. Seeds for
// sub-computations (a release, a task, a repeat) are derived from a parent
// seed and a counter, so no generator state is ever shared.

constexpr std::uint64_t MixSeed(std::uint64_t x) {
  // SplitMix64 finalizer.
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t index) {
  return MixSeed(MixSeed(parent) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

using Rng = std::mt19937_64;

inline Rng MakeRng(std::uint64_t seed) { return Rng(MixSeed(seed)); }

// Uniform draw in [0, 1) with 53 random bits.
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace dpcl

#endif  // DPCL_RNG_H_
