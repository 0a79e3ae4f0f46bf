// Copyright 2026 The isouq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ISOUQ_RNG_HPP_
#define ISOUQ_RNG_HPP_

#include <cstdint>
#include <random>

namespace isouq {

/// Generator used everywhere a seed is consumed. mt19937_64 has a fully
/// specified output sequence, so runs are reproducible given a seed.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent substream `stream` of the root `seed`.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5bd1e995ULL)));
}

/// Well-known substream ids, so pipelines never share a stream by accident.
namespace stream {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kHeldOut = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kHmc = 4;
inline constexpr std::uint64_t kLaplace = 5;
inline constexpr std::uint64_t kBootstrap = 6;
inline constexpr std::uint64_t kFisherLabels = 7;
}  // namespace stream

}  // namespace isouq

#endif  // ISOUQ_RNG_HPP_
