// Copyright 2026 The rewafl-sim Authors
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

#pragma once

/// @file rng.hpp
/// @brief Keyed random streams.
///
/// Every random draw in the simulator comes from an engine seeded by
/// `derive_seed(seed, a, b, tag)`, where `seed` is the run seed, `a` and `b`
/// are usually a device key and a round number, and `tag` names the purpose.
/// Two draws with different purposes never share a stream, and the result of
/// a draw does not depend on the order in which devices are processed.

#include <cstdint>
#include <random>

namespace rewafl {

enum class StreamTag : std::uint64_t {
  link_rate = 0x11,
  local_train = 0x12,
  random_select = 0x13,
  fleet = 0x14,
  partition = 0x15,
  dataset = 0x16,
  model_init = 0x17,
  backend = 0x18,
};

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b, StreamTag tag) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x632BE59BD9B4E019ULL));
  return h;
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          StreamTag tag) {
  return Engine{derive_seed(seed, a, b, tag)};
}

}  // namespace rewafl
