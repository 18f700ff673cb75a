// Copyright 2026 The TEAMs Embedding Authors
// SPDX-License-Identifier: Apache-2.0
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

// Portable random streams.
//
// The standard library distributions are implementation-defined, so the
// generator and the Gaussian transform are spelled out here:
//
//   word_i   = splitmix64_mix(key + (i + 1) * 0x9E3779B97F4A7C15)   (i = 0, 1, ...)
//   uniform  = (word >> 11) * 2^-53                                   in [0, 1)
//   gaussian = Box-Muller on (u1, u2) with u1 = ((w1 >> 11) + 1) * 2^-53 in (0, 1]:
//              r = sqrt(-2 ln u1); z0 = r cos(2 pi u2), z1 = r sin(2 pi u2)
//              z0 is returned first, z1 is cached for the next call.
//   below(n) = next_u64() % n after rejecting the biased tail of the range.
//
// Any implementation following the above reproduces the same datasets.

#pragma once

#include <cstdint>
#include <optional>

namespace teams {

std::uint64_t splitmix64_mix(std::uint64_t z);

/// Combine a seed with stream labels into a new key; used to derive
/// independent sub-streams (per epoch, per purpose) from one user seed.
std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  double uniform();
  double gaussian();
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> cached_;
};

}  // namespace teams
