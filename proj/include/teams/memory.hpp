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

// Cross-batch feature memory: a bounded FIFO of detached embeddings.

#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "teams/model.hpp"
#include "teams/numerics.hpp"

namespace teams {

struct MemoryEntry {
  Vec embedding;
  TreatmentId treatment = 0;
  VariationGroupId group = 0;
  long inserted_step = 0;

  friend bool operator==(const MemoryEntry&, const MemoryEntry&) = default;
};

class MemoryBank {
 public:
  /// capacity 0 is a disabled bank that never retains anything.
  MemoryBank(std::size_t capacity, std::size_t embed_dim)
      : capacity_(capacity), embed_dim_(embed_dim) {}

  /// Appends rows of `embeddings` in row order, then evicts the oldest
  /// entries until size() <= capacity(). Throws DimensionMismatch.
  void push_batch(const Mat& embeddings, std::span<const TreatmentId> treatments,
                  std::span<const VariationGroupId> groups, long step);

  /// Oldest-first copy.
  std::vector<MemoryEntry> snapshot() const { return {entries_.begin(), entries_.end()}; }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t embed_dim() const { return embed_dim_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::size_t capacity_;
  std::size_t embed_dim_;
  std::deque<MemoryEntry> entries_;
};

}  // namespace teams
