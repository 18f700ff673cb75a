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

#include "teams/memory.hpp"

#include <string>

#include "teams/errors.hpp"

namespace teams {

void MemoryBank::push_batch(const Mat& embeddings, std::span<const TreatmentId> treatments,
                            std::span<const VariationGroupId> groups, long step) {
  if (embeddings.rows > 0 && embeddings.cols != embed_dim_) {
    throw DimensionMismatch("memory bank holds " + std::to_string(embed_dim_) +
                            "-d embeddings, got " + std::to_string(embeddings.cols));
  }
  if (treatments.size() != embeddings.rows || groups.size() != embeddings.rows) {
    throw DimensionMismatch("memory push: label count does not match embedding rows");
  }
  for (std::size_t i = 0; i < embeddings.rows; ++i) {
    auto row = embeddings.row(i);
    entries_.push_back({Vec(row.begin(), row.end()), treatments[i], groups[i], step});
  }
  while (entries_.size() > capacity_) entries_.pop_front();
}

}  // namespace teams
