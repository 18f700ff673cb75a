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

// Training objectives with analytic gradients.
//
//   exemplar_loss       mean_i -log softmax(-d(e_i, C))[t_i], d = cosine distance,
//                       softmax over every exemplar
//   memory_loss         the same over detached memory entries; gradients reach
//                       the exemplars only
//   total_loss          exemplar_loss + memory_loss
//   triplet_loss        all-pairs hinge mean_{P x N} max(0, m + s_neg - s_pos)
//                       on cosine similarities
//   classification_loss softmax cross-entropy of a linear head over treatments
//   adversarial_penalty cross-entropy of a variation-group classifier on base
//                       features, with encoder gradients reversed and scaled

#pragma once

#include <span>
#include <vector>

#include "teams/kernels.hpp"
#include "teams/memory.hpp"
#include "teams/model.hpp"

namespace teams {

struct BatchItem {
  std::span<const double> features;
  TreatmentId treatment = 0;
  VariationGroupId group = 0;
};

struct LossOutput {
  double value = 0.0;
  Params grads;       // same layout as ModelState::params
  Mat head_grad;      // classifier/head gradient, empty when unused
  Mat embeddings;     // detached unit embeddings of the batch, batch order
};

struct TripletLossConfig {
  double margin = 0.3;
};

LossOutput exemplar_loss(const ModelState& state, std::span<const BatchItem> batch,
                         kernels::Exec exec = kernels::Exec::parallel);

LossOutput memory_loss(const ModelState& state, std::span<const MemoryEntry> entries,
                       kernels::Exec exec = kernels::Exec::parallel);
LossOutput memory_loss(const ModelState& state, const MemoryBank& bank,
                       kernels::Exec exec = kernels::Exec::parallel);

LossOutput total_loss(const ModelState& state, std::span<const BatchItem> batch,
                      std::span<const MemoryEntry> entries,
                      kernels::Exec exec = kernels::Exec::parallel);

LossOutput triplet_loss(const ModelState& state, std::span<const BatchItem> batch,
                        const TripletLossConfig& config,
                        kernels::Exec exec = kernels::Exec::parallel);

/// `head` is exemplar_count() x embed_dim; row k scores exemplar_treatments[k].
LossOutput classification_loss(const ModelState& state, std::span<const BatchItem> batch,
                               const Mat& head, kernels::Exec exec = kernels::Exec::parallel);

/// `clf` is |V| x base_dim. The returned value is the classifier's
/// cross-entropy; grads.encoder holds -scale times its encoder gradient and
/// head_grad holds the ordinary classifier gradient.
LossOutput adversarial_penalty(const ModelState& state, std::span<const BatchItem> batch,
                               const Mat& clf, double scale,
                               kernels::Exec exec = kernels::Exec::parallel);

}  // namespace teams
