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

// The embedding network: an MLP encoder standing in for the image backbone,
// one linear projection ("expert") per technical-variation group, and one
// learnable exemplar per training treatment.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "teams/kernels.hpp"
#include "teams/numerics.hpp"

namespace teams {

using TreatmentId = std::int64_t;
using MechanismId = std::int64_t;
using VariationGroupId = std::int64_t;

struct EncoderConfig {
  std::size_t input_dim = 24;
  std::vector<std::size_t> hidden_dims = {64};
  std::size_t output_dim = 32;  // base feature dimension

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct DenseLayer {
  Mat weight;  // out x in
  Vec bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Every trainable tensor of the model. Gradients use the same type.
struct Params {
  std::vector<DenseLayer> encoder;
  std::vector<Mat> experts;  // indexed by expert slot, each embed_dim x base_dim
  Mat exemplars;             // one row per exemplar slot, stored unnormalized

  Params zeros_like() const;
  /// Flat views over every tensor, in a fixed order.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
  /// this += other (same shapes).
  void add(const Params& other);
  void scale(double s);
  bool same_shape(const Params& other) const;

  friend bool operator==(const Params&, const Params&) = default;
};

struct ModelState {
  EncoderConfig config;
  std::size_t embed_dim = 0;
  // When set, a single projection serves every variation group (the
  // non-MoE ablations and baselines).
  bool shared_expert = false;
  // exemplar_treatments[k] is the treatment owning exemplar row k; sorted.
  std::vector<TreatmentId> exemplar_treatments;
  Params params;

  std::size_t base_dim() const { return config.output_dim; }
  std::size_t expert_count() const { return params.experts.size(); }
  std::size_t exemplar_count() const { return exemplar_treatments.size(); }

  /// Expert slot used for cells of `group`. Throws UnknownGroup.
  std::size_t route(VariationGroupId group) const;
  /// Exemplar row of `treatment`. Throws UnknownTreatment.
  std::size_t exemplar_index(TreatmentId treatment) const;
  /// Exemplars normalized to unit rows.
  Mat normalized_exemplars() const;

  friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// Glorot-uniform weights, zero biases, Gaussian-direction exemplars.
/// `treatments` exemplars are created for ids 0 .. treatments-1.
ModelState init_model(const EncoderConfig& config, std::size_t groups, std::size_t treatments,
                      std::size_t embed_dim, std::uint64_t seed);

/// As above but with explicit exemplar treatment ids (sorted, unique).
ModelState init_model(const EncoderConfig& config, std::size_t groups,
                      std::vector<TreatmentId> treatment_ids, std::size_t embed_dim,
                      std::uint64_t seed, bool shared_expert = false);

/// Base feature f(x).
Vec encode(const ModelState& state, std::span<const double> features);
/// Unit-norm W_v f(x).
Vec expert_embed(const ModelState& state, std::span<const double> features,
                 VariationGroupId group);
/// Unit-norm W_slot f(x), addressing the expert by slot rather than group.
Vec expert_embed_slot(const ModelState& state, std::span<const double> features,
                      std::size_t slot);
/// Per-expert unit embeddings concatenated in ascending slot order.
Vec concat_embed(const ModelState& state, std::span<const double> features);

/// Activations of one batch, kept for the backward pass.
struct BatchForward {
  std::vector<Mat> pre;   // pre-activation of every encoder layer
  std::vector<Mat> post;  // post[0] = input, post[l+1] = act(pre[l]); back() = base features
  std::vector<std::size_t> route;
  Mat projected;  // W_route h, before normalization
  Vec norms;
  Mat embeddings;  // unit rows

  const Mat& base() const { return post.back(); }
};

/// `inputs` is batch x input_dim, `route` holds expert slots.
BatchForward forward_batch(const ModelState& state, const Mat& inputs,
                           std::span<const std::size_t> route,
                           kernels::Exec exec = kernels::Exec::parallel);

/// Encoder only (no projection).
BatchForward encode_batch(const ModelState& state, const Mat& inputs,
                          kernels::Exec exec = kernels::Exec::parallel);

/// Back-propagates dL/d(embeddings) (may be empty) and an optional extra
/// dL/d(base) into encoder and expert gradients, accumulating into `grads`.
void backward_batch(const ModelState& state, const BatchForward& fwd, const Mat& grad_embeddings,
                    const Mat* grad_base, Params& grads,
                    kernels::Exec exec = kernels::Exec::parallel);

}  // namespace teams
