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

#include "teams/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "teams/errors.hpp"
#include "teams/rng.hpp"

namespace teams {

namespace {

constexpr std::uint64_t kModelStream = 0x6d6f64656cULL;  // "model"

void glorot_fill(Mat& m, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
  for (double& w : m.values) w = (2.0 * rng.uniform() - 1.0) * a;
}

Mat single_row(std::span<const double> x) {
  Mat m(1, x.size());
  std::copy(x.begin(), x.end(), m.values.begin());
  return m;
}

}  // namespace

Params Params::zeros_like() const {
  Params z;
  z.encoder.reserve(encoder.size());
  for (const auto& layer : encoder) {
    z.encoder.push_back({Mat(layer.weight.rows, layer.weight.cols), Vec(layer.bias.size(), 0.0)});
  }
  for (const auto& e : experts) z.experts.emplace_back(e.rows, e.cols);
  z.exemplars = Mat(exemplars.rows, exemplars.cols);
  return z;
}

std::vector<std::span<double>> Params::blocks() {
  std::vector<std::span<double>> out;
  for (auto& layer : encoder) {
    out.emplace_back(layer.weight.values);
    out.emplace_back(layer.bias);
  }
  for (auto& e : experts) out.emplace_back(e.values);
  out.emplace_back(exemplars.values);
  return out;
}

std::vector<std::span<const double>> Params::blocks() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : encoder) {
    out.emplace_back(layer.weight.values);
    out.emplace_back(layer.bias);
  }
  for (const auto& e : experts) out.emplace_back(e.values);
  out.emplace_back(exemplars.values);
  return out;
}

bool Params::same_shape(const Params& other) const {
  if (encoder.size() != other.encoder.size() || experts.size() != other.experts.size()) {
    return false;
  }
  for (std::size_t l = 0; l < encoder.size(); ++l) {
    if (!encoder[l].weight.same_shape(other.encoder[l].weight) ||
        encoder[l].bias.size() != other.encoder[l].bias.size()) {
      return false;
    }
  }
  for (std::size_t v = 0; v < experts.size(); ++v) {
    if (!experts[v].same_shape(other.experts[v])) return false;
  }
  return exemplars.same_shape(other.exemplars);
}

void Params::add(const Params& other) {
  if (!same_shape(other)) throw ShapeMismatch("Params::add");
  auto dst = blocks();
  auto src = other.blocks();
  for (std::size_t b = 0; b < dst.size(); ++b) {
    for (std::size_t i = 0; i < dst[b].size(); ++i) dst[b][i] += src[b][i];
  }
}

void Params::scale(double s) {
  for (auto block : blocks()) {
    for (double& x : block) x *= s;
  }
}

std::size_t ModelState::route(VariationGroupId group) const {
  if (group < 0) throw UnknownGroup("negative group id " + std::to_string(group));
  if (shared_expert) return 0;
  if (static_cast<std::size_t>(group) >= params.experts.size()) {
    throw UnknownGroup("no expert for group " + std::to_string(group));
  }
  return static_cast<std::size_t>(group);
}

std::size_t ModelState::exemplar_index(TreatmentId treatment) const {
  auto it = std::lower_bound(exemplar_treatments.begin(), exemplar_treatments.end(), treatment);
  if (it == exemplar_treatments.end() || *it != treatment) {
    throw UnknownTreatment("no exemplar for treatment " + std::to_string(treatment));
  }
  return static_cast<std::size_t>(it - exemplar_treatments.begin());
}

Mat ModelState::normalized_exemplars() const {
  Mat out;
  Vec norms(params.exemplars.rows);
  kernels::normalize_rows(params.exemplars, out, norms, kernels::Exec::serial);
  return out;
}

ModelState init_model(const EncoderConfig& config, std::size_t groups, std::size_t treatments,
                      std::size_t embed_dim, std::uint64_t seed) {
  std::vector<TreatmentId> ids(treatments);
  for (std::size_t t = 0; t < treatments; ++t) ids[t] = static_cast<TreatmentId>(t);
  return init_model(config, groups, std::move(ids), embed_dim, seed);
}

ModelState init_model(const EncoderConfig& config, std::size_t groups,
                      std::vector<TreatmentId> treatment_ids, std::size_t embed_dim,
                      std::uint64_t seed, bool shared_expert) {
  if (config.input_dim == 0 || config.output_dim == 0 || embed_dim == 0 || groups == 0 ||
      treatment_ids.empty()) {
    throw InvalidConfig("model", "dimensions and counts must be >= 1");
  }
  for (std::size_t h : config.hidden_dims) {
    if (h == 0) throw InvalidConfig("model.hidden_dims", "hidden widths must be >= 1");
  }
  if (!std::is_sorted(treatment_ids.begin(), treatment_ids.end()) ||
      std::adjacent_find(treatment_ids.begin(), treatment_ids.end()) != treatment_ids.end()) {
    throw InvalidConfig("model.exemplar_treatments", "ids must be sorted and unique");
  }

  ModelState s;
  s.config = config;
  s.embed_dim = embed_dim;
  s.shared_expert = shared_expert;
  s.exemplar_treatments = std::move(treatment_ids);

  Rng rng(derive_key(seed, kModelStream));
  std::size_t fan_in = config.input_dim;
  std::vector<std::size_t> widths = config.hidden_dims;
  widths.push_back(config.output_dim);
  for (std::size_t width : widths) {
    DenseLayer layer{Mat(width, fan_in), Vec(width, 0.0)};
    glorot_fill(layer.weight, rng);
    s.params.encoder.push_back(std::move(layer));
    fan_in = width;
  }
  const std::size_t n_experts = shared_expert ? 1 : groups;
  for (std::size_t v = 0; v < n_experts; ++v) {
    Mat w(embed_dim, config.output_dim);
    glorot_fill(w, rng);
    s.params.experts.push_back(std::move(w));
  }
  s.params.exemplars = Mat(s.exemplar_treatments.size(), embed_dim);
  for (std::size_t k = 0; k < s.params.exemplars.rows; ++k) {
    Vec g(embed_dim);
    for (double& x : g) x = rng.gaussian();
    const Vec u = l2_normalize(g);
    std::copy(u.begin(), u.end(), s.params.exemplars.row(k).begin());
  }
  return s;
}

BatchForward encode_batch(const ModelState& state, const Mat& inputs, kernels::Exec exec) {
  if (inputs.cols != state.config.input_dim) {
    throw DimensionMismatch("encoder expects " + std::to_string(state.config.input_dim) +
                            " features, got " + std::to_string(inputs.cols));
  }
  BatchForward f;
  const auto& layers = state.params.encoder;
  f.pre.resize(layers.size());
  f.post.reserve(layers.size() + 1);
  f.post.push_back(inputs);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    kernels::affine_forward(layers[l].weight, layers[l].bias, f.post[l], f.pre[l], exec);
    Mat act = f.pre[l];
    if (l + 1 < layers.size()) {
      for (double& x : act.values) x = x < 0.0 ? 0.0 : x;  // keeps NaN
    }
    f.post.push_back(std::move(act));
  }
  return f;
}

BatchForward forward_batch(const ModelState& state, const Mat& inputs,
                           std::span<const std::size_t> route, kernels::Exec exec) {
  BatchForward f = encode_batch(state, inputs, exec);
  for (std::size_t r : route) {
    if (r >= state.params.experts.size()) throw UnknownGroup("expert slot out of range");
  }
  f.route.assign(route.begin(), route.end());
  kernels::routed_forward(state.params.experts, f.route, f.base(), f.projected, exec);
  f.norms.assign(inputs.rows, 0.0);
  kernels::normalize_rows(f.projected, f.embeddings, f.norms, exec);
  return f;
}

void backward_batch(const ModelState& state, const BatchForward& fwd, const Mat& grad_embeddings,
                    const Mat* grad_base, Params& grads, kernels::Exec exec) {
  const auto& layers = state.params.encoder;
  const std::size_t n = fwd.base().rows;
  Mat delta(n, state.base_dim());

  if (!grad_embeddings.empty()) {
    Mat grad_projected;
    kernels::normalize_rows_backward(fwd.embeddings, fwd.norms, grad_embeddings, grad_projected,
                                     exec);
    std::vector<std::vector<std::size_t>> members(state.params.experts.size());
    for (std::size_t i = 0; i < n; ++i) members[fwd.route[i]].push_back(i);
    for (std::size_t v = 0; v < members.size(); ++v) {
      if (members[v].empty()) continue;
      kernels::accumulate_outer(grad_projected, fwd.base(), members[v], grads.experts[v], {},
                                exec);
    }
    kernels::routed_backward_input(state.params.experts, fwd.route, grad_projected, delta, exec);
  }
  if (grad_base != nullptr) {
    if (!grad_base->same_shape(delta)) throw ShapeMismatch("backward_batch: grad_base shape");
    for (std::size_t k = 0; k < delta.values.size(); ++k) delta.values[k] += grad_base->values[k];
  }

  for (std::size_t l = layers.size(); l-- > 0;) {
    if (l + 1 < layers.size()) {
      const Mat& pre = fwd.pre[l];
      for (std::size_t k = 0; k < delta.values.size(); ++k) {
        if (!(pre.values[k] > 0.0)) delta.values[k] = 0.0;
      }
    }
    kernels::accumulate_outer(delta, fwd.post[l], {}, grads.encoder[l].weight,
                              grads.encoder[l].bias, exec);
    if (l > 0) {
      Mat next;
      kernels::affine_backward_input(layers[l].weight, delta, next, exec);
      delta = std::move(next);
    }
  }
}

Vec encode(const ModelState& state, std::span<const double> features) {
  const BatchForward f = encode_batch(state, single_row(features), kernels::Exec::serial);
  return f.base().values;
}

Vec expert_embed_slot(const ModelState& state, std::span<const double> features,
                      std::size_t slot) {
  const std::size_t route[1] = {slot};
  const BatchForward f = forward_batch(state, single_row(features), route, kernels::Exec::serial);
  return f.embeddings.values;
}

Vec expert_embed(const ModelState& state, std::span<const double> features,
                 VariationGroupId group) {
  return expert_embed_slot(state, features, state.route(group));
}

Vec concat_embed(const ModelState& state, std::span<const double> features) {
  if (state.params.experts.empty()) throw UnknownGroup("model has no experts");
  const BatchForward enc = encode_batch(state, single_row(features), kernels::Exec::serial);
  Vec out;
  out.reserve(state.expert_count() * state.embed_dim);
  for (const Mat& w : state.params.experts) {
    const Vec e = l2_normalize(matvec(w, enc.base().row(0)));
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

}  // namespace teams
