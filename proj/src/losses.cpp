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

#include "teams/losses.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>

#include "teams/errors.hpp"

namespace teams {

namespace {

struct PreparedBatch {
  Mat inputs;
  std::vector<std::size_t> route;
};

PreparedBatch prepare(const ModelState& state, std::span<const BatchItem> batch) {
  PreparedBatch p{Mat(batch.size(), state.config.input_dim), {}};
  p.route.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& item = batch[i];
    if (item.features.size() != state.config.input_dim) {
      throw DimensionMismatch("batch item " + std::to_string(i) + " has " +
                              std::to_string(item.features.size()) + " features, expected " +
                              std::to_string(state.config.input_dim));
    }
    std::copy(item.features.begin(), item.features.end(), p.inputs.row(i).begin());
    p.route.push_back(state.route(item.group));
  }
  return p;
}

double ordered_sum(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}

// Softmax-over-exemplars core shared by the exemplar and memory losses.
// Given unit rows `emb` and their exemplar targets, returns the mean loss and
// fills dL/d(emb) and dL/d(raw exemplars).
double exemplar_softmax(const ModelState& state, const Mat& emb,
                        std::span<const std::size_t> targets, Mat* grad_emb, Mat& grad_exemplars,
                        kernels::Exec exec) {
  const std::size_t n = emb.rows;
  const std::size_t t = state.exemplar_count();
  Mat unit_exemplars;
  Vec exemplar_norms(t);
  kernels::normalize_rows(state.params.exemplars, unit_exemplars, exemplar_norms, exec);

  Mat sims;
  kernels::gram(emb, unit_exemplars, sims, exec);

  // dL/ds_iy = (p_iy - [y == t_i]) / n
  Mat grad_sims(n, t);
  Vec losses(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  auto per_row = [&](std::size_t i) {
    Vec dist(t);
    for (std::size_t y = 0; y < t; ++y) dist[y] = 1.0 - sims(i, y);
    losses[i] = stable_softmax_nll(dist, targets[i]);
    auto g = grad_sims.row(i);
    softmax_of_negated(dist, g);
    g[targets[i]] -= 1.0;
    for (double& x : g) x *= inv_n;
  };
  const auto rows = static_cast<std::ptrdiff_t>(n);
  if (exec == kernels::Exec::parallel && n * t >= 4096) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) per_row(static_cast<std::size_t>(i));
  } else {
    for (std::ptrdiff_t i = 0; i < rows; ++i) per_row(static_cast<std::size_t>(i));
  }

  if (grad_emb != nullptr) kernels::affine_backward_input(unit_exemplars, grad_sims, *grad_emb, exec);

  Mat grad_unit(t, state.embed_dim);
  kernels::accumulate_outer(grad_sims, emb, {}, grad_unit, {}, exec);
  kernels::normalize_rows_backward(unit_exemplars, exemplar_norms, grad_unit, grad_exemplars, exec);

  return ordered_sum(losses) * inv_n;
}

// Cross-entropy of logits = features . weights^T against class `targets`.
double linear_softmax_ce(const Mat& features, const Mat& weights,
                         std::span<const std::size_t> targets, Mat& grad_features,
                         Mat& grad_weights, kernels::Exec exec) {
  const std::size_t n = features.rows;
  const std::size_t k = weights.rows;
  Mat logits;
  kernels::gram(features, weights, logits, exec);
  Mat grad_logits(n, k);
  Vec losses(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec neg(k);
    for (std::size_t c = 0; c < k; ++c) neg[c] = -logits(i, c);
    losses[i] = stable_softmax_nll(neg, targets[i]);
    auto g = grad_logits.row(i);
    softmax_of_negated(neg, g);
    g[targets[i]] -= 1.0;
    for (double& x : g) x *= inv_n;
  }
  kernels::affine_backward_input(weights, grad_logits, grad_features, exec);
  grad_weights = Mat(k, features.cols);
  kernels::accumulate_outer(grad_logits, features, {}, grad_weights, {}, exec);
  return ordered_sum(losses) * inv_n;
}

LossOutput zero_output(const ModelState& state) {
  LossOutput out;
  out.grads = state.params.zeros_like();
  out.embeddings = Mat(0, state.embed_dim);
  return out;
}

// Deterministic canonical order of a batch: by treatment, group, then the
// feature vector lexicographically. Makes pair enumeration independent of
// the caller's ordering.
std::vector<std::size_t> canonical_order(std::span<const BatchItem> batch) {
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = batch[a];
    const auto& y = batch[b];
    if (x.treatment != y.treatment) return x.treatment < y.treatment;
    if (x.group != y.group) return x.group < y.group;
    return std::lexicographical_compare(x.features.begin(), x.features.end(), y.features.begin(),
                                        y.features.end());
  });
  return idx;
}

}  // namespace

LossOutput exemplar_loss(const ModelState& state, std::span<const BatchItem> batch,
                         kernels::Exec exec) {
  LossOutput out = zero_output(state);
  if (batch.empty()) return out;

  const PreparedBatch p = prepare(state, batch);
  std::vector<std::size_t> targets;
  targets.reserve(batch.size());
  for (const auto& item : batch) targets.push_back(state.exemplar_index(item.treatment));

  const BatchForward fwd = forward_batch(state, p.inputs, p.route, exec);
  Mat grad_emb;
  out.value = exemplar_softmax(state, fwd.embeddings, targets, &grad_emb, out.grads.exemplars, exec);
  backward_batch(state, fwd, grad_emb, nullptr, out.grads, exec);
  out.embeddings = fwd.embeddings;
  return out;
}

LossOutput memory_loss(const ModelState& state, std::span<const MemoryEntry> entries,
                       kernels::Exec exec) {
  LossOutput out = zero_output(state);
  if (entries.empty()) return out;

  Mat stored(entries.size(), state.embed_dim);
  std::vector<std::size_t> targets;
  targets.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].embedding.size() != state.embed_dim) {
      throw DimensionMismatch("memory entry has dim " +
                              std::to_string(entries[i].embedding.size()));
    }
    std::copy(entries[i].embedding.begin(), entries[i].embedding.end(), stored.row(i).begin());
    targets.push_back(state.exemplar_index(entries[i].treatment));
  }
  Mat unit;
  Vec norms(entries.size());
  kernels::normalize_rows(stored, unit, norms, exec);
  out.value = exemplar_softmax(state, unit, targets, nullptr, out.grads.exemplars, exec);
  return out;
}

LossOutput memory_loss(const ModelState& state, const MemoryBank& bank, kernels::Exec exec) {
  const auto entries = bank.snapshot();
  return memory_loss(state, entries, exec);
}

LossOutput total_loss(const ModelState& state, std::span<const BatchItem> batch,
                      std::span<const MemoryEntry> entries, kernels::Exec exec) {
  LossOutput out = exemplar_loss(state, batch, exec);
  const LossOutput mem = memory_loss(state, entries, exec);
  out.value += mem.value;
  out.grads.add(mem.grads);
  return out;
}

LossOutput triplet_loss(const ModelState& state, std::span<const BatchItem> batch,
                        const TripletLossConfig& config, kernels::Exec exec) {
  if (!(config.margin >= 0.0)) throw InvalidConfig("train.margin", "margin must be >= 0");

  const std::vector<std::size_t> order = canonical_order(batch);
  std::vector<BatchItem> sorted;
  sorted.reserve(batch.size());
  for (std::size_t i : order) sorted.push_back(batch[i]);

  struct Pair {
    std::size_t a, b;
  };
  std::vector<Pair> pos, neg;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      (sorted[i].treatment == sorted[j].treatment ? pos : neg).push_back({i, j});
    }
  }
  if (pos.empty()) throw EmptyPairSet("batch has no same-treatment pair");
  if (neg.empty()) throw EmptyPairSet("batch has no cross-treatment pair");

  const PreparedBatch p = prepare(state, sorted);
  const BatchForward fwd = forward_batch(state, p.inputs, p.route, exec);
  const Mat& emb = fwd.embeddings;
  Mat sims;
  kernels::gram(emb, emb, sims, exec);

  Vec s_pos(pos.size()), s_neg(neg.size());
  for (std::size_t k = 0; k < pos.size(); ++k) s_pos[k] = sims(pos[k].a, pos[k].b);
  for (std::size_t k = 0; k < neg.size(); ++k) s_neg[k] = sims(neg[k].a, neg[k].b);

  const double m = config.margin;
  Vec row_sum(pos.size(), 0.0);
  std::vector<std::int64_t> active_per_pos(pos.size(), 0), active_per_neg(neg.size(), 0);
  const bool par = exec == kernels::Exec::parallel && pos.size() * neg.size() >= (1 << 14);

  const auto np = static_cast<std::ptrdiff_t>(pos.size());
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t a = 0; a < np; ++a) {
    double acc = 0.0;
    std::int64_t active = 0;
    for (std::size_t b = 0; b < neg.size(); ++b) {
      const double h = m + s_neg[b] - s_pos[a];
      if (h > 0.0) {
        acc += h;
        ++active;
      }
    }
    row_sum[a] = acc;
    active_per_pos[a] = active;
  }
  const auto nn = static_cast<std::ptrdiff_t>(neg.size());
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t b = 0; b < nn; ++b) {
    std::int64_t active = 0;
    for (std::size_t a = 0; a < pos.size(); ++a) {
      if (m + s_neg[b] - s_pos[a] > 0.0) ++active;
    }
    active_per_neg[b] = active;
  }

  const double inv = 1.0 / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
  LossOutput out = zero_output(state);
  out.value = ordered_sum(row_sum) * inv;

  // dL/ds for each pair, scattered symmetrically.
  Mat grad_sims(sorted.size(), sorted.size());
  for (std::size_t k = 0; k < pos.size(); ++k) {
    const double g = -static_cast<double>(active_per_pos[k]) * inv;
    grad_sims(pos[k].a, pos[k].b) += g;
    grad_sims(pos[k].b, pos[k].a) += g;
  }
  for (std::size_t k = 0; k < neg.size(); ++k) {
    const double g = static_cast<double>(active_per_neg[k]) * inv;
    grad_sims(neg[k].a, neg[k].b) += g;
    grad_sims(neg[k].b, neg[k].a) += g;
  }
  Mat grad_emb;
  kernels::affine_backward_input(emb, grad_sims, grad_emb, exec);
  backward_batch(state, fwd, grad_emb, nullptr, out.grads, exec);

  out.embeddings = Mat(batch.size(), state.embed_dim);
  for (std::size_t k = 0; k < order.size(); ++k) {
    std::copy(emb.row(k).begin(), emb.row(k).end(), out.embeddings.row(order[k]).begin());
  }
  return out;
}

LossOutput classification_loss(const ModelState& state, std::span<const BatchItem> batch,
                               const Mat& head, kernels::Exec exec) {
  if (head.rows != state.exemplar_count() || head.cols != state.embed_dim) {
    throw ShapeMismatch("classification head must be " + std::to_string(state.exemplar_count()) +
                        " x " + std::to_string(state.embed_dim));
  }
  LossOutput out = zero_output(state);
  out.head_grad = Mat(head.rows, head.cols);
  if (batch.empty()) return out;

  const PreparedBatch p = prepare(state, batch);
  std::vector<std::size_t> targets;
  for (const auto& item : batch) targets.push_back(state.exemplar_index(item.treatment));
  const BatchForward fwd = forward_batch(state, p.inputs, p.route, exec);
  Mat grad_emb;
  out.value = linear_softmax_ce(fwd.embeddings, head, targets, grad_emb, out.head_grad, exec);
  backward_batch(state, fwd, grad_emb, nullptr, out.grads, exec);
  out.embeddings = fwd.embeddings;
  return out;
}

LossOutput adversarial_penalty(const ModelState& state, std::span<const BatchItem> batch,
                               const Mat& clf, double scale, kernels::Exec exec) {
  if (clf.rows == 0 || clf.cols != state.base_dim()) {
    throw ShapeMismatch("adversarial classifier must be |V| x " +
                        std::to_string(state.base_dim()));
  }
  if (!(scale >= 0.0)) throw InvalidConfig("train.adversarial_scale", "scale must be >= 0");
  LossOutput out = zero_output(state);
  out.head_grad = Mat(clf.rows, clf.cols);
  if (batch.empty()) return out;

  Mat inputs(batch.size(), state.config.input_dim);
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& item = batch[i];
    if (item.features.size() != state.config.input_dim) {
      throw DimensionMismatch("batch item " + std::to_string(i) + " feature dim");
    }
    if (item.group < 0 || static_cast<std::size_t>(item.group) >= clf.rows) {
      throw UnknownGroup("group " + std::to_string(item.group) + " outside classifier range");
    }
    std::copy(item.features.begin(), item.features.end(), inputs.row(i).begin());
    targets.push_back(static_cast<std::size_t>(item.group));
  }
  const BatchForward fwd = encode_batch(state, inputs, exec);
  Mat grad_base;
  out.value = linear_softmax_ce(fwd.base(), clf, targets, grad_base, out.head_grad, exec);
  // Gradient reversal: the encoder ascends the classifier loss.
  for (double& g : grad_base.values) g *= -scale;
  backward_batch(state, fwd, Mat{}, &grad_base, out.grads, exec);
  return out;
}

}  // namespace teams
