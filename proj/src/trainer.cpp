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

#include "teams/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "teams/errors.hpp"
#include "teams/eval.hpp"
#include "teams/memory.hpp"
#include "teams/rng.hpp"
#include "teams/text_io.hpp"

namespace teams {

namespace {

constexpr std::uint64_t kBatchStream = 0x6261746368ULL;  // "batch"
constexpr std::uint64_t kHeadStream = 0x68656164ULL;     // "head"
constexpr std::uint64_t kValStream = 0x76616cULL;        // "val"

struct MethodName {
  Method method;
  const char* name;
};

constexpr MethodName kMethods[] = {
    {Method::teams, "teams"},
    {Method::exemplar_only, "exemplar_only"},
    {Method::exemplar_moe, "exemplar_moe"},
    {Method::exemplar_memory, "exemplar_memory"},
    {Method::online_negatives, "online_negatives"},
    {Method::online_negatives_adversarial, "online_negatives_adversarial"},
    {Method::classification, "classification"},
};

template <class T>
void shuffle(std::vector<T>& xs, Rng& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(xs[i - 1], xs[j]);
  }
}

std::vector<std::size_t> training_cells(const std::vector<CellRecord>& records,
                                        const SplitSpec& split) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.is_control && split.train.count(r.treatment)) out.push_back(i);
  }
  return out;
}

void glorot_fill(Mat& m, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
  for (double& w : m.values) w = (2.0 * rng.uniform() - 1.0) * a;
}

std::size_t group_count(const std::vector<CellRecord>& records) {
  VariationGroupId top = -1;
  for (const auto& r : records) top = std::max(top, r.group);
  return static_cast<std::size_t>(top + 1);
}

bool finite_output(const LossOutput& out) {
  if (!std::isfinite(out.value)) return false;
  for (auto b : out.grads.blocks()) {
    if (!all_finite(b)) return false;
  }
  return all_finite(out.head_grad.values);
}

}  // namespace

const char* to_string(Method m) {
  for (const auto& e : kMethods) {
    if (e.method == m) return e.name;
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  for (const auto& e : kMethods) {
    if (s == e.name) return e.method;
  }
  throw InvalidConfig("train.method", "unknown method '" + s + "'");
}

bool uses_experts(Method m) { return m == Method::teams || m == Method::exemplar_moe; }

bool uses_memory(Method m) { return m == Method::teams || m == Method::exemplar_memory; }

bool uses_pair_batches(Method m) {
  return m == Method::online_negatives || m == Method::online_negatives_adversarial;
}

void validate(const TrainConfig& c) {
  if (c.epochs == 0) throw InvalidConfig("train.epochs", "must be >= 1");
  if (c.batch_size < 2) throw InvalidConfig("train.batch_size", "must be >= 2");
  if (uses_pair_batches(c.method) && c.batch_size < 4) {
    throw InvalidConfig("train.batch_size", "pair methods need at least 2 pairs per batch");
  }
  if (!(c.lr > 0.0)) throw InvalidConfig("train.lr", "must be > 0");
  if (!(c.lr_gamma > 0.0) || c.lr_gamma > 1.0) {
    throw InvalidConfig("train.lr_gamma", "must be in (0, 1]");
  }
  if (!(c.margin >= 0.0)) throw InvalidConfig("train.margin", "must be >= 0");
  if (!(c.adversarial_scale >= 0.0)) {
    throw InvalidConfig("train.adversarial_scale", "must be >= 0");
  }
  if (c.embed_dim == 0) throw InvalidConfig("train.embed_dim", "must be >= 1");
  if (c.base_dim == 0) throw InvalidConfig("train.base_dim", "must be >= 1");
  for (std::size_t h : c.hidden_dims) {
    if (h == 0) throw InvalidConfig("train.hidden_dims", "widths must be >= 1");
  }
  if (c.val_triplets == 0) throw InvalidConfig("train.val_triplets", "must be >= 1");
}

double learning_rate_at(const TrainConfig& config, std::size_t epoch) {
  return config.lr * std::pow(config.lr_gamma, static_cast<double>(epoch));
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& adam, double lr) {
  if (params.size() != grads.size()) throw ShapeMismatch("adam_step: block count differs");
  if (adam.m.empty()) {
    for (auto p : params) {
      adam.m.emplace_back(p.size(), 0.0);
      adam.v.emplace_back(p.size(), 0.0);
    }
  }
  if (adam.m.size() != params.size()) throw ShapeMismatch("adam_step: state has wrong block count");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size() || adam.m[b].size() != params[b].size()) {
      throw ShapeMismatch("adam_step: block " + std::to_string(b) + " has mismatched size");
    }
  }
  ++adam.step;
  const double t = static_cast<double>(adam.step);
  const double c1 = 1.0 - std::pow(adam.beta1, t);
  const double c2 = 1.0 - std::pow(adam.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    auto g = grads[b];
    auto& m = adam.m[b];
    auto& v = adam.v[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * g[i];
      v[i] = adam.beta2 * v[i] + (1.0 - adam.beta2) * g[i] * g[i];
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      p[i] -= lr * mh / (std::sqrt(vh) + adam.eps);
    }
  }
}

std::vector<std::vector<std::size_t>> sample_epoch_batches(const std::vector<CellRecord>& records,
                                                           const SplitSpec& split, Method method,
                                                           std::size_t batch_size,
                                                           std::uint64_t seed, std::size_t epoch) {
  if (batch_size < 2) throw InvalidConfig("train.batch_size", "must be >= 2");
  auto cells = training_cells(records, split);
  if (cells.empty()) throw EmptySplit("no training cells");
  Rng rng(derive_key(seed, kBatchStream, epoch));
  std::vector<std::vector<std::size_t>> batches;

  if (!uses_pair_batches(method)) {
    shuffle(cells, rng);
    for (std::size_t start = 0; start < cells.size(); start += batch_size) {
      const std::size_t end = std::min(cells.size(), start + batch_size);
      if (end - start < 2) break;
      batches.emplace_back(cells.begin() + static_cast<std::ptrdiff_t>(start),
                           cells.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
  }

  std::map<TreatmentId, std::vector<std::size_t>> by_treatment;
  for (std::size_t i : cells) by_treatment[records[i].treatment].push_back(i);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (auto& [t, members] : by_treatment) {
    shuffle(members, rng);
    for (std::size_t k = 0; k + 1 < members.size(); k += 2) pairs.emplace_back(members[k], members[k + 1]);
  }
  if (pairs.empty()) throw EmptySplit("no treatment has two training cells");
  shuffle(pairs, rng);

  const std::size_t per_batch = std::max<std::size_t>(1, batch_size / 2);
  struct Chunk {
    std::vector<std::size_t> cells;
    bool single_treatment = true;
  };
  std::vector<Chunk> chunks;
  for (std::size_t start = 0; start < pairs.size(); start += per_batch) {
    const std::size_t end = std::min(pairs.size(), start + per_batch);
    Chunk c;
    const TreatmentId first = records[pairs[start].first].treatment;
    for (std::size_t k = start; k < end; ++k) {
      c.cells.push_back(pairs[k].first);
      c.cells.push_back(pairs[k].second);
      if (records[pairs[k].first].treatment != first) c.single_treatment = false;
    }
    if (c.single_treatment && !chunks.empty()) {
      auto& prev = chunks.back();
      if (records[prev.cells.front()].treatment != first) prev.single_treatment = false;
      prev.cells.insert(prev.cells.end(), c.cells.begin(), c.cells.end());
    } else {
      chunks.push_back(std::move(c));
    }
  }
  if (chunks.size() > 1 && chunks.front().single_treatment) {
    auto& second = chunks[1].cells;
    chunks[0].cells.insert(chunks[0].cells.end(), second.begin(), second.end());
    chunks.erase(chunks.begin() + 1);
  }
  for (auto& c : chunks) batches.push_back(std::move(c.cells));
  return batches;
}

std::string format_log(std::span<const LogRecord> log) {
  std::string out = "epoch,step,loss,lr\n";
  for (const auto& r : log) {
    out += std::to_string(r.epoch) + "," + std::to_string(r.step) + "," + format_double(r.loss) +
           "," + format_double(r.lr) + "\n";
  }
  return out;
}

ModelState initial_model(const std::vector<CellRecord>& records, const SplitSpec& split,
                         const TrainConfig& config) {
  validate(config);
  const auto cells = training_cells(records, split);
  if (cells.empty()) throw EmptySplit("no training cells");
  std::vector<TreatmentId> ids;
  for (std::size_t i : cells) ids.push_back(records[i].treatment);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  EncoderConfig enc;
  enc.input_dim = records[cells.front()].features.size();
  enc.hidden_dims = config.hidden_dims;
  enc.output_dim = config.base_dim;
  return init_model(enc, group_count(records), std::move(ids), config.embed_dim, config.seed,
                    !uses_experts(config.method));
}

TrainResult train(const std::vector<CellRecord>& records, const SplitSpec& split,
                  const TrainConfig& config, const TrainHooks& hooks) {
  validate(config);
  if (split.val.empty()) throw EmptySplit("validation split is empty");
  ModelState state = initial_model(records, split, config);
  const Method method = config.method;

  Mat head;
  if (method == Method::classification) {
    head = Mat(state.exemplar_count(), state.embed_dim);
  } else if (method == Method::online_negatives_adversarial) {
    head = Mat(group_count(records), state.base_dim());
  }
  if (!head.empty()) {
    Rng rng(derive_key(config.seed, kHeadStream));
    glorot_fill(head, rng);
  }

  AdamState adam;
  AdamState head_adam;
  MemoryBank bank(uses_memory(method) ? config.memory_k : 0, state.embed_dim);
  const TripletLossConfig triplet_cfg{config.margin};

  TrainResult result;
  result.checkpoint.config = config;
  result.checkpoint.model = state;
  result.checkpoint.epoch = 0;
  double best = -std::numeric_limits<double>::infinity();
  long step = 0;
  bool stopped = false;

  for (std::size_t epoch = 0; epoch < config.epochs && !stopped; ++epoch) {
    const double lr = learning_rate_at(config, epoch);
    const auto batches =
        sample_epoch_batches(records, split, method, config.batch_size, config.seed, epoch);
    for (const auto& idx : batches) {
      std::vector<BatchItem> batch;
      batch.reserve(idx.size());
      for (std::size_t i : idx) {
        batch.push_back({records[i].features, records[i].treatment, records[i].group});
      }

      LossOutput out;
      switch (method) {
        case Method::teams:
        case Method::exemplar_memory:
          if (bank.capacity() > 0) {
            out = total_loss(state, batch, bank.snapshot());
          } else {
            out = exemplar_loss(state, batch);
          }
          break;
        case Method::exemplar_only:
        case Method::exemplar_moe:
          out = exemplar_loss(state, batch);
          break;
        case Method::online_negatives:
          out = triplet_loss(state, batch, triplet_cfg);
          break;
        case Method::online_negatives_adversarial: {
          out = triplet_loss(state, batch, triplet_cfg);
          LossOutput adv = adversarial_penalty(state, batch, head, config.adversarial_scale);
          out.value += adv.value;
          out.grads.add(adv.grads);
          out.head_grad = std::move(adv.head_grad);
          break;
        }
        case Method::classification:
          out = classification_loss(state, batch, head);
          break;
      }

      if (!finite_output(out)) throw NonFiniteLoss(step, out.value);

      const auto grad_blocks = std::as_const(out.grads).blocks();
      const auto param_blocks = state.params.blocks();
      adam_step(param_blocks, grad_blocks, adam, lr);
      if (!head.empty()) {
        const std::span<double> hp(head.values);
        const std::span<const double> hg(out.head_grad.values);
        adam_step(std::span<const std::span<double>>(&hp, 1),
                  std::span<const std::span<const double>>(&hg, 1), head_adam, lr);
      }

      if (bank.capacity() > 0) {
        std::vector<TreatmentId> ts;
        std::vector<VariationGroupId> gs;
        for (const auto& b : batch) {
          ts.push_back(b.treatment);
          gs.push_back(b.group);
        }
        bank.push_batch(out.embeddings, ts, gs, step);
      }

      const LogRecord rec{epoch, step, out.value, lr};
      result.log.push_back(rec);
      if (hooks.on_step) hooks.on_step(rec);
      ++step;
      if (hooks.max_steps > 0 && step >= hooks.max_steps) {
        stopped = true;
        break;
      }
    }
    if (stopped) break;

    EvalCounts counts{config.val_triplets, 0, 0};
    const auto report = run_experiments(state, records, split.val, counts, ExpertMode::average(),
                                        derive_key(config.seed, kValStream));
    const double acc = report.find(Experiment::mech_vs_mech)->accuracy;
    result.checkpoint.val_history.push_back(acc);
    if (hooks.on_epoch) hooks.on_epoch(epoch, acc);
    if (acc > best) {
      best = acc;
      result.checkpoint.model = state;
      result.checkpoint.epoch = epoch;
    }
  }
  return result;
}

}  // namespace teams
