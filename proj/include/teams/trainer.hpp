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

// Minibatch sampling, Adam, the training loops for every method, and
// checkpoints.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "teams/datagen.hpp"
#include "teams/losses.hpp"
#include "teams/model.hpp"

namespace teams {

enum class Method {
  teams,             // exemplars + experts + memory
  exemplar_only,     // exemplars, one shared projection
  exemplar_moe,      // exemplars + experts
  exemplar_memory,   // exemplars + memory, one shared projection
  online_negatives,  // all-pairs margin hinge
  online_negatives_adversarial,
  classification,    // linear treatment classifier
};

const char* to_string(Method m);
Method method_from_string(const std::string& s);

bool uses_experts(Method m);
bool uses_memory(Method m);
bool uses_pair_batches(Method m);

struct TrainConfig {
  Method method = Method::teams;
  std::size_t epochs = 15;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double lr_gamma = 0.9;
  std::size_t memory_k = 256;
  double margin = 0.3;
  double adversarial_scale = 1e-2;
  std::size_t embed_dim = 32;
  std::vector<std::size_t> hidden_dims = {64};
  std::size_t base_dim = 32;
  std::size_t val_triplets = 500;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Throws InvalidConfig naming the `train.*` key at fault.
void validate(const TrainConfig& config);

/// Learning rate during 0-based `epoch`: lr * gamma^epoch.
double learning_rate_at(const TrainConfig& config, std::size_t epoch);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<Vec> m;
  std::vector<Vec> v;
  long step = 0;
};

/// One bias-corrected Adam update over every block. Moments are shaped on
/// the first call. Throws ShapeMismatch.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& adam, double lr);

/// Record indices of each minibatch of one epoch.
///
/// Exemplar and classification methods shuffle the training cells and cut
/// consecutive batches; a final batch shorter than 2 is dropped. Pair
/// methods shuffle cells within each treatment, pair neighbours, shuffle the
/// pairs and pack batch_size/2 pairs per batch; a batch whose pairs all
/// come from one treatment is merged into its predecessor so every batch
/// has both positive and negative pairs. Throws EmptySplit.
std::vector<std::vector<std::size_t>> sample_epoch_batches(const std::vector<CellRecord>& records,
                                                           const SplitSpec& split, Method method,
                                                           std::size_t batch_size,
                                                           std::uint64_t seed, std::size_t epoch);

struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  TrainConfig config;
  ModelState model;        // parameters of the best validation epoch
  std::size_t epoch = 0;   // that epoch (0-based)
  std::vector<double> val_history;  // validation accuracy after every epoch

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct LogRecord {
  std::size_t epoch = 0;
  long step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

/// `epoch,step,loss,lr` lines with a header.
std::string format_log(std::span<const LogRecord> log);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LogRecord> log;
};

/// Optional observers; both may be empty.
struct TrainHooks {
  std::function<void(const LogRecord&)> on_step;
  std::function<void(std::size_t epoch, double val_accuracy)> on_epoch;
  /// Stop after this many optimizer steps (0 = run every epoch). Used by
  /// tests that only need the start of a trace.
  long max_steps = 0;
};

/// Trains `config.method` on the training treatments of `split` and selects
/// the epoch with the best validation mech_vs_mech accuracy (average expert
/// mode, config.val_triplets triplets, fixed seed). Throws NonFiniteLoss if
/// a step produces a non-finite loss or gradient.
TrainResult train(const std::vector<CellRecord>& records, const SplitSpec& split,
                  const TrainConfig& config, const TrainHooks& hooks = {});

/// The untrained starting point `train` would use for this data and config.
ModelState initial_model(const std::vector<CellRecord>& records, const SplitSpec& split,
                         const TrainConfig& config);

/// Text checkpoint, header `TEAMS-CKPT v1`. Every parameter is written with
/// 17 significant digits, which round-trips doubles exactly.
std::string format_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text, const std::string& source = "<checkpoint>");
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace teams
