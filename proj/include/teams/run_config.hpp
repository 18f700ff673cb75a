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

// Run settings: one registry of dotted keys (`gen.seed`, `train.lr`, ...)
// shared by the INI config file, the CLI flags and the checkpoint header.
// Precedence is defaults < config file < flags.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "teams/datagen.hpp"
#include "teams/eval.hpp"
#include "teams/trainer.hpp"

namespace teams {

struct RunConfig {
  GenConfig gen;
  std::array<double, 3> split_fractions = {0.5, 0.25, 0.25};
  std::uint64_t split_seed = 0;
  TrainConfig train;
  EvalCounts eval_counts;
  ExpertMode::Kind eval_mode = ExpertMode::Kind::average;
  std::uint64_t eval_seed = 0;
  std::string eval_part = "test";
  std::string export_part = "test";

  std::filesystem::path data_dir = "data";
  std::filesystem::path checkpoint = "teams.ckpt";
  std::filesystem::path train_log = "train_log.csv";
  std::filesystem::path report = "eval_report.csv";
  std::filesystem::path embeddings = "embeddings.csv";

  std::filesystem::path dataset_path() const { return data_dir / "dataset.csv"; }
  std::filesystem::path split_path() const { return data_dir / "split.csv"; }
};

struct ConfigKey {
  std::string key;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

/// Every known key, in a stable order.
const std::vector<ConfigKey>& config_keys();

/// Throws InvalidConfig(key) for unknown keys or unparsable values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& config, const std::string& key);

/// INI-style file: `key = value` lines, optional `[section]` headers that
/// prefix the following keys (`[train]` + `lr = 0.01` == `train.lr = 0.01`),
/// `#` or `;` comments. Throws IoError / ParseError / InvalidConfig.
void load_config_file(const std::filesystem::path& path, RunConfig& config);

/// Cross-field checks: gen, train and split fractions.
void validate(const RunConfig& config);

std::array<double, 3> parse_fractions(const std::string& value);
std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value);
std::string join_sizes(const std::vector<std::size_t>& xs);

}  // namespace teams
