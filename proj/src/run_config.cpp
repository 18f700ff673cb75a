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

#include "teams/run_config.hpp"

#include <charconv>
#include <cmath>

#include "teams/errors.hpp"
#include "teams/text_io.hpp"

namespace teams {

namespace {

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto t = trim(v);
  auto res = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    throw InvalidConfig(key, "expected a non-negative integer, got '" + v + "'");
  }
  return x;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto t = trim(v);
  auto res = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size() || !std::isfinite(x)) {
    throw InvalidConfig(key, "expected a finite number, got '" + v + "'");
  }
  return x;
}

template <class Ref>
ConfigKey make_size(std::string key, std::string help, Ref ref) {
  return {key, std::move(help), [ref](const RunConfig& c) {
            return std::to_string(ref(const_cast<RunConfig&>(c)));
          },
          [ref, key](RunConfig& c, const std::string& v) { ref(c) = to_size(key, v); }};
}

template <class Ref>
ConfigKey make_u64(std::string key, std::string help, Ref ref) {
  return {key, std::move(help), [ref](const RunConfig& c) {
            return std::to_string(ref(const_cast<RunConfig&>(c)));
          },
          [ref, key](RunConfig& c, const std::string& v) { ref(c) = to_u64(key, v); }};
}

template <class Ref>
ConfigKey make_double(std::string key, std::string help, Ref ref) {
  return {key, std::move(help), [ref](const RunConfig& c) {
            return format_double(ref(const_cast<RunConfig&>(c)));
          },
          [ref, key](RunConfig& c, const std::string& v) { ref(c) = to_double(key, v); }};
}

template <class Ref>
ConfigKey make_string(std::string key, std::string help, Ref ref) {
  return {key, std::move(help),
          [ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c))); },
          [ref](RunConfig& c, const std::string& v) { ref(c) = std::string(trim(v)); }};
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> k;
  // clang-format off
  k.push_back(make_size("gen.n_mechanisms", "number of mechanistic classes", [](RunConfig& c) -> auto& { return c.gen.n_mechanisms; }));
  k.push_back(make_size("gen.treatments_per_mechanism", "treatments per mechanism", [](RunConfig& c) -> auto& { return c.gen.treatments_per_mechanism; }));
  k.push_back(make_size("gen.n_variation_groups", "technical variation groups", [](RunConfig& c) -> auto& { return c.gen.n_variation_groups; }));
  k.push_back(make_size("gen.cells_per_treatment_per_group", "cells per (treatment, group)", [](RunConfig& c) -> auto& { return c.gen.cells_per_treatment_per_group; }));
  k.push_back(make_size("gen.n_control_cells_per_group", "control cells per group", [](RunConfig& c) -> auto& { return c.gen.n_control_cells_per_group; }));
  k.push_back(make_size("gen.feature_dim", "feature dimension", [](RunConfig& c) -> auto& { return c.gen.feature_dim; }));
  k.push_back(make_double("gen.class_sep", "norm of mechanism prototypes", [](RunConfig& c) -> auto& { return c.gen.class_sep; }));
  k.push_back(make_double("gen.treatment_sep", "treatment offset from its prototype", [](RunConfig& c) -> auto& { return c.gen.treatment_sep; }));
  k.push_back(make_double("gen.noise_sigma", "per-feature cell noise", [](RunConfig& c) -> auto& { return c.gen.noise_sigma; }));
  k.push_back(make_double("gen.nuisance_strength", "strength of per-group affine nuisance", [](RunConfig& c) -> auto& { return c.gen.nuisance_strength; }));
  k.push_back(make_u64("gen.seed", "generator seed", [](RunConfig& c) -> auto& { return c.gen.seed; }));
  k.push_back({"split.fractions", "train,val,test treatment fractions",
               [](const RunConfig& c) {
                 return format_double(c.split_fractions[0]) + "," + format_double(c.split_fractions[1]) +
                        "," + format_double(c.split_fractions[2]);
               },
               [](RunConfig& c, const std::string& v) { c.split_fractions = parse_fractions(v); }});
  k.push_back(make_u64("split.seed", "treatment shuffle seed", [](RunConfig& c) -> auto& { return c.split_seed; }));
  k.push_back({"train.method", "teams|exemplar_only|exemplar_moe|exemplar_memory|online_negatives|online_negatives_adversarial|classification",
               [](const RunConfig& c) { return std::string(to_string(c.train.method)); },
               [](RunConfig& c, const std::string& v) { c.train.method = method_from_string(std::string(trim(v))); }});
  k.push_back(make_size("train.epochs", "training epochs", [](RunConfig& c) -> auto& { return c.train.epochs; }));
  k.push_back(make_size("train.batch_size", "minibatch size", [](RunConfig& c) -> auto& { return c.train.batch_size; }));
  k.push_back(make_double("train.lr", "Adam learning rate", [](RunConfig& c) -> auto& { return c.train.lr; }));
  k.push_back(make_double("train.lr_gamma", "per-epoch exponential decay", [](RunConfig& c) -> auto& { return c.train.lr_gamma; }));
  k.push_back(make_size("train.memory_k", "memory bank capacity (0 disables)", [](RunConfig& c) -> auto& { return c.train.memory_k; }));
  k.push_back(make_double("train.margin", "online-negatives hinge margin", [](RunConfig& c) -> auto& { return c.train.margin; }));
  k.push_back(make_double("train.adversarial_scale", "gradient-reversal scale", [](RunConfig& c) -> auto& { return c.train.adversarial_scale; }));
  k.push_back(make_size("train.embed_dim", "embedding dimension per expert", [](RunConfig& c) -> auto& { return c.train.embed_dim; }));
  k.push_back({"train.hidden_dims", "encoder hidden widths, comma separated (empty for none)",
               [](const RunConfig& c) { return join_sizes(c.train.hidden_dims); },
               [](RunConfig& c, const std::string& v) { c.train.hidden_dims = parse_size_list("train.hidden_dims", v); }});
  k.push_back(make_size("train.base_dim", "encoder output (base feature) dimension", [](RunConfig& c) -> auto& { return c.train.base_dim; }));
  k.push_back(make_size("train.val_triplets", "validation triplets per epoch", [](RunConfig& c) -> auto& { return c.train.val_triplets; }));
  k.push_back(make_u64("train.seed", "initialization and shuffling seed", [](RunConfig& c) -> auto& { return c.train.seed; }));
  k.push_back(make_size("eval.n_mech_vs_mech", "cell triplets, mechanism negatives (0 skips)", [](RunConfig& c) -> auto& { return c.eval_counts.mech_vs_mech; }));
  k.push_back(make_size("eval.n_mech_vs_control", "cell triplets, control negatives (0 skips)", [](RunConfig& c) -> auto& { return c.eval_counts.mech_vs_control; }));
  k.push_back(make_size("eval.n_treatment_level", "treatment triplets (0 skips)", [](RunConfig& c) -> auto& { return c.eval_counts.treatment_level; }));
  k.push_back({"eval.expert_mode", "average|random|oracle",
               [](const RunConfig& c) { return std::string(to_string(c.eval_mode)); },
               [](RunConfig& c, const std::string& v) { c.eval_mode = expert_mode_from_string(std::string(trim(v))); }});
  k.push_back(make_u64("eval.seed", "triplet sampling and random-expert seed", [](RunConfig& c) -> auto& { return c.eval_seed; }));
  k.push_back({"eval.part", "train|val|test",
               [](const RunConfig& c) { return c.eval_part; },
               [](RunConfig& c, const std::string& v) {
                 try {
                   split_part_from_string(std::string(trim(v)));
                 } catch (const InvalidConfig&) {
                   throw InvalidConfig("eval.part", "expected train, val or test");
                 }
                 c.eval_part = std::string(trim(v));
               }});
  k.push_back({"export.part", "train|val|test|control|all",
               [](const RunConfig& c) { return c.export_part; },
               [](RunConfig& c, const std::string& v) {
                 const std::string p(trim(v));
                 if (p != "train" && p != "val" && p != "test" && p != "control" && p != "all") {
                   throw InvalidConfig("export.part", "expected train, val, test, control or all");
                 }
                 c.export_part = p;
               }});
  k.push_back(make_string("paths.data_dir", "directory holding dataset.csv and split.csv", [](RunConfig& c) -> auto& { return c.data_dir; }));
  k.push_back(make_string("paths.checkpoint", "checkpoint file", [](RunConfig& c) -> auto& { return c.checkpoint; }));
  k.push_back(make_string("paths.train_log", "training log (epoch,step,loss,lr)", [](RunConfig& c) -> auto& { return c.train_log; }));
  k.push_back(make_string("paths.report", "evaluation report CSV", [](RunConfig& c) -> auto& { return c.report; }));
  k.push_back(make_string("paths.embeddings", "embedding export CSV", [](RunConfig& c) -> auto& { return c.embeddings; }));
  // clang-format on
  return k;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& k : config_keys()) {
    if (k.key == key) {
      try {
        k.set(config, value);
      } catch (const InvalidConfig& e) {
        if (e.key() == key) throw;
        throw InvalidConfig(key, e.what());
      }
      return;
    }
  }
  throw InvalidConfig(key, "unknown key");
}

std::string get_config_value(const RunConfig& config, const std::string& key) {
  for (const auto& k : config_keys()) {
    if (k.key == key) return k.get(config);
  }
  throw InvalidConfig(key, "unknown key");
}

void load_config_file(const std::filesystem::path& path, RunConfig& config) {
  const auto lines = read_lines(path);
  const std::string src = path.string();
  std::string section;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string_view line = trim(lines[n]);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(src, n + 1, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(src, n + 1, "expected 'key = value'");
    std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!section.empty()) key = section + "." + key;
    set_config_value(config, key, value);
  }
}

void validate(const RunConfig& config) {
  validate(config.gen);
  validate(config.train);
  double total = 0.0;
  for (double f : config.split_fractions) {
    if (!(f >= 0.0)) throw InvalidConfig("split.fractions", "fractions must be >= 0");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidConfig("split.fractions", "fractions must sum to 1");
  RunConfig scratch = config;
  set_config_value(scratch, "eval.part", config.eval_part);
  set_config_value(scratch, "export.part", config.export_part);
}

std::array<double, 3> parse_fractions(const std::string& value) {
  const auto fields = split_fields(value, ',');
  if (fields.size() != 3) throw InvalidConfig("split.fractions", "expected three comma-separated values");
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) out[i] = to_double("split.fractions", std::string(fields[i]));
  double total = 0.0;
  for (double f : out) {
    if (f < 0.0) throw InvalidConfig("split.fractions", "fractions must be >= 0");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidConfig("split.fractions", "fractions sum to " + format_double(total) + ", not 1");
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  if (trim(value).empty()) return out;
  for (auto f : split_fields(value, ',')) out.push_back(to_size(key, std::string(f)));
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace teams
