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

// Synthetic cell-phenotype data with mechanistic classes, treatments,
// control cells and per-group affine nuisance transforms.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "teams/model.hpp"
#include "teams/numerics.hpp"

namespace teams {

struct GenConfig {
  std::size_t n_mechanisms = 4;
  std::size_t treatments_per_mechanism = 3;
  std::size_t n_variation_groups = 3;
  std::size_t cells_per_treatment_per_group = 60;
  std::size_t n_control_cells_per_group = 120;
  std::size_t feature_dim = 24;
  double class_sep = 4.0;
  double treatment_sep = 1.0;
  double noise_sigma = 0.7;
  double nuisance_strength = 0.5;
  std::uint64_t seed = 0;

  std::size_t treatment_count() const { return n_mechanisms * treatments_per_mechanism; }
  /// Treatment id carried by every control cell.
  TreatmentId control_treatment() const { return static_cast<TreatmentId>(treatment_count()); }
  std::size_t record_count() const;
};

/// Throws InvalidConfig naming the offending `gen.*` key.
void validate(const GenConfig& config);
/// True when class_sep <= treatment_sep, which blurs mechanisms into treatments.
bool separation_warning(const GenConfig& config);

struct CellRecord {
  std::int64_t cell_id = 0;
  Vec features;
  TreatmentId treatment = 0;
  std::vector<MechanismId> mechanisms;  // sorted; empty for controls
  VariationGroupId group = 0;
  bool is_control = false;

  friend bool operator==(const CellRecord&, const CellRecord&) = default;
};

/// Affine map applied to every cell of one variation group.
struct NuisanceMap {
  Mat a;
  Vec b;
};

struct Dataset {
  std::vector<CellRecord> records;
  std::vector<NuisanceMap> nuisance;  // one per group
  std::vector<Vec> mechanism_prototypes;
  std::vector<Vec> treatment_means;
};

/// Full generative model; see the README for the sampling order.
Dataset generate_dataset(const GenConfig& config);
std::vector<CellRecord> generate(const GenConfig& config);

/// CSV with header cell_id,treatment_id,mechanism_ids,variation_group,is_control,f0..f{D-1}.
/// Floats use shortest round-trip formatting, so a write/read cycle is lossless.
void write_dataset(const std::vector<CellRecord>& records, const std::filesystem::path& path);
std::vector<CellRecord> read_dataset(const std::filesystem::path& path);

enum class SplitPart { train, val, test };

struct SplitSpec {
  std::set<TreatmentId> train, val, test;

  const std::set<TreatmentId>& part(SplitPart p) const;
  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

const char* to_string(SplitPart p);
SplitPart split_part_from_string(const std::string& s);

/// Shuffles the non-control treatment ids with `seed` and cuts them by
/// `fractions` (train, val, test) using largest-remainder rounding; ties in
/// the remainder go to the earlier part. Controls never enter a split.
SplitSpec split_by_treatment(const std::vector<CellRecord>& records,
                             const std::array<double, 3>& fractions, std::uint64_t seed);

/// `treatment_id,split` CSV.
void write_split(const SplitSpec& split, const std::filesystem::path& path);
SplitSpec read_split(const std::filesystem::path& path);

}  // namespace teams
