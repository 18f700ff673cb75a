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

// Triplet evaluation protocol.
//
// Three experiments are supported:
//   mech_vs_mech     cell anchor, positive shares a mechanism, negative shares none
//   mech_vs_control  as above but the negative is a control cell
//   treatment_level  anchor/positive/negative are treatments; similarity is the
//                    mean over all cross pairs of cells
// A triplet is correct when sim(anchor, positive) > sim(anchor, negative)
// strictly; exact ties count as incorrect.

#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "teams/datagen.hpp"
#include "teams/model.hpp"

namespace teams {

enum class Experiment { mech_vs_mech, mech_vs_control, treatment_level };

const char* to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

struct TripletTask {
  // Cell ids for the cell-level experiments, treatment ids for treatment_level.
  std::int64_t anchor = 0;
  std::int64_t positive = 0;
  std::int64_t negative = 0;
  Experiment experiment = Experiment::mech_vs_mech;

  friend bool operator==(const TripletTask&, const TripletTask&) = default;
};

struct ExpertMode {
  enum class Kind { average, random, oracle };
  Kind kind = Kind::average;
  std::uint64_t seed = 0;  // used by `random` only

  static ExpertMode average() { return {Kind::average, 0}; }
  static ExpertMode random(std::uint64_t seed) { return {Kind::random, seed}; }
  static ExpertMode oracle() { return {Kind::oracle, 0}; }
};

const char* to_string(ExpertMode::Kind k);
ExpertMode::Kind expert_mode_from_string(const std::string& s);

/// Draws `n` triplets with replacement: anchors uniformly over eligible
/// anchors, then positive and negative uniformly over their eligible sets.
/// Throws InfeasibleExperiment when no anchor is eligible (n > 0).
std::vector<TripletTask> sample_triplets(const std::vector<CellRecord>& records,
                                         const std::set<TreatmentId>& part, Experiment experiment,
                                         std::size_t n, std::uint64_t seed);

/// Re-checks a triplet against its experiment's constraints.
bool triplet_is_valid(const std::vector<CellRecord>& records, const std::set<TreatmentId>& part,
                      const TripletTask& task);

/// Slot drawn by random mode for the (unordered) pair of cells a, b.
std::size_t random_expert_slot(const ExpertMode& mode, std::int64_t cell_a, std::int64_t cell_b,
                               std::size_t experts);

double cell_similarity(const ModelState& state, const CellRecord& a, const CellRecord& b,
                       const ExpertMode& mode);

/// Brute-force mean of cell_similarity over all |a| x |b| pairs.
double treatment_similarity(const ModelState& state, std::span<const CellRecord> cells_a,
                            std::span<const CellRecord> cells_b, const ExpertMode& mode);

/// Concatenated embeddings of many cells, computed in one batched pass.
class EmbeddingTable {
 public:
  EmbeddingTable(const ModelState& state, std::span<const CellRecord> cells,
                 kernels::Exec exec = kernels::Exec::parallel);

  std::size_t experts() const { return experts_; }
  std::size_t embed_dim() const { return embed_dim_; }
  /// Concatenated (|V| * embed_dim) row of a cell.
  std::span<const double> row(std::int64_t cell_id) const;
  /// Unit embedding of the cell under one expert slot.
  std::span<const double> block(std::int64_t cell_id, std::size_t slot) const;
  VariationGroupId group(std::int64_t cell_id) const;
  const Mat& matrix() const { return table_; }

  double similarity(std::int64_t a, std::int64_t b, const ExpertMode& mode) const;

  /// Mean over `cell_ids` of the vector each mode compares: the full
  /// concatenation (average) or the cell's own-group block (oracle).
  Vec mean_vector(std::span<const std::int64_t> cell_ids, const ExpertMode& mode) const;

 private:
  const ModelState* state_;
  std::size_t experts_;
  std::size_t embed_dim_;
  Mat table_;
  std::unordered_map<std::int64_t, std::size_t> index_;
  std::vector<VariationGroupId> groups_;
};

/// Mean-embedding shortcut of treatment_similarity, valid for the average and
/// oracle modes: (1/|V|) sum_v mean_v(A) . mean_v(B), resp. mean(A) . mean(B)
/// over own-group blocks.
double treatment_similarity_shortcut(const ModelState& state, std::span<const CellRecord> cells_a,
                                     std::span<const CellRecord> cells_b, const ExpertMode& mode);

struct EvalCounts {
  std::size_t mech_vs_mech = 2000;
  std::size_t mech_vs_control = 2000;
  std::size_t treatment_level = 500;
};

struct ExperimentResult {
  Experiment experiment = Experiment::mech_vs_mech;
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct EvalReport {
  std::vector<ExperimentResult> results;  // experiments with count 0 are omitted
  ExpertMode mode;
  std::uint64_t seed = 0;

  const ExperimentResult* find(Experiment e) const;
};

EvalReport run_experiments(const ModelState& state, const std::vector<CellRecord>& records,
                           const std::set<TreatmentId>& part, const EvalCounts& counts,
                           const ExpertMode& mode, std::uint64_t seed,
                           kernels::Exec exec = kernels::Exec::parallel);

/// `experiment,mode,n,correct,accuracy,seed`
std::string format_report(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path);

}  // namespace teams
