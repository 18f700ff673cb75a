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

#include <gtest/gtest.h>

#include <cmath>

#include "teams/datagen.hpp"
#include "teams/errors.hpp"
#include "teams/eval.hpp"
#include "test_support.hpp"

namespace teams {
namespace {

using testing::naive_cos;
using testing::naive_embed;

ModelState identity_model(std::size_t dim, std::size_t groups = 1) {
  ModelState s = init_model(EncoderConfig{dim, {}, dim}, groups, 2, dim, 1);
  s.params.encoder[0].weight = Mat::identity(dim);
  for (auto& w : s.params.experts) w = Mat::identity(dim);
  return s;
}

// Cells whose features are the one-hot vector of their mechanism.
std::vector<CellRecord> one_hot_cells(std::size_t mechanisms, std::size_t treatments_per,
                                      std::size_t cells_per) {
  std::vector<CellRecord> out;
  std::int64_t id = 0;
  for (std::size_t m = 0; m < mechanisms; ++m) {
    for (std::size_t t = 0; t < treatments_per; ++t) {
      for (std::size_t c = 0; c < cells_per; ++c) {
        CellRecord r;
        r.cell_id = id++;
        r.features = Vec(mechanisms, 0.0);
        r.features[m] = 1.0;
        r.treatment = static_cast<TreatmentId>(m * treatments_per + t);
        r.mechanisms = {static_cast<MechanismId>(m)};
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

std::set<TreatmentId> all_treatments(const std::vector<CellRecord>& recs) {
  std::set<TreatmentId> out;
  for (const auto& r : recs) {
    if (!r.is_control) out.insert(r.treatment);
  }
  return out;
}

TEST(Triplets, EveryEmittedTripletIsValid) {
  const auto recs = generate(GenConfig{});
  const auto part = all_treatments(recs);
  for (auto e : {Experiment::mech_vs_mech, Experiment::mech_vs_control, Experiment::treatment_level}) {
    const auto ts = sample_triplets(recs, part, e, 500, 4);
    ASSERT_EQ(ts.size(), 500u);
    for (const auto& t : ts) ASSERT_TRUE(triplet_is_valid(recs, part, t));
  }
}

TEST(Triplets, ConstraintsPerExperiment) {
  const auto recs = generate(GenConfig{});
  std::unordered_map<std::int64_t, const CellRecord*> by_id;
  for (const auto& r : recs) by_id[r.cell_id] = &r;
  const auto part = all_treatments(recs);
  for (const auto& t : sample_triplets(recs, part, Experiment::mech_vs_mech, 300, 1)) {
    EXPECT_NE(t.anchor, t.positive);
    EXPECT_EQ(by_id[t.anchor]->mechanisms, by_id[t.positive]->mechanisms);
    EXPECT_NE(by_id[t.anchor]->mechanisms, by_id[t.negative]->mechanisms);
  }
  for (const auto& t : sample_triplets(recs, part, Experiment::mech_vs_control, 300, 1)) {
    EXPECT_TRUE(by_id[t.negative]->is_control);
  }
  for (const auto& t : sample_triplets(recs, part, Experiment::treatment_level, 300, 1)) {
    EXPECT_TRUE(part.count(t.anchor) && part.count(t.positive) && part.count(t.negative));
    EXPECT_EQ(t.anchor / 3, t.positive / 3);
    EXPECT_NE(t.anchor / 3, t.negative / 3);
  }
}

TEST(Triplets, InfeasibleAndEmpty) {
  GenConfig g;
  g.n_mechanisms = 1;
  const auto recs = generate(g);
  EXPECT_THROW(sample_triplets(recs, all_treatments(recs), Experiment::mech_vs_mech, 10, 0),
               InfeasibleExperiment);
  EXPECT_TRUE(sample_triplets(recs, all_treatments(recs), Experiment::mech_vs_mech, 0, 0).empty());
}

TEST(Triplets, SeedDeterminesDraw) {
  const auto recs = generate(GenConfig{});
  const auto part = all_treatments(recs);
  const auto a = sample_triplets(recs, part, Experiment::mech_vs_mech, 100, 5);
  const auto b = sample_triplets(recs, part, Experiment::mech_vs_mech, 100, 5);
  const auto c = sample_triplets(recs, part, Experiment::mech_vs_mech, 100, 6);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Similarity, SelfIsOneInEveryMode) {
  const ModelState s = init_model(EncoderConfig{24, {32}, 8}, 3, 2, 4, 3);
  const auto recs = generate(GenConfig{});
  for (const auto& mode : {ExpertMode::average(), ExpertMode::random(2), ExpertMode::oracle()}) {
    EXPECT_NEAR(cell_similarity(s, recs[5], recs[5], mode), 1.0, 1e-14);
  }
}

TEST(Similarity, SingleExpertModesAgree) {
  const ModelState s = init_model(EncoderConfig{24, {32}, 8}, 1, 2, 4, 3);
  GenConfig g;
  g.n_variation_groups = 1;
  const auto recs = generate(g);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto& a = recs[(i * 13) % recs.size()];
    const auto& b = recs[(i * 29 + 7) % recs.size()];
    const double avg = cell_similarity(s, a, b, ExpertMode::average());
    EXPECT_EQ(avg, cell_similarity(s, a, b, ExpertMode::random(i)));
    EXPECT_EQ(avg, cell_similarity(s, a, b, ExpertMode::oracle()));
  }
}

TEST(Similarity, AverageIsMeanOfPerExpertCosines) {
  const ModelState s = init_model(EncoderConfig{24, {32}, 8}, 3, 2, 4, 3);
  const auto recs = generate(GenConfig{});
  for (std::size_t i = 0; i < 30; ++i) {
    const auto& a = recs[i * 41];
    const auto& b = recs[i * 17 + 3];
    double mean = 0.0;
    for (std::size_t v = 0; v < 3; ++v) mean += naive_cos(naive_embed(s, a.features, v), naive_embed(s, b.features, v));
    EXPECT_NEAR(cell_similarity(s, a, b, ExpertMode::average()), mean / 3.0, 1e-12);
  }
}

TEST(Similarity, RandomSlotIsSymmetricAndInRange) {
  const auto mode = ExpertMode::random(7);
  std::set<std::size_t> seen;
  for (std::int64_t a = 0; a < 40; ++a) {
    for (std::int64_t b = 0; b < 40; ++b) {
      const auto v = random_expert_slot(mode, a, b, 5);
      ASSERT_LT(v, 5u);
      ASSERT_EQ(v, random_expert_slot(mode, b, a, 5));
      seen.insert(v);
    }
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(TreatmentSimilarity, SingleCellAndOrthogonalSets) {
  const ModelState s = identity_model(3);
  CellRecord a{0, {1.0, 0.0, 0.0}, 0, {0}, 0, false};
  CellRecord b{1, {0.0, 2.0, 0.0}, 1, {1}, 0, false};
  const std::vector<CellRecord> sa{a}, sb{b};
  EXPECT_NEAR(treatment_similarity(s, sa, sa, ExpertMode::average()), 1.0, 1e-15);
  EXPECT_EQ(treatment_similarity(s, sa, sb, ExpertMode::average()), 0.0);
  EXPECT_THROW(treatment_similarity(s, sa, {}, ExpertMode::average()), EmptyTreatment);
}

TEST(TreatmentSimilarity, ShortcutMatchesBruteForce) {
  const ModelState s = init_model(EncoderConfig{24, {32}, 8}, 3, 2, 4, 5);
  const auto recs = generate(GenConfig{});
  std::vector<CellRecord> a, b;
  for (const auto& r : recs) {
    if (r.treatment == 1 && a.size() < 40) a.push_back(r);
    if (r.treatment == 7 && b.size() < 25) b.push_back(r);
  }
  for (const auto& mode : {ExpertMode::average(), ExpertMode::oracle()}) {
    EXPECT_NEAR(treatment_similarity(s, a, b, mode), treatment_similarity_shortcut(s, a, b, mode), 1e-12);
  }
  EXPECT_THROW(treatment_similarity_shortcut(s, a, b, ExpertMode::random(1)), InvalidConfig);
}

TEST(Experiments, PerfectEmbeddingScoresOne) {
  const ModelState s = identity_model(4);
  const auto recs = one_hot_cells(4, 2, 3);
  const auto report = run_experiments(s, recs, all_treatments(recs), EvalCounts{500, 0, 200},
                                      ExpertMode::average(), 1);
  EXPECT_EQ(report.find(Experiment::mech_vs_mech)->accuracy, 1.0);
  EXPECT_EQ(report.find(Experiment::treatment_level)->accuracy, 1.0);
  EXPECT_EQ(report.find(Experiment::mech_vs_control), nullptr);
}

TEST(Experiments, TiesCountAsIncorrect) {
  const ModelState s = identity_model(4);
  auto recs = one_hot_cells(4, 2, 3);
  for (auto& r : recs) r.features = {1.0, 1.0, 1.0, 1.0};
  const auto report = run_experiments(s, recs, all_treatments(recs), EvalCounts{300, 0, 0},
                                      ExpertMode::average(), 1);
  EXPECT_EQ(report.find(Experiment::mech_vs_mech)->correct, 0u);
}

TEST(Experiments, SameSeedSameReport) {
  const ModelState s = init_model(EncoderConfig{24, {32}, 8}, 3, 12, 4, 5);
  const auto recs = generate(GenConfig{});
  const auto part = all_treatments(recs);
  const EvalCounts counts{400, 400, 100};
  const auto a = format_report(run_experiments(s, recs, part, counts, ExpertMode::random(3), 9));
  const auto b = format_report(run_experiments(s, recs, part, counts, ExpertMode::random(3), 9));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("experiment,mode,n,correct,accuracy,seed\n", 0), 0u);
}

TEST(Experiments, OracleModeRejectsUnknownGroup) {
  const ModelState s = init_model(EncoderConfig{24, {32}, 8}, 2, 12, 4, 5);
  const auto recs = generate(GenConfig{});
  EXPECT_THROW(run_experiments(s, recs, all_treatments(recs), EvalCounts{100, 0, 0},
                               ExpertMode::oracle(), 1),
               UnknownGroup);
}

TEST(Names, ParseAndPrint) {
  EXPECT_EQ(experiment_from_string("mech_vs_control"), Experiment::mech_vs_control);
  EXPECT_EQ(experiment_from_string("3"), Experiment::treatment_level);
  EXPECT_THROW(experiment_from_string("4"), InvalidConfig);
  EXPECT_EQ(expert_mode_from_string("oracle"), ExpertMode::Kind::oracle);
  EXPECT_THROW(expert_mode_from_string("best"), InvalidConfig);
}

}  // namespace
}  // namespace teams
