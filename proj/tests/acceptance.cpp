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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Every reference value comes from the oracles in
// test_support.hpp or from exact identities, never from the code under test.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "teams/datagen.hpp"
#include "teams/eval.hpp"
#include "teams/memory.hpp"
#include "teams/text_io.hpp"
#include "teams/trainer.hpp"
#include "test_support.hpp"

namespace {

using namespace teams;
using namespace teams::testing;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<MemoryEntry> random_entries(const ModelState& s, Rng& rng, std::size_t n) {
  std::vector<MemoryEntry> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vec g(s.embed_dim);
    fill_gaussian(g, rng, 1.0);
    out.push_back({naive_unit(g),
                   s.exemplar_treatments[rng.below(s.exemplar_count())], 0,
                   static_cast<long>(i)});
  }
  return out;
}

Mat random_mat(std::size_t r, std::size_t c, Rng& rng) {
  Mat m(r, c);
  fill_gaussian(m.values, rng, 0.7);
  return m;
}

// ---------------------------------------------------------------- 1
Verdict gradient_correctness() {
  const auto t0 = Clock::now();
  constexpr int kInstances = 20;
  double worst[6] = {0, 0, 0, 0, 0, 0};
  bool detached = true;
  std::size_t entries_checked = 0;
  for (int k = 0; k < kInstances; ++k) {
    // exemplar_loss
    {
      auto inst = random_instance(1000 + k);
      auto& s = inst.state;
      const auto out = exemplar_loss(s, inst.batch.items);
      const auto r = check_gradient([&] { return naive_exemplar_loss(s, inst.batch.items); },
                                    s.params.blocks(), std::as_const(out.grads).blocks());
      worst[0] = std::max(worst[0], r.max_rel);
      entries_checked += r.checked;
    }
    // memory_loss: gradients reach exemplars only
    {
      auto inst = random_instance(2000 + k);
      auto& s = inst.state;
      Rng rng(derive_key(2000 + k, 1));
      const auto entries = random_entries(s, rng, 1 + rng.below(6));
      const auto out = memory_loss(s, entries);
      const auto r =
          check_gradient([&] { return naive_memory_loss(s, entries); },
                         {std::span<double>(s.params.exemplars.values)},
                         {std::span<const double>(out.grads.exemplars.values)});
      worst[1] = std::max(worst[1], r.max_rel);
      entries_checked += r.checked;
      for (const auto& l : out.grads.encoder) {
        for (double g : l.weight.values) detached &= g == 0.0;
        for (double g : l.bias) detached &= g == 0.0;
      }
      for (const auto& w : out.grads.experts) {
        for (double g : w.values) detached &= g == 0.0;
      }
    }
    // total_loss
    {
      auto inst = random_instance(3000 + k);
      auto& s = inst.state;
      Rng rng(derive_key(3000 + k, 1));
      const auto entries = random_entries(s, rng, rng.below(6));
      const auto out = total_loss(s, inst.batch.items, entries);
      const auto r = check_gradient(
          [&] { return naive_exemplar_loss(s, inst.batch.items) + naive_memory_loss(s, entries); },
          s.params.blocks(), std::as_const(out.grads).blocks());
      worst[2] = std::max(worst[2], r.max_rel);
      entries_checked += r.checked;
    }
    // triplet_loss
    {
      auto inst = random_instance(4000 + k, true);
      auto& s = inst.state;
      const auto out = triplet_loss(s, inst.batch.items, {0.3});
      auto blocks = s.params.blocks();
      auto grads = std::as_const(out.grads).blocks();
      blocks.pop_back();  // exemplars do not enter the hinge
      grads.pop_back();
      const auto r = check_gradient(
          [&] { return naive_triplet_loss(s, inst.batch.items, 0.3); }, blocks, grads);
      worst[3] = std::max(worst[3], r.max_rel);
      entries_checked += r.checked;
    }
    // classification_loss, including the head
    {
      auto inst = random_instance(5000 + k);
      auto& s = inst.state;
      Rng rng(derive_key(5000 + k, 1));
      Mat head = random_mat(s.exemplar_count(), s.embed_dim, rng);
      const auto out = classification_loss(s, inst.batch.items, head);
      auto blocks = s.params.blocks();
      auto grads = std::as_const(out.grads).blocks();
      blocks.pop_back();
      grads.pop_back();
      blocks.emplace_back(head.values);
      grads.emplace_back(out.head_grad.values);
      const auto r = check_gradient(
          [&] { return naive_classification_loss(s, inst.batch.items, head); }, blocks, grads);
      worst[4] = std::max(worst[4], r.max_rel);
      entries_checked += r.checked;
    }
    // adversarial_penalty: encoder sees -scale * dCE, classifier sees dCE
    {
      auto inst = random_instance(6000 + k);
      auto& s = inst.state;
      Rng rng(derive_key(6000 + k, 1));
      std::size_t groups = 0;
      for (auto g : inst.batch.groups) groups = std::max<std::size_t>(groups, g + 1);
      Mat clf = random_mat(std::max<std::size_t>(groups, 2), s.base_dim(), rng);
      const double scale = 0.25 + rng.uniform();
      const auto out = adversarial_penalty(s, inst.batch.items, clf, scale);
      std::vector<std::span<double>> enc;
      std::vector<std::span<const double>> enc_g;
      for (std::size_t l = 0; l < s.params.encoder.size(); ++l) {
        enc.emplace_back(s.params.encoder[l].weight.values);
        enc.emplace_back(s.params.encoder[l].bias);
        enc_g.emplace_back(out.grads.encoder[l].weight.values);
        enc_g.emplace_back(out.grads.encoder[l].bias);
      }
      const auto r1 = check_gradient(
          [&] { return -scale * naive_group_ce(s, inst.batch.items, clf); }, enc, enc_g);
      const auto r2 = check_gradient([&] { return naive_group_ce(s, inst.batch.items, clf); },
                                     {std::span<double>(clf.values)},
                                     {std::span<const double>(out.head_grad.values)});
      worst[5] = std::max({worst[5], r1.max_rel, r2.max_rel});
      entries_checked += r1.checked + r2.checked;
    }
  }
  const double secs = seconds_since(t0);
  Verdict v;
  const char* names[] = {"exemplar", "memory", "total", "triplet", "classification", "adversarial"};
  for (int i = 0; i < 6; ++i) {
    v.pass &= worst[i] < 1e-5;
    v.detail += std::string(names[i]) + " " + fmt("%.1e", worst[i]) + ", ";
  }
  v.pass &= detached && secs < 10.0;
  v.detail += "memory detached " + std::string(detached ? "yes" : "NO") + ", " +
              std::to_string(entries_checked) + " entries, " + fmt("%.2fs", secs);
  return v;
}

// ---------------------------------------------------------------- 2
Verdict loss_oracles() {
  double worst_ex = 0.0, worst_mem = 0.0, worst_nll = 0.0, worst_tri = 0.0;
  for (int k = 0; k < 100; ++k) {
    auto inst = random_instance(7000 + k);
    const auto& s = inst.state;
    worst_ex = std::max(worst_ex, std::abs(exemplar_loss(s, inst.batch.items).value -
                                           naive_exemplar_loss(s, inst.batch.items)));
    Rng rng(derive_key(7000 + k, 2));
    const auto entries = random_entries(s, rng, 1 + rng.below(8));
    worst_mem = std::max(worst_mem,
                         std::abs(memory_loss(s, entries).value - naive_memory_loss(s, entries)));
    Vec d(1 + rng.below(10));
    for (double& x : d) x = 2.0 * rng.uniform();
    const std::size_t t = rng.below(d.size());
    double den = 0.0;
    for (double x : d) den += std::exp(-x);
    worst_nll = std::max(worst_nll, std::abs(stable_softmax_nll(d, t) - (-std::log(std::exp(-d[t]) / den))));

    auto tri = random_instance(8000 + k, true);
    worst_tri = std::max(worst_tri, std::abs(triplet_loss(tri.state, tri.batch.items, {0.3}).value -
                                             naive_triplet_loss(tri.state, tri.batch.items, 0.3)));
  }
  Verdict v;
  v.pass = worst_ex < 1e-12 && worst_mem < 1e-12 && worst_nll < 1e-12 && worst_tri < 1e-12;
  v.detail = "exemplar " + fmt("%.1e", worst_ex) + ", memory " + fmt("%.1e", worst_mem) +
             ", softmax-nll " + fmt("%.1e", worst_nll) + ", triplet " + fmt("%.1e", worst_tri) +
             " (100 instances each)";
  return v;
}

// ---------------------------------------------------------------- 3
Verdict concat_identity() {
  double worst = 0.0;
  int n = 0;
  for (std::size_t groups : {1u, 2u, 5u}) {
    for (int k = 0; k < 100; ++k) {
      const std::uint64_t seed = 9000 + 100 * groups + k;
      Rng rng(derive_key(seed, 3));
      EncoderConfig cfg{6, {32}, 8};
      const ModelState s = init_model(cfg, groups, 3, 3 + rng.below(4), seed);
      Vec x(6), y(6);
      fill_gaussian(x, rng, 1.0);
      fill_gaussian(y, rng, 1.0);
      const double lhs = naive_cos(concat_embed(s, x), concat_embed(s, y));
      double rhs = 0.0;
      for (std::size_t v = 0; v < groups; ++v) rhs += naive_cos(naive_embed(s, x, v), naive_embed(s, y, v));
      rhs /= static_cast<double>(groups);
      worst = std::max(worst, std::abs(lhs - rhs));
      ++n;
    }
  }
  return {worst < 1e-12, "max |cos(concat) - mean per-expert cos| " + fmt("%.1e", worst) + " over " +
                             std::to_string(n) + " pairs, |V| in {1,2,5}"};
}

// ---------------------------------------------------------------- 4
Verdict treatment_identity() {
  double worst = 0.0;
  const std::pair<std::size_t, std::size_t> sizes[] = {{1, 1}, {1, 7}, {5, 3}, {13, 29}, {50, 50}};
  int cases = 0;
  for (std::size_t groups : {1u, 3u}) {
    for (auto [na, nb] : sizes) {
      const std::uint64_t seed = 11000 + groups * 10 + na;
      Rng rng(derive_key(seed, 4));
      EncoderConfig cfg{5, {32}, 8};
      const ModelState s = init_model(cfg, groups, 2, 3, seed);
      std::vector<CellRecord> a, b;
      std::int64_t id = 0;
      auto make = [&](std::vector<CellRecord>& dst, std::size_t n, TreatmentId t) {
        for (std::size_t i = 0; i < n; ++i) {
          CellRecord r;
          r.cell_id = id++;
          r.features = Vec(cfg.input_dim);
          fill_gaussian(r.features, rng, 1.0);
          r.treatment = t;
          r.mechanisms = {t};
          r.group = static_cast<VariationGroupId>(rng.below(groups));
          dst.push_back(std::move(r));
        }
      };
      make(a, na, 0);
      make(b, nb, 1);
      double brute = 0.0;
      for (const auto& ca : a) {
        for (const auto& cb : b) {
          double sim = 0.0;
          for (std::size_t v = 0; v < groups; ++v) {
            sim += naive_dot(naive_embed(s, ca.features, v), naive_embed(s, cb.features, v));
          }
          brute += sim / static_cast<double>(groups);
        }
      }
      brute /= static_cast<double>(na * nb);
      const double shortcut = treatment_similarity_shortcut(s, a, b, ExpertMode::average());
      worst = std::max(worst, std::abs(brute - shortcut));
      ++cases;
    }
  }
  return {worst < 1e-12, "max |brute-force mean - shortcut| " + fmt("%.1e", worst) + " over " +
                             std::to_string(cases) + " set pairs up to 50x50"};
}

// ---------------------------------------------------------------- 5
Verdict retention_law() {
  Verdict v;
  const std::pair<std::size_t, std::size_t> cases[] = {{4, 8}, {128, 256}, {64, 256}};
  for (auto [b, k] : cases) {
    const std::size_t expected = k / b;
    const std::size_t pushes = expected + 8;
    MemoryBank bank(k, 2);
    std::vector<std::vector<MemoryEntry>> snaps;
    std::int64_t next = 0;
    for (std::size_t step = 0; step < pushes; ++step) {
      Mat emb(b, 2, 1.0);
      std::vector<TreatmentId> tags(b);
      std::vector<VariationGroupId> groups(b, 0);
      for (auto& t : tags) t = next++;
      bank.push_batch(emb, tags, groups, static_cast<long>(step));
      snaps.push_back(bank.snapshot());
    }
    bool ok = true;
    // Entries whose retention window fits entirely inside the run.
    const std::int64_t complete = static_cast<std::int64_t>((pushes - expected + 1) * b);
    for (std::int64_t tag = 0; tag < complete; ++tag) {
      const auto pushed_at = static_cast<std::size_t>(tag) / b;
      std::size_t seen = 0;
      for (std::size_t s = pushed_at; s < snaps.size(); ++s) {
        for (const auto& e : snaps[s]) seen += e.treatment == tag;
      }
      ok &= seen == expected;
    }
    v.pass &= ok;
    v.detail += "(B=" + std::to_string(b) + ",K=" + std::to_string(k) + "): " +
                (ok ? "every entry in " + std::to_string(expected) + " snapshots" : "VIOLATED") + "; ";
  }
  return v;
}

// ---------------------------------------------------------------- 6, 7
struct SeedRun {
  double teams = 0, exemplar_only = 0, online = 0, untrained = 0;
  double teams_random = 0, teams_oracle = 0;
};

double exp1_accuracy(const ModelState& s, const std::vector<CellRecord>& recs,
                     const SplitSpec& split, const ExpertMode& mode, std::uint64_t seed) {
  return run_experiments(s, recs, split.test, EvalCounts{2000, 0, 0}, mode, seed)
      .find(Experiment::mech_vs_mech)
      ->accuracy;
}

std::vector<SeedRun> ranking_runs(double& secs) {
  const auto t0 = Clock::now();
  std::vector<SeedRun> runs;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GenConfig gen;
    gen.seed = seed;
    const auto recs = generate(gen);
    const auto split = split_by_treatment(recs, {0.5, 0.25, 0.25}, seed);
    SeedRun r;
    auto fit = [&](Method m) {
      TrainConfig tc;
      tc.method = m;
      tc.seed = seed;
      return train(recs, split, tc).checkpoint.model;
    };
    TrainConfig tc;
    tc.seed = seed;
    r.untrained = exp1_accuracy(initial_model(recs, split, tc), recs, split, ExpertMode::average(), seed);
    const ModelState teams_model = fit(Method::teams);
    r.teams = exp1_accuracy(teams_model, recs, split, ExpertMode::average(), seed);
    r.teams_random = exp1_accuracy(teams_model, recs, split, ExpertMode::random(seed), seed);
    r.teams_oracle = exp1_accuracy(teams_model, recs, split, ExpertMode::oracle(), seed);
    r.exemplar_only = exp1_accuracy(fit(Method::exemplar_only), recs, split, ExpertMode::average(), seed);
    r.online = exp1_accuracy(fit(Method::online_negatives), recs, split, ExpertMode::average(), seed);
    runs.push_back(r);
  }
  secs = seconds_since(t0);
  return runs;
}

Verdict ablation_ranking(const std::vector<SeedRun>& runs, double secs) {
  SeedRun m;
  for (const auto& r : runs) {
    m.teams += r.teams / runs.size();
    m.exemplar_only += r.exemplar_only / runs.size();
    m.online += r.online / runs.size();
    m.untrained += r.untrained / runs.size();
  }
  Verdict v;
  const bool order = m.teams >= m.exemplar_only && m.exemplar_only >= m.online && m.online >= m.untrained;
  const bool gap = m.teams - m.untrained >= 0.15;
  const bool band = m.untrained >= 0.44 && m.untrained <= 0.56;
  v.pass = order && gap && band && secs < 300.0;
  v.detail = "teams " + fmt("%.4f", m.teams) + " exemplar_only " + fmt("%.4f", m.exemplar_only) +
             " online_negatives " + fmt("%.4f", m.online) + " untrained " + fmt("%.4f", m.untrained) +
             "; ordering " + (order ? "ok" : "VIOLATED") + ", teams-untrained " +
             fmt("%.4f", m.teams - m.untrained) + (gap ? " ok" : " < 0.15") + ", untrained " +
             (band ? "in" : "OUTSIDE") + " [0.44,0.56], " + fmt("%.1fs", secs);
  return v;
}

Verdict expert_modes(const std::vector<SeedRun>& runs) {
  double avg = 0, rnd = 0, orc = 0;
  for (const auto& r : runs) {
    avg += r.teams / runs.size();
    rnd += r.teams_random / runs.size();
    orc += r.teams_oracle / runs.size();
  }
  return {avg >= rnd, "average " + fmt("%.4f", avg) + " >= random " + fmt("%.4f", rnd) +
                          " (oracle " + fmt("%.4f", orc) + ", reported only), nuisance 0.5, 5 seeds"};
}

// ---------------------------------------------------------------- 8
Verdict determinism(const std::filesystem::path& dir) {
  GenConfig gen;
  gen.seed = 7;
  const auto a = dir / "det_a.csv";
  const auto b = dir / "det_b.csv";
  write_dataset(generate(gen), a);
  write_dataset(generate(gen), b);
  const bool data_same = slurp(a) == slurp(b);

  const auto recs = read_dataset(a);
  const auto split = split_by_treatment(recs, {0.5, 0.25, 0.25}, 7);
  TrainConfig tc;
  tc.seed = 7;
  tc.epochs = 3;
  const auto r1 = train(recs, split, tc);
  const auto r2 = train(recs, split, tc);
  bool first5 = r1.log.size() >= 5 && r2.log.size() >= 5;
  for (std::size_t i = 0; first5 && i < 5; ++i) {
    first5 = std::memcmp(&r1.log[i].loss, &r2.log[i].loss, sizeof(double)) == 0;
  }
  const bool log_same = format_log(r1.log) == format_log(r2.log);
  const EvalCounts counts{2000, 2000, 0};
  const auto e1 = format_report(run_experiments(r1.checkpoint.model, recs, split.test, counts,
                                                ExpertMode::random(3), 3));
  const auto e2 = format_report(run_experiments(r2.checkpoint.model, recs, split.test, counts,
                                                ExpertMode::random(3), 3));
  const bool eval_same = e1 == e2;
  return {data_same && first5 && log_same && eval_same,
          std::string("dataset files ") + (data_same ? "identical" : "DIFFER") + ", first 5 losses " +
              (first5 ? "bitwise equal" : "DIFFER") + ", full log " + (log_same ? "identical" : "DIFFERS") +
              " (" + std::to_string(r1.log.size()) + " steps), eval report " +
              (eval_same ? "identical" : "DIFFERS") + ", " + std::to_string(omp_get_max_threads()) +
              " threads"};
}

// ---------------------------------------------------------------- 9
Verdict degenerate_collapse() {
  // |V| = 1: every mode reads the same block.
  GenConfig gen;
  gen.n_variation_groups = 1;
  gen.seed = 5;
  const auto recs = generate(gen);
  const auto split = split_by_treatment(recs, {0.5, 0.25, 0.25}, 5);
  TrainConfig tc;
  tc.seed = 5;
  tc.epochs = 2;
  const auto model = train(recs, split, tc).checkpoint.model;
  bool modes_agree = true;
  for (std::size_t i = 0; i + 1 < recs.size(); i += 37) {
    const auto& x = recs[i];
    const auto& y = recs[(i * 7919 + 11) % recs.size()];
    const double s_avg = cell_similarity(model, x, y, ExpertMode::average());
    const double s_rnd = cell_similarity(model, x, y, ExpertMode::random(9));
    const double s_orc = cell_similarity(model, x, y, ExpertMode::oracle());
    modes_agree &= std::memcmp(&s_avg, &s_rnd, sizeof(double)) == 0 &&
                   std::memcmp(&s_avg, &s_orc, sizeof(double)) == 0;
  }
  const EvalCounts counts{2000, 2000, 0};
  const auto ra = format_report(run_experiments(model, recs, split.test, counts, ExpertMode::average(), 1));
  const auto ro = format_report(run_experiments(model, recs, split.test, counts, ExpertMode::oracle(), 1));
  const auto rr = format_report(run_experiments(model, recs, split.test, counts, ExpertMode::random(1), 1));
  auto strip_mode = [](std::string s) {
    for (const char* m : {"average", "oracle", "random"}) {
      for (auto p = s.find(m); p != std::string::npos; p = s.find(m)) s.erase(p, std::strlen(m));
    }
    return s;
  };
  modes_agree &= strip_mode(ra) == strip_mode(ro) && strip_mode(ra) == strip_mode(rr);

  // memory_k = 0: teams collapses onto exemplar_moe.
  GenConfig g2;
  g2.seed = 6;
  const auto recs2 = generate(g2);
  const auto split2 = split_by_treatment(recs2, {0.5, 0.25, 0.25}, 6);
  TrainConfig t_teams;
  t_teams.seed = 6;
  t_teams.epochs = 3;
  t_teams.memory_k = 0;
  TrainConfig t_moe = t_teams;
  t_moe.method = Method::exemplar_moe;
  const auto a = train(recs2, split2, t_teams);
  const auto b = train(recs2, split2, t_moe);
  bool traces = a.log.size() == b.log.size();
  for (std::size_t i = 0; traces && i < a.log.size(); ++i) {
    traces = std::memcmp(&a.log[i].loss, &b.log[i].loss, sizeof(double)) == 0;
  }
  const bool params = a.checkpoint.model == b.checkpoint.model;

  // nuisance_strength = 0: identity maps.
  GenConfig g3;
  g3.nuisance_strength = 0.0;
  const auto ds = generate_dataset(g3);
  bool identity = ds.nuisance.size() == g3.n_variation_groups;
  for (const auto& n : ds.nuisance) {
    identity &= n.a == Mat::identity(g3.feature_dim);
    for (double x : n.b) identity &= x == 0.0;
  }
  return {modes_agree && traces && params && identity,
          std::string("|V|=1 modes ") + (modes_agree ? "bitwise equal" : "DIFFER") +
              "; memory_k=0 teams vs exemplar_moe trace " + (traces ? "bitwise equal" : "DIFFERS") +
              ", params " + (params ? "equal" : "DIFFER") + "; zero nuisance " +
              (identity ? "identity maps" : "NOT identity")};
}

// ---------------------------------------------------------------- 10
Verdict round_trips(const std::filesystem::path& dir) {
  GenConfig gen;
  gen.seed = 3;
  const auto p1 = dir / "rt_1.csv";
  const auto p2 = dir / "rt_2.csv";
  const auto recs = generate(gen);
  write_dataset(recs, p1);
  const auto back = read_dataset(p1);
  write_dataset(back, p2);
  const bool data = slurp(p1) == slurp(p2) && back == recs;

  const auto split = split_by_treatment(recs, {0.5, 0.25, 0.25}, 3);
  TrainConfig tc;
  tc.seed = 3;
  tc.epochs = 2;
  const auto ck = train(recs, split, tc).checkpoint;
  const auto c1 = dir / "rt_1.ckpt";
  const auto c2 = dir / "rt_2.ckpt";
  save_checkpoint(ck, c1);
  const auto loaded = load_checkpoint(c1);
  save_checkpoint(loaded, c2);
  const bool ckpt = slurp(c1) == slurp(c2) && loaded == ck;
  return {data && ckpt, std::string("dataset csv ") + (data ? "byte-identical" : "DIFFERS") +
                            ", checkpoint " + (ckpt ? "byte-identical" : "DIFFERS")};
}

}  // namespace

int main() {
  // Exercise the parallel kernels even on a single-core host.
  omp_set_num_threads(4);
  const auto dir = std::filesystem::temp_directory_path() / "teams_acceptance";
  std::filesystem::create_directories(dir);

  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Verdict()>& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::printf("[%s] %2d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  };

  report(1, "gradient correctness", gradient_correctness);
  report(2, "loss oracles", loss_oracles);
  report(3, "concatenation averaging identity", concat_identity);
  report(4, "treatment similarity identity", treatment_identity);
  report(5, "memory retention law", retention_law);
  double secs = 0.0;
  std::vector<SeedRun> runs;
  std::string run_error;
  try {
    runs = ranking_runs(secs);
  } catch (const std::exception& e) {
    run_error = e.what();
  }
  report(6, "ablation ranking", [&] {
    if (!run_error.empty()) return Verdict{false, "threw: " + run_error};
    return ablation_ranking(runs, secs);
  });
  report(7, "expert mode ordering", [&] {
    if (!run_error.empty()) return Verdict{false, "threw: " + run_error};
    return expert_modes(runs);
  });
  report(8, "determinism", [&] { return determinism(dir); });
  report(9, "degenerate collapse", degenerate_collapse);
  report(10, "file round trips", [&] { return round_trips(dir); });

  std::filesystem::remove_all(dir);
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
