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

#include "teams/eval.hpp"

#include <omp.h>

#include <algorithm>
#include <map>
#include <string>

#include "teams/errors.hpp"
#include "teams/rng.hpp"
#include "teams/text_io.hpp"

namespace teams {

namespace {

constexpr std::uint64_t kExpertStream = 0x657870657274ULL;   // "expert"
constexpr std::uint64_t kTripletStream = 0x747269706cULL;    // "tripl"

bool share_mechanism(const std::vector<MechanismId>& a, const std::vector<MechanismId>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) {
      ++i;
    } else {
      ++j;
    }
  }
  return false;
}

// Candidate pool for one family of anchors sharing a mechanism set.
struct Pools {
  std::vector<std::int64_t> positives;  // sorted, includes anchors themselves
  std::vector<std::int64_t> negatives;
};

struct Item {
  std::int64_t id;
  std::vector<MechanismId> mechanisms;
};

std::vector<TripletTask> draw(const std::vector<Item>& anchors_src,
                              const std::vector<Item>& negatives_src, bool negatives_are_controls,
                              Experiment experiment, std::size_t n, std::uint64_t seed) {
  std::map<std::vector<MechanismId>, Pools> pools;
  for (const Item& a : anchors_src) {
    if (pools.count(a.mechanisms)) continue;
    Pools p;
    for (const Item& c : anchors_src) {
      if (share_mechanism(a.mechanisms, c.mechanisms)) p.positives.push_back(c.id);
    }
    for (const Item& c : negatives_src) {
      if (negatives_are_controls || !share_mechanism(a.mechanisms, c.mechanisms)) {
        p.negatives.push_back(c.id);
      }
    }
    std::sort(p.positives.begin(), p.positives.end());
    pools.emplace(a.mechanisms, std::move(p));
  }

  std::vector<const Item*> eligible;
  for (const Item& a : anchors_src) {
    const Pools& p = pools.at(a.mechanisms);
    if (p.positives.size() >= 2 && !p.negatives.empty()) eligible.push_back(&a);
  }
  if (eligible.empty()) {
    throw InfeasibleExperiment(std::string(to_string(experiment)) +
                               ": no anchor has both a valid positive and a valid negative");
  }

  Rng rng(derive_key(seed, kTripletStream, static_cast<std::uint64_t>(experiment)));
  std::vector<TripletTask> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Item& a = *eligible[rng.below(eligible.size())];
    const Pools& p = pools.at(a.mechanisms);
    const auto self = static_cast<std::size_t>(
        std::lower_bound(p.positives.begin(), p.positives.end(), a.id) - p.positives.begin());
    std::size_t pi = rng.below(p.positives.size() - 1);
    if (pi >= self) ++pi;
    const std::int64_t neg = p.negatives[rng.below(p.negatives.size())];
    out.push_back({a.id, p.positives[pi], neg, experiment});
  }
  return out;
}

std::map<TreatmentId, std::vector<MechanismId>> treatment_mechanisms(
    const std::vector<CellRecord>& records, const std::set<TreatmentId>& part) {
  std::map<TreatmentId, std::vector<MechanismId>> out;
  for (const auto& r : records) {
    if (r.is_control || !part.count(r.treatment)) continue;
    auto& m = out[r.treatment];
    for (MechanismId x : r.mechanisms) {
      auto it = std::lower_bound(m.begin(), m.end(), x);
      if (it == m.end() || *it != x) m.insert(it, x);
    }
  }
  return out;
}

double pair_similarity(std::span<const double> a, VariationGroupId group_a, std::int64_t id_a,
                       std::span<const double> b, VariationGroupId group_b, std::int64_t id_b,
                       const ModelState& state, const ExpertMode& mode) {
  const std::size_t experts = state.expert_count();
  const std::size_t d = state.embed_dim;
  switch (mode.kind) {
    case ExpertMode::Kind::average:
      return dot(a, b) / static_cast<double>(experts);
    case ExpertMode::Kind::random: {
      const std::size_t v = random_expert_slot(mode, id_a, id_b, experts);
      return dot(a.subspan(v * d, d), b.subspan(v * d, d));
    }
    case ExpertMode::Kind::oracle: {
      const std::size_t va = state.route(group_a);
      const std::size_t vb = state.route(group_b);
      return dot(a.subspan(va * d, d), b.subspan(vb * d, d));
    }
  }
  return 0.0;
}

std::pair<TreatmentId, TreatmentId> ordered_pair(TreatmentId a, TreatmentId b) {
  return {std::min(a, b), std::max(a, b)};
}

}  // namespace

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::mech_vs_mech: return "mech_vs_mech";
    case Experiment::mech_vs_control: return "mech_vs_control";
    case Experiment::treatment_level: return "treatment_level";
  }
  return "?";
}

Experiment experiment_from_string(const std::string& s) {
  if (s == "mech_vs_mech" || s == "1") return Experiment::mech_vs_mech;
  if (s == "mech_vs_control" || s == "2") return Experiment::mech_vs_control;
  if (s == "treatment_level" || s == "3") return Experiment::treatment_level;
  throw InvalidConfig("eval.experiments", "unknown experiment '" + s + "'");
}

const char* to_string(ExpertMode::Kind k) {
  switch (k) {
    case ExpertMode::Kind::average: return "average";
    case ExpertMode::Kind::random: return "random";
    case ExpertMode::Kind::oracle: return "oracle";
  }
  return "?";
}

ExpertMode::Kind expert_mode_from_string(const std::string& s) {
  if (s == "average") return ExpertMode::Kind::average;
  if (s == "random") return ExpertMode::Kind::random;
  if (s == "oracle") return ExpertMode::Kind::oracle;
  throw InvalidConfig("eval.expert_mode", "expected average, random or oracle, got '" + s + "'");
}

std::vector<TripletTask> sample_triplets(const std::vector<CellRecord>& records,
                                         const std::set<TreatmentId>& part, Experiment experiment,
                                         std::size_t n, std::uint64_t seed) {
  if (n == 0) return {};
  std::vector<Item> anchors, negatives;
  if (experiment == Experiment::treatment_level) {
    for (auto& [t, mechs] : treatment_mechanisms(records, part)) anchors.push_back({t, mechs});
    return draw(anchors, anchors, false, experiment, n, seed);
  }
  for (const auto& r : records) {
    if (r.is_control) {
      if (experiment == Experiment::mech_vs_control) negatives.push_back({r.cell_id, {}});
    } else if (part.count(r.treatment)) {
      anchors.push_back({r.cell_id, r.mechanisms});
    }
  }
  if (experiment == Experiment::mech_vs_mech) return draw(anchors, anchors, false, experiment, n, seed);
  return draw(anchors, negatives, true, experiment, n, seed);
}

bool triplet_is_valid(const std::vector<CellRecord>& records, const std::set<TreatmentId>& part,
                      const TripletTask& task) {
  if (task.experiment == Experiment::treatment_level) {
    const auto mechs = treatment_mechanisms(records, part);
    auto a = mechs.find(task.anchor);
    auto p = mechs.find(task.positive);
    auto n = mechs.find(task.negative);
    if (a == mechs.end() || p == mechs.end() || n == mechs.end()) return false;
    return task.anchor != task.positive && share_mechanism(a->second, p->second) &&
           !share_mechanism(a->second, n->second);
  }
  const CellRecord* a = nullptr;
  const CellRecord* p = nullptr;
  const CellRecord* n = nullptr;
  for (const auto& r : records) {
    if (r.cell_id == task.anchor) a = &r;
    if (r.cell_id == task.positive) p = &r;
    if (r.cell_id == task.negative) n = &r;
  }
  if (!a || !p || !n || a == p) return false;
  auto in_part = [&](const CellRecord* r) { return !r->is_control && part.count(r->treatment); };
  if (!in_part(a) || !in_part(p) || !share_mechanism(a->mechanisms, p->mechanisms)) return false;
  if (task.experiment == Experiment::mech_vs_control) return n->is_control;
  return in_part(n) && !share_mechanism(a->mechanisms, n->mechanisms);
}

std::size_t random_expert_slot(const ExpertMode& mode, std::int64_t cell_a, std::int64_t cell_b,
                               std::size_t experts) {
  const auto lo = static_cast<std::uint64_t>(std::min(cell_a, cell_b));
  const auto hi = static_cast<std::uint64_t>(std::max(cell_a, cell_b));
  Rng rng(derive_key(derive_key(mode.seed, kExpertStream), lo, hi));
  return static_cast<std::size_t>(rng.below(experts));
}

double cell_similarity(const ModelState& state, const CellRecord& a, const CellRecord& b,
                       const ExpertMode& mode) {
  const Vec ea = concat_embed(state, a.features);
  const Vec eb = concat_embed(state, b.features);
  return pair_similarity(ea, a.group, a.cell_id, eb, b.group, b.cell_id, state, mode);
}

double treatment_similarity(const ModelState& state, std::span<const CellRecord> cells_a,
                            std::span<const CellRecord> cells_b, const ExpertMode& mode) {
  if (cells_a.empty() || cells_b.empty()) throw EmptyTreatment("treatment has no cells");
  std::vector<Vec> ea, eb;
  for (const auto& c : cells_a) ea.push_back(concat_embed(state, c.features));
  for (const auto& c : cells_b) eb.push_back(concat_embed(state, c.features));
  double sum = 0.0;
  for (std::size_t i = 0; i < cells_a.size(); ++i) {
    for (std::size_t j = 0; j < cells_b.size(); ++j) {
      sum += pair_similarity(ea[i], cells_a[i].group, cells_a[i].cell_id, eb[j], cells_b[j].group,
                             cells_b[j].cell_id, state, mode);
    }
  }
  return sum / (static_cast<double>(cells_a.size()) * static_cast<double>(cells_b.size()));
}

EmbeddingTable::EmbeddingTable(const ModelState& state, std::span<const CellRecord> cells,
                               kernels::Exec exec)
    : state_(&state), experts_(state.expert_count()), embed_dim_(state.embed_dim) {
  if (experts_ == 0) throw UnknownGroup("model has no experts");
  const std::size_t width = experts_ * embed_dim_;
  table_ = Mat(cells.size(), width);
  if (cells.empty()) return;

  Mat inputs(cells.size(), state.config.input_dim);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].features.size() != state.config.input_dim) {
      throw DimensionMismatch("cell " + std::to_string(cells[i].cell_id) + " feature dim");
    }
    std::copy(cells[i].features.begin(), cells[i].features.end(), inputs.row(i).begin());
    index_[cells[i].cell_id] = i;
    groups_.push_back(cells[i].group);
  }
  const BatchForward enc = encode_batch(state, inputs, exec);
  std::vector<std::size_t> route(cells.size());
  Mat projected, unit;
  Vec norms(cells.size());
  for (std::size_t v = 0; v < experts_; ++v) {
    std::fill(route.begin(), route.end(), v);
    kernels::routed_forward(state.params.experts, route, enc.base(), projected, exec);
    kernels::normalize_rows(projected, unit, norms, exec);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::copy(unit.row(i).begin(), unit.row(i).end(),
                table_.row(i).begin() + static_cast<std::ptrdiff_t>(v * embed_dim_));
    }
  }
}

std::span<const double> EmbeddingTable::row(std::int64_t cell_id) const {
  auto it = index_.find(cell_id);
  if (it == index_.end()) throw IndexOutOfRange("cell " + std::to_string(cell_id) + " not embedded");
  return table_.row(it->second);
}

std::span<const double> EmbeddingTable::block(std::int64_t cell_id, std::size_t slot) const {
  return row(cell_id).subspan(slot * embed_dim_, embed_dim_);
}

VariationGroupId EmbeddingTable::group(std::int64_t cell_id) const {
  auto it = index_.find(cell_id);
  if (it == index_.end()) throw IndexOutOfRange("cell " + std::to_string(cell_id) + " not embedded");
  return groups_[it->second];
}

double EmbeddingTable::similarity(std::int64_t a, std::int64_t b, const ExpertMode& mode) const {
  return pair_similarity(row(a), group(a), a, row(b), group(b), b, *state_, mode);
}

Vec EmbeddingTable::mean_vector(std::span<const std::int64_t> cell_ids,
                                const ExpertMode& mode) const {
  if (cell_ids.empty()) throw EmptyTreatment("mean of an empty cell set");
  const bool full = mode.kind == ExpertMode::Kind::average;
  if (!full && mode.kind != ExpertMode::Kind::oracle) {
    throw InvalidConfig("eval.expert_mode", "mean-vector shortcut needs average or oracle mode");
  }
  Vec mean(full ? experts_ * embed_dim_ : embed_dim_, 0.0);
  for (std::int64_t id : cell_ids) {
    auto v = full ? row(id) : block(id, state_->route(group(id)));
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += v[k];
  }
  for (double& x : mean) x /= static_cast<double>(cell_ids.size());
  return mean;
}

double treatment_similarity_shortcut(const ModelState& state, std::span<const CellRecord> cells_a,
                                     std::span<const CellRecord> cells_b, const ExpertMode& mode) {
  if (cells_a.empty() || cells_b.empty()) throw EmptyTreatment("treatment has no cells");
  const EmbeddingTable ta(state, cells_a, kernels::Exec::serial);
  const EmbeddingTable tb(state, cells_b, kernels::Exec::serial);
  std::vector<std::int64_t> ia, ib;
  for (const auto& c : cells_a) ia.push_back(c.cell_id);
  for (const auto& c : cells_b) ib.push_back(c.cell_id);
  const double d = dot(ta.mean_vector(ia, mode), tb.mean_vector(ib, mode));
  return mode.kind == ExpertMode::Kind::average ? d / static_cast<double>(state.expert_count()) : d;
}

const ExperimentResult* EvalReport::find(Experiment e) const {
  for (const auto& r : results) {
    if (r.experiment == e) return &r;
  }
  return nullptr;
}

EvalReport run_experiments(const ModelState& state, const std::vector<CellRecord>& records,
                           const std::set<TreatmentId>& part, const EvalCounts& counts,
                           const ExpertMode& mode, std::uint64_t seed, kernels::Exec exec) {
  EvalReport report;
  report.mode = mode;
  report.seed = seed;

  std::vector<CellRecord> cells;
  for (const auto& r : records) {
    if (r.is_control ? counts.mech_vs_control > 0 : part.count(r.treatment) > 0) cells.push_back(r);
  }
  const EmbeddingTable table(state, cells, exec);
  if (mode.kind == ExpertMode::Kind::oracle) {
    // Surface UnknownGroup here rather than inside the parallel region.
    for (const auto& c : cells) state.route(c.group);
  }

  auto tally = [&](Experiment e, const std::vector<TripletTask>& tasks, auto&& sim) {
    std::vector<char> ok(tasks.size(), 0);
    const auto n = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for schedule(static) if (exec == kernels::Exec::parallel)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      const auto& t = tasks[k];
      ok[k] = sim(t.anchor, t.positive) > sim(t.anchor, t.negative) ? 1 : 0;
    }
    ExperimentResult res{e, tasks.size(), 0, 0.0};
    for (char c : ok) res.correct += c ? 1 : 0;
    res.accuracy = static_cast<double>(res.correct) / static_cast<double>(res.n);
    report.results.push_back(res);
  };
  auto cell_sim = [&](std::int64_t a, std::int64_t b) { return table.similarity(a, b, mode); };

  for (Experiment e : {Experiment::mech_vs_mech, Experiment::mech_vs_control}) {
    const std::size_t n = e == Experiment::mech_vs_mech ? counts.mech_vs_mech : counts.mech_vs_control;
    if (n == 0) continue;
    tally(e, sample_triplets(records, part, e, n, seed), cell_sim);
  }

  if (counts.treatment_level > 0) {
    const auto tasks =
        sample_triplets(records, part, Experiment::treatment_level, counts.treatment_level, seed);
    std::map<TreatmentId, std::vector<std::int64_t>> members;
    for (const auto& c : cells) {
      if (!c.is_control) members[c.treatment].push_back(c.cell_id);
    }
    // Pairwise treatment similarities are shared by many triplets.
    std::map<std::pair<TreatmentId, TreatmentId>, double> cache;
    std::map<TreatmentId, Vec> means;
    const bool shortcut = mode.kind != ExpertMode::Kind::random;
    for (const auto& t : tasks) {
      for (TreatmentId other : {t.positive, t.negative}) {
        const auto key = ordered_pair(t.anchor, other);
        if (cache.count(key)) continue;
        const auto& a = members.at(key.first);
        const auto& b = members.at(key.second);
        double s = 0.0;
        if (shortcut) {
          for (TreatmentId id : {key.first, key.second}) {
            if (!means.count(id)) means[id] = table.mean_vector(members.at(id), mode);
          }
          s = dot(means[key.first], means[key.second]);
          if (mode.kind == ExpertMode::Kind::average) s /= static_cast<double>(table.experts());
        } else {
          for (std::int64_t x : a) {
            for (std::int64_t y : b) s += table.similarity(x, y, mode);
          }
          s /= static_cast<double>(a.size()) * static_cast<double>(b.size());
        }
        cache.emplace(key, s);
      }
    }
    tally(Experiment::treatment_level, tasks, [&](std::int64_t a, std::int64_t b) {
      return cache.at(ordered_pair(a, b));
    });
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  std::string out = "experiment,mode,n,correct,accuracy,seed\n";
  for (const auto& r : report.results) {
    out += std::string(to_string(r.experiment)) + "," + to_string(report.mode.kind) + "," +
           std::to_string(r.n) + "," + std::to_string(r.correct) + "," +
           format_double(r.accuracy) + "," + std::to_string(report.seed) + "\n";
  }
  return out;
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  write_text(path, format_report(report));
}

}  // namespace teams
