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

#include "teams/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "teams/errors.hpp"
#include "teams/rng.hpp"
#include "teams/text_io.hpp"

namespace teams {

namespace {

constexpr std::uint64_t kDatagenStream = 0x64617461ULL;  // "data"
constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;  // "split"
constexpr const char* kFixedColumns[] = {"cell_id", "treatment_id", "mechanism_ids",
                                         "variation_group", "is_control"};
constexpr std::size_t kFixedCount = 5;

Vec gaussian_vec(Rng& rng, std::size_t n) {
  Vec v(n);
  for (double& x : v) x = rng.gaussian();
  return v;
}

Vec scaled_direction(Rng& rng, std::size_t n, double scale) {
  Vec u = l2_normalize(gaussian_vec(rng, n));
  for (double& x : u) x *= scale;
  return u;
}

Vec apply_nuisance(const NuisanceMap& map, std::span<const double> raw) {
  Vec out = matvec(map.a, raw);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += map.b[i];
  return out;
}

}  // namespace

std::size_t GenConfig::record_count() const {
  return treatment_count() * n_variation_groups * cells_per_treatment_per_group +
         n_variation_groups * n_control_cells_per_group;
}

void validate(const GenConfig& c) {
  auto positive = [](std::size_t v, const char* key) {
    if (v == 0) throw InvalidConfig(key, "must be >= 1");
  };
  positive(c.n_mechanisms, "gen.n_mechanisms");
  positive(c.treatments_per_mechanism, "gen.treatments_per_mechanism");
  positive(c.n_variation_groups, "gen.n_variation_groups");
  positive(c.cells_per_treatment_per_group, "gen.cells_per_treatment_per_group");
  positive(c.n_control_cells_per_group, "gen.n_control_cells_per_group");
  positive(c.feature_dim, "gen.feature_dim");
  auto non_negative = [](double v, const char* key) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidConfig(key, "must be finite and >= 0");
  };
  non_negative(c.class_sep, "gen.class_sep");
  non_negative(c.treatment_sep, "gen.treatment_sep");
  non_negative(c.noise_sigma, "gen.noise_sigma");
  non_negative(c.nuisance_strength, "gen.nuisance_strength");
}

bool separation_warning(const GenConfig& c) { return !(c.class_sep > c.treatment_sep); }

// Sampling order (one stream keyed by the seed):
//   1. per mechanism:  mu_m = class_sep * normalize(gauss(D))
//   2. per treatment (mechanism-major): mean = mu_m + treatment_sep * normalize(gauss(D))
//   3. per group: A_v = I + s * gauss(D x D, row-major) / sqrt(D), b_v = s * gauss(D)
//   4. per treatment, per group, per cell: A_v (mean + sigma * gauss(D)) + b_v
//   5. per group, per control cell:        A_v (sigma * gauss(D)) + b_v
Dataset generate_dataset(const GenConfig& config) {
  validate(config);
  const std::size_t d = config.feature_dim;
  Rng rng(derive_key(config.seed, kDatagenStream));
  Dataset ds;

  for (std::size_t m = 0; m < config.n_mechanisms; ++m) {
    ds.mechanism_prototypes.push_back(scaled_direction(rng, d, config.class_sep));
  }
  for (std::size_t m = 0; m < config.n_mechanisms; ++m) {
    for (std::size_t j = 0; j < config.treatments_per_mechanism; ++j) {
      Vec mean = scaled_direction(rng, d, config.treatment_sep);
      for (std::size_t i = 0; i < d; ++i) mean[i] += ds.mechanism_prototypes[m][i];
      ds.treatment_means.push_back(std::move(mean));
    }
  }
  const double s = config.nuisance_strength;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t v = 0; v < config.n_variation_groups; ++v) {
    NuisanceMap map{Mat::identity(d), Vec(d)};
    for (double& a : map.a.values) a += s * rng.gaussian() * inv_sqrt_d;
    for (double& b : map.b) b = s * rng.gaussian();
    ds.nuisance.push_back(std::move(map));
  }

  std::int64_t next_id = 0;
  ds.records.reserve(config.record_count());
  for (std::size_t t = 0; t < config.treatment_count(); ++t) {
    const auto mechanism = static_cast<MechanismId>(t / config.treatments_per_mechanism);
    for (std::size_t v = 0; v < config.n_variation_groups; ++v) {
      for (std::size_t c = 0; c < config.cells_per_treatment_per_group; ++c) {
        Vec raw = ds.treatment_means[t];
        for (double& x : raw) x += config.noise_sigma * rng.gaussian();
        ds.records.push_back({next_id++, apply_nuisance(ds.nuisance[v], raw), static_cast<TreatmentId>(t),
                              {mechanism}, static_cast<VariationGroupId>(v), false});
      }
    }
  }
  for (std::size_t v = 0; v < config.n_variation_groups; ++v) {
    for (std::size_t c = 0; c < config.n_control_cells_per_group; ++c) {
      Vec raw(d);
      for (double& x : raw) x = config.noise_sigma * rng.gaussian();
      ds.records.push_back({next_id++, apply_nuisance(ds.nuisance[v], raw), config.control_treatment(), {},
                            static_cast<VariationGroupId>(v), true});
    }
  }
  return ds;
}

std::vector<CellRecord> generate(const GenConfig& config) {
  return generate_dataset(config).records;
}

void write_dataset(const std::vector<CellRecord>& records, const std::filesystem::path& path) {
  const std::size_t d = records.empty() ? 0 : records.front().features.size();
  std::string out;
  for (std::size_t k = 0; k < kFixedCount; ++k) {
    if (k) out += ',';
    out += kFixedColumns[k];
  }
  for (std::size_t i = 0; i < d; ++i) out += ",f" + std::to_string(i);
  out += '\n';
  for (const auto& r : records) {
    if (r.features.size() != d) {
      throw DimensionMismatch("record " + std::to_string(r.cell_id) + " has " +
                              std::to_string(r.features.size()) + " features, expected " +
                              std::to_string(d));
    }
    out += std::to_string(r.cell_id);
    out += ',';
    out += std::to_string(r.treatment);
    out += ',';
    for (std::size_t k = 0; k < r.mechanisms.size(); ++k) {
      if (k) out += '|';
      out += std::to_string(r.mechanisms[k]);
    }
    out += ',';
    out += std::to_string(r.group);
    out += r.is_control ? ",1" : ",0";
    for (double x : r.features) {
      out += ',';
      out += format_double(x);
    }
    out += '\n';
  }
  write_text(path, out);
}

std::vector<CellRecord> read_dataset(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const std::string src = path.string();
  if (lines.empty()) throw ParseError(src, 1, "missing header");
  const auto header = split_fields(lines[0], ',');
  if (header.size() < kFixedCount) throw ParseError(src, 1, "header has too few columns");
  for (std::size_t k = 0; k < kFixedCount; ++k) {
    if (header[k] != kFixedColumns[k]) {
      throw ParseError(src, 1, "expected column '" + std::string(kFixedColumns[k]) + "'");
    }
  }
  const std::size_t d = header.size() - kFixedCount;
  for (std::size_t i = 0; i < d; ++i) {
    if (header[kFixedCount + i] != "f" + std::to_string(i)) {
      throw ParseError(src, 1, "expected feature column f" + std::to_string(i));
    }
  }

  std::vector<CellRecord> records;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const std::size_t line_no = n + 1;
    if (lines[n].empty()) continue;
    const auto f = split_fields(lines[n], ',');
    if (f.size() != header.size()) {
      throw ParseError(src, line_no, "expected " + std::to_string(header.size()) +
                                         " columns, found " + std::to_string(f.size()));
    }
    CellRecord r;
    r.cell_id = parse_int(f[0], src, line_no);
    r.treatment = parse_int(f[1], src, line_no);
    if (!f[2].empty()) {
      for (auto m : split_fields(f[2], '|')) r.mechanisms.push_back(parse_int(m, src, line_no));
      std::sort(r.mechanisms.begin(), r.mechanisms.end());
    }
    r.group = parse_int(f[3], src, line_no);
    const auto ctl = parse_int(f[4], src, line_no);
    if (ctl != 0 && ctl != 1) throw ParseError(src, line_no, "is_control must be 0 or 1");
    r.is_control = ctl == 1;
    if (r.is_control != r.mechanisms.empty()) {
      throw ParseError(src, line_no,
                       "control cells must have no mechanisms; treated cells at least one");
    }
    if (r.group < 0 || r.treatment < 0) throw ParseError(src, line_no, "negative id");
    r.features.reserve(d);
    for (std::size_t i = 0; i < d; ++i) {
      r.features.push_back(parse_double(f[kFixedCount + i], src, line_no));
    }
    records.push_back(std::move(r));
  }
  return records;
}

const std::set<TreatmentId>& SplitSpec::part(SplitPart p) const {
  switch (p) {
    case SplitPart::train: return train;
    case SplitPart::val: return val;
    case SplitPart::test: return test;
  }
  return test;
}

const char* to_string(SplitPart p) {
  switch (p) {
    case SplitPart::train: return "train";
    case SplitPart::val: return "val";
    case SplitPart::test: return "test";
  }
  return "?";
}

SplitPart split_part_from_string(const std::string& s) {
  if (s == "train") return SplitPart::train;
  if (s == "val") return SplitPart::val;
  if (s == "test") return SplitPart::test;
  throw InvalidConfig("split", "unknown split part '" + s + "'");
}

SplitSpec split_by_treatment(const std::vector<CellRecord>& records,
                             const std::array<double, 3>& fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0) || !std::isfinite(f)) {
      throw InvalidConfig("split.fractions", "fractions must be finite and >= 0");
    }
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidConfig("split.fractions", "fractions sum to " + format_double(total) + ", not 1");
  }

  std::set<TreatmentId> ids;
  for (const auto& r : records) {
    if (!r.is_control) ids.insert(r.treatment);
  }
  if (ids.size() < 3) {
    throw TooFewTreatments("need >= 3 non-control treatments, found " +
                           std::to_string(ids.size()));
  }
  std::vector<TreatmentId> order(ids.begin(), ids.end());
  Rng rng(derive_key(seed, kSplitStream));
  for (std::size_t i = order.size(); i-- > 1;) {
    std::swap(order[i], order[static_cast<std::size_t>(rng.below(i + 1))]);
  }

  const auto n = static_cast<double>(order.size());
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double quota = fractions[k] * n;
    counts[k] = static_cast<std::size_t>(std::floor(quota));
    remainder[k] = quota - std::floor(quota);
    assigned += counts[k];
  }
  std::array<std::size_t, 3> by_remainder{0, 1, 2};
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < order.size(); ++k, ++assigned) ++counts[by_remainder[k % 3]];

  SplitSpec split;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < counts[0]; ++i) split.train.insert(order[pos++]);
  for (std::size_t i = 0; i < counts[1]; ++i) split.val.insert(order[pos++]);
  while (pos < order.size()) split.test.insert(order[pos++]);
  return split;
}

void write_split(const SplitSpec& split, const std::filesystem::path& path) {
  std::vector<std::pair<TreatmentId, SplitPart>> rows;
  for (auto p : {SplitPart::train, SplitPart::val, SplitPart::test}) {
    for (TreatmentId t : split.part(p)) rows.emplace_back(t, p);
  }
  std::sort(rows.begin(), rows.end());
  std::string out = "treatment_id,split\n";
  for (const auto& [t, p] : rows) out += std::to_string(t) + "," + to_string(p) + "\n";
  write_text(path, out);
}

SplitSpec read_split(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const std::string src = path.string();
  if (lines.empty() || lines[0] != "treatment_id,split") {
    throw ParseError(src, 1, "expected header 'treatment_id,split'");
  }
  SplitSpec split;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto f = split_fields(lines[n], ',');
    if (f.size() != 2) throw ParseError(src, n + 1, "expected 2 columns");
    const TreatmentId t = parse_int(f[0], src, n + 1);
    SplitPart p;
    try {
      p = split_part_from_string(std::string(trim(f[1])));
    } catch (const InvalidConfig&) {
      throw ParseError(src, n + 1, "unknown split '" + std::string(f[1]) + "'");
    }
    if (split.train.count(t) || split.val.count(t) || split.test.count(t)) {
      throw ParseError(src, n + 1, "treatment listed twice");
    }
    switch (p) {
      case SplitPart::train: split.train.insert(t); break;
      case SplitPart::val: split.val.insert(t); break;
      case SplitPart::test: split.test.insert(t); break;
    }
  }
  return split;
}

}  // namespace teams
