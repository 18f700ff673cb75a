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

#include "teams/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "teams/errors.hpp"

namespace teams {

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("dot: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vec l2_normalize(std::span<const double> v) {
  const double n = norm(v);
  if (!(n > kEpsNorm)) throw DegenerateNorm("vector norm " + std::to_string(n) + " <= eps");
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
  const double na = norm(a);
  const double nb = norm(b);
  if (!(na > kEpsNorm) || !(nb > kEpsNorm)) throw DegenerateNorm("cosine of a zero vector");
  return dot(a, b) / (na * nb);
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  return 1.0 - cosine_similarity(a, b);
}

double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

double stable_softmax_nll(std::span<const double> distances, std::size_t target_index) {
  if (target_index >= distances.size()) {
    throw IndexOutOfRange("target " + std::to_string(target_index) + " of " +
                          std::to_string(distances.size()));
  }
  double m = -std::numeric_limits<double>::infinity();
  for (double d : distances) m = std::max(m, -d);
  double s = 0.0;
  for (double d : distances) s += std::exp(-d - m);
  return std::max(0.0, distances[target_index] + m + std::log(s));
}

void softmax_of_negated(std::span<const double> distances, std::span<double> out) {
  double m = -std::numeric_limits<double>::infinity();
  for (double d : distances) m = std::max(m, -d);
  double s = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    out[i] = std::exp(-distances[i] - m);
    s += out[i];
  }
  for (double& p : out) p /= s;
}

Vec matvec(const Mat& m, std::span<const double> x) {
  if (x.size() != m.cols) {
    throw DimensionMismatch("matvec: matrix has " + std::to_string(m.cols) + " cols, input " +
                            std::to_string(x.size()));
  }
  Vec y(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) y[r] = dot(m.row(r), x);
  return y;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace teams
