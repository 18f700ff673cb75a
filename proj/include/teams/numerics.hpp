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

// Dense f64 vector/matrix primitives shared by every other module.
//
// All reductions run left-to-right in index order so that results are
// bit-reproducible for a fixed input.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace teams {

using Vec = std::vector<double>;

inline constexpr double kEpsNorm = 1e-12;

/// Row-major dense matrix.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  static Mat identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

  bool empty() const { return values.empty(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  friend bool operator==(const Mat&, const Mat&) = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

/// Unit-length copy of `v`. Throws DegenerateNorm when ||v|| <= kEpsNorm.
Vec l2_normalize(std::span<const double> v);

/// 1 - a.b / (|a||b|). Throws DimensionMismatch or DegenerateNorm.
double cosine_distance(std::span<const double> a, std::span<const double> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// log(sum_i exp(x_i)), shifted by the max for stability.
double log_sum_exp(std::span<const double> x);

/// -log(exp(-d_t) / sum_y exp(-d_y)) evaluated through log-sum-exp.
/// Clamped at zero, which only matters for rounding noise.
double stable_softmax_nll(std::span<const double> distances, std::size_t target_index);

/// softmax(-d) into `out`.
void softmax_of_negated(std::span<const double> distances, std::span<double> out);

/// y = M x
Vec matvec(const Mat& m, std::span<const double> x);

bool all_finite(std::span<const double> v);

}  // namespace teams
