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

// Batched dense kernels used by the model's forward and backward passes.
//
// Each kernel has a plain serial reference and an OpenMP variant. The
// OpenMP variants parallelize only over independent output rows, and every
// output element is still reduced over samples in ascending index order, so
// both variants produce bitwise-identical results for any thread count.

#pragma once

#include <cstddef>
#include <span>

#include "teams/numerics.hpp"

namespace teams::kernels {

enum class Exec { serial, parallel };

/// out.row(i) = W * in.row(i) + bias. `bias` may be empty. `out` is resized.
void affine_forward(const Mat& w, std::span<const double> bias, const Mat& in, Mat& out,
                    Exec exec = Exec::parallel);

/// out.row(i) = W^T * delta.row(i). `out` is resized.
void affine_backward_input(const Mat& w, const Mat& delta, Mat& out, Exec exec = Exec::parallel);

/// grad_w(r, c) += sum_{i in samples} delta(i, r) * in(i, c)
/// grad_b(r)    += sum_{i in samples} delta(i, r)          (skipped when grad_b is empty)
/// An empty `samples` span means every row.
void accumulate_outer(const Mat& delta, const Mat& in, std::span<const std::size_t> samples,
                      Mat& grad_w, std::span<double> grad_b, Exec exec = Exec::parallel);

/// out.row(i) = ws[route[i]] * in.row(i)
void routed_forward(std::span<const Mat> ws, std::span<const std::size_t> route, const Mat& in,
                    Mat& out, Exec exec = Exec::parallel);

/// out.row(i) = ws[route[i]]^T * delta.row(i)
void routed_backward_input(std::span<const Mat> ws, std::span<const std::size_t> route,
                           const Mat& delta, Mat& out, Exec exec = Exec::parallel);

/// out(i, j) = a.row(i) . b.row(j)
void gram(const Mat& a, const Mat& b, Mat& out, Exec exec = Exec::parallel);

/// Row-wise l2 normalization. `norms` receives the pre-normalization norms.
/// Throws DegenerateNorm if any row norm is <= kEpsNorm.
void normalize_rows(const Mat& in, Mat& out, std::span<double> norms, Exec exec = Exec::parallel);

/// Backward of normalize_rows: given unit rows `unit`, their original norms
/// and upstream grads, out.row(i) = (g - u (u . g)) / norm.
void normalize_rows_backward(const Mat& unit, std::span<const double> norms, const Mat& grad,
                             Mat& out, Exec exec = Exec::parallel);

/// Number of worker threads the parallel variants will use.
int worker_threads();

/// Applies TEAMS_THREADS (if set and positive) as the OpenMP thread cap.
/// Returns the effective thread count.
int configure_threads_from_env();

}  // namespace teams::kernels
