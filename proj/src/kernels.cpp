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

#include "teams/kernels.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

#include "teams/errors.hpp"

namespace teams::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kMinParallelWork = 1 << 14;

bool worth_it(Exec exec, std::size_t work) {
  return exec == Exec::parallel && work >= kMinParallelWork && omp_get_max_threads() > 1;
}

void resize(Mat& m, std::size_t rows, std::size_t cols) {
  m.rows = rows;
  m.cols = cols;
  m.values.assign(rows * cols, 0.0);
}

void check_cols(const Mat& w, const Mat& in, const char* what) {
  if (w.cols != in.cols) {
    throw DimensionMismatch(std::string(what) + ": weight cols " + std::to_string(w.cols) +
                            " vs input cols " + std::to_string(in.cols));
  }
}

void affine_row(const Mat& w, std::span<const double> bias, const double* x, double* y) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.values.data() + r * w.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * x[c];
    y[r] = bias.empty() ? acc : acc + bias[r];
  }
}

void transposed_row(const Mat& w, const double* d, double* y) {
  for (std::size_t c = 0; c < w.cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.values.data() + r * w.cols;
    for (std::size_t c = 0; c < w.cols; ++c) y[c] += wr[c] * d[r];
  }
}

}  // namespace

void affine_forward(const Mat& w, std::span<const double> bias, const Mat& in, Mat& out,
                    Exec exec) {
  check_cols(w, in, "affine_forward");
  resize(out, in.rows, w.rows);
  const auto n = static_cast<std::ptrdiff_t>(in.rows);
  if (worth_it(exec, in.rows * w.rows * w.cols)) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      affine_row(w, bias, in.values.data() + i * in.cols, out.values.data() + i * out.cols);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      affine_row(w, bias, in.values.data() + i * in.cols, out.values.data() + i * out.cols);
    }
  }
}

void affine_backward_input(const Mat& w, const Mat& delta, Mat& out, Exec exec) {
  if (delta.cols != w.rows) {
    throw DimensionMismatch("affine_backward_input: delta cols " + std::to_string(delta.cols) +
                            " vs weight rows " + std::to_string(w.rows));
  }
  resize(out, delta.rows, w.cols);
  const auto n = static_cast<std::ptrdiff_t>(delta.rows);
  if (worth_it(exec, delta.rows * w.rows * w.cols)) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      transposed_row(w, delta.values.data() + i * delta.cols, out.values.data() + i * out.cols);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      transposed_row(w, delta.values.data() + i * delta.cols, out.values.data() + i * out.cols);
    }
  }
}

void accumulate_outer(const Mat& delta, const Mat& in, std::span<const std::size_t> samples,
                      Mat& grad_w, std::span<double> grad_b, Exec exec) {
  if (delta.rows != in.rows || grad_w.rows != delta.cols || grad_w.cols != in.cols ||
      (!grad_b.empty() && grad_b.size() != delta.cols)) {
    throw ShapeMismatch("accumulate_outer: incompatible shapes");
  }
  const std::size_t count = samples.empty() ? delta.rows : samples.size();
  auto sample_at = [&](std::size_t k) { return samples.empty() ? k : samples[k]; };

  if (worth_it(exec, count * grad_w.rows * grad_w.cols)) {
    // One output row per task; samples are folded in ascending order.
    const auto rows = static_cast<std::ptrdiff_t>(grad_w.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      double* gw = grad_w.values.data() + r * grad_w.cols;
      double gb = grad_b.empty() ? 0.0 : grad_b[r];
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = sample_at(k);
        const double d = delta(i, r);
        const double* x = in.values.data() + i * in.cols;
        for (std::size_t c = 0; c < in.cols; ++c) gw[c] += d * x[c];
        gb += d;
      }
      if (!grad_b.empty()) grad_b[r] = gb;
    }
    return;
  }

  // Reference: sample-major accumulation, the textbook form.
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = sample_at(k);
    for (std::size_t r = 0; r < grad_w.rows; ++r) {
      const double d = delta(i, r);
      double* gw = grad_w.values.data() + r * grad_w.cols;
      const double* x = in.values.data() + i * in.cols;
      for (std::size_t c = 0; c < in.cols; ++c) gw[c] += d * x[c];
      if (!grad_b.empty()) grad_b[r] += d;
    }
  }
}

void routed_forward(std::span<const Mat> ws, std::span<const std::size_t> route, const Mat& in,
                    Mat& out, Exec exec) {
  if (ws.empty() || route.size() != in.rows) throw ShapeMismatch("routed_forward: bad routing");
  for (const Mat& w : ws) check_cols(w, in, "routed_forward");
  resize(out, in.rows, ws.front().rows);
  const auto n = static_cast<std::ptrdiff_t>(in.rows);
  const std::span<const double> no_bias;
  if (worth_it(exec, in.rows * ws.front().rows * in.cols)) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      affine_row(ws[route[i]], no_bias, in.values.data() + i * in.cols,
                 out.values.data() + i * out.cols);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      affine_row(ws[route[i]], no_bias, in.values.data() + i * in.cols,
                 out.values.data() + i * out.cols);
    }
  }
}

void routed_backward_input(std::span<const Mat> ws, std::span<const std::size_t> route,
                           const Mat& delta, Mat& out, Exec exec) {
  if (ws.empty() || route.size() != delta.rows) {
    throw ShapeMismatch("routed_backward_input: bad routing");
  }
  resize(out, delta.rows, ws.front().cols);
  const auto n = static_cast<std::ptrdiff_t>(delta.rows);
  if (worth_it(exec, delta.rows * ws.front().rows * ws.front().cols)) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      transposed_row(ws[route[i]], delta.values.data() + i * delta.cols,
                     out.values.data() + i * out.cols);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      transposed_row(ws[route[i]], delta.values.data() + i * delta.cols,
                     out.values.data() + i * out.cols);
    }
  }
}

void gram(const Mat& a, const Mat& b, Mat& out, Exec exec) {
  if (a.cols != b.cols) throw DimensionMismatch("gram: column counts differ");
  // Same arithmetic as affine_forward with W = b and no bias.
  affine_forward(b, {}, a, out, exec);
}

void normalize_rows(const Mat& in, Mat& out, std::span<double> norms, Exec exec) {
  if (norms.size() != in.rows) throw ShapeMismatch("normalize_rows: norms size");
  resize(out, in.rows, in.cols);
  const auto n = static_cast<std::ptrdiff_t>(in.rows);
  bool degenerate = false;
  auto body = [&](std::ptrdiff_t i) {
    const double nr = norm(in.row(i));
    norms[i] = nr;
    // NaN passes through so the caller reports a non-finite loss.
    if (nr <= kEpsNorm) return false;
    auto src = in.row(i);
    auto dst = out.row(i);
    for (std::size_t c = 0; c < in.cols; ++c) dst[c] = src[c] / nr;
    return true;
  };
  if (worth_it(exec, in.rows * in.cols * 8)) {
#pragma omp parallel for schedule(static) reduction(|| : degenerate)
    for (std::ptrdiff_t i = 0; i < n; ++i) degenerate = !body(i) || degenerate;
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) degenerate = !body(i) || degenerate;
  }
  if (degenerate) throw DegenerateNorm("projection output has ~zero norm");
}

void normalize_rows_backward(const Mat& unit, std::span<const double> norms, const Mat& grad,
                             Mat& out, Exec exec) {
  if (!unit.same_shape(grad) || norms.size() != unit.rows) {
    throw ShapeMismatch("normalize_rows_backward: incompatible shapes");
  }
  resize(out, unit.rows, unit.cols);
  const auto n = static_cast<std::ptrdiff_t>(unit.rows);
  auto body = [&](std::ptrdiff_t i) {
    auto u = unit.row(i);
    auto g = grad.row(i);
    auto o = out.row(i);
    const double ug = dot(u, g);
    for (std::size_t c = 0; c < unit.cols; ++c) o[c] = (g[c] - u[c] * ug) / norms[i];
  };
  if (worth_it(exec, unit.rows * unit.cols * 8)) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
  }
}

int worker_threads() { return omp_get_max_threads(); }

int configure_threads_from_env() {
  if (const char* env = std::getenv("TEAMS_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && n > 0) omp_set_num_threads(static_cast<int>(n));
  }
  return omp_get_max_threads();
}

}  // namespace teams::kernels
