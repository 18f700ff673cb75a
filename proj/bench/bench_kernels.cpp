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

// Serial reference vs OpenMP kernels on training-sized problems. Set
// OMP_NUM_THREADS or TEAMS_THREADS to compare thread counts.

#include <benchmark/benchmark.h>

#include <vector>

#include "teams/eval.hpp"
#include "teams/kernels.hpp"
#include "teams/losses.hpp"
#include "teams/model.hpp"
#include "teams/rng.hpp"

namespace {

using teams::Mat;
using teams::kernels::Exec;

Mat random_mat(std::size_t r, std::size_t c, std::uint64_t seed) {
  teams::Rng rng(seed);
  Mat m(r, c);
  for (double& x : m.values) x = rng.gaussian();
  return m;
}

Exec exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? Exec::serial : Exec::parallel;
}

void BM_AffineForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Mat w = random_mat(64, 64, 1);
  const Mat in = random_mat(n, 64, 2);
  Mat out;
  for (auto _ : state) {
    teams::kernels::affine_forward(w, {}, in, out, exec_of(state));
    benchmark::DoNotOptimize(out.values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

void BM_AccumulateOuter(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Mat delta = random_mat(n, 64, 3);
  const Mat in = random_mat(n, 64, 4);
  Mat grad(64, 64);
  std::vector<double> bias(64);
  for (auto _ : state) {
    teams::kernels::accumulate_outer(delta, in, {}, grad, bias, exec_of(state));
    benchmark::DoNotOptimize(grad.values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

void BM_Gram(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Mat a = random_mat(n, 32, 5);
  Mat out;
  for (auto _ : state) {
    teams::kernels::gram(a, a, out, exec_of(state));
    benchmark::DoNotOptimize(out.values.data());
  }
}

void BM_TotalLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = teams::init_model(teams::EncoderConfig{24, {64}, 32}, 3, 6, 32, 7);
  const Mat x = random_mat(n, 24, 8);
  std::vector<teams::BatchItem> batch;
  for (std::size_t i = 0; i < n; ++i) {
    batch.push_back({x.row(i), static_cast<teams::TreatmentId>(i % 6),
                     static_cast<teams::VariationGroupId>(i % 3)});
  }
  std::vector<teams::MemoryEntry> memory;
  const Mat m = random_mat(256, 32, 9);
  for (std::size_t i = 0; i < 256; ++i) {
    memory.push_back({teams::l2_normalize(m.row(i)), static_cast<teams::TreatmentId>(i % 6), 0,
                      static_cast<long>(i)});
  }
  for (auto _ : state) {
    auto out = teams::total_loss(model, batch, memory, exec_of(state));
    benchmark::DoNotOptimize(out.value);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

void BM_TripletLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = teams::init_model(teams::EncoderConfig{24, {64}, 32}, 1,
                                      std::vector<teams::TreatmentId>{0, 1, 2, 3, 4, 5}, 32, 7, true);
  const Mat x = random_mat(n, 24, 10);
  std::vector<teams::BatchItem> batch;
  for (std::size_t i = 0; i < n; ++i) {
    batch.push_back({x.row(i), static_cast<teams::TreatmentId>(i / 2 % 6), 0});
  }
  for (auto _ : state) {
    auto out = teams::triplet_loss(model, batch, {0.3}, exec_of(state));
    benchmark::DoNotOptimize(out.value);
  }
}

void Args(benchmark::internal::Benchmark* b, std::vector<long> sizes) {
  for (long n : sizes) {
    b->Args({n, 0});
    b->Args({n, 1});
  }
  b->ArgNames({"n", "parallel"});
}

BENCHMARK(BM_AffineForward)->Apply([](auto* b) { Args(b, {256, 4096}); });
BENCHMARK(BM_AccumulateOuter)->Apply([](auto* b) { Args(b, {256, 4096}); });
BENCHMARK(BM_Gram)->Apply([](auto* b) { Args(b, {128, 1024}); });
BENCHMARK(BM_TotalLoss)->Apply([](auto* b) { Args(b, {64, 1024}); });
BENCHMARK(BM_TripletLoss)->Apply([](auto* b) { Args(b, {64, 256}); });

}  // namespace

BENCHMARK_MAIN();
