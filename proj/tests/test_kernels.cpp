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

// The OpenMP kernels against the serial reference (bitwise) and against
// plain loops (numerically). Sizes are above the parallel cut-off so the
// threaded paths actually run.

#include <gtest/gtest.h>
#include <omp.h>

#include <cstring>

#include "teams/errors.hpp"
#include "teams/kernels.hpp"
#include "teams/rng.hpp"

namespace teams::kernels {
namespace {

Mat random_mat(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Mat m(r, c);
  for (double& x : m.values) x = rng.gaussian();
  return m;
}

bool bitwise_equal(const Mat& a, const Mat& b) {
  return a.rows == b.rows && a.cols == b.cols &&
         std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0;
}

class KernelParity : public ::testing::Test {
 protected:
  void SetUp() override {
    saved_ = omp_get_max_threads();
    omp_set_num_threads(4);
  }
  void TearDown() override { omp_set_num_threads(saved_); }
  int saved_ = 1;
};

TEST_F(KernelParity, AffineForward) {
  const Mat w = random_mat(96, 80, 1);
  const Mat in = random_mat(300, 80, 2);
  Vec bias(96);
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = 0.01 * static_cast<double>(i);
  Mat s, p;
  affine_forward(w, bias, in, s, Exec::serial);
  affine_forward(w, bias, in, p, Exec::parallel);
  EXPECT_TRUE(bitwise_equal(s, p));
  double ref = bias[5];
  for (std::size_t c = 0; c < 80; ++c) ref += w(5, c) * in(17, c);
  EXPECT_NEAR(s(17, 5), ref, 1e-12);
}

TEST_F(KernelParity, AffineBackwardInput) {
  const Mat w = random_mat(64, 72, 3);
  const Mat delta = random_mat(400, 64, 4);
  Mat s, p;
  affine_backward_input(w, delta, s, Exec::serial);
  affine_backward_input(w, delta, p, Exec::parallel);
  EXPECT_TRUE(bitwise_equal(s, p));
  double ref = 0.0;
  for (std::size_t r = 0; r < 64; ++r) ref += w(r, 9) * delta(3, r);
  EXPECT_NEAR(s(3, 9), ref, 1e-12);
}

TEST_F(KernelParity, AccumulateOuterAllRowsAndSubset) {
  const Mat delta = random_mat(500, 64, 5);
  const Mat in = random_mat(500, 48, 6);
  Mat gs(64, 48, 0.5), gp(64, 48, 0.5);
  Vec bs(64, 1.0), bp(64, 1.0);
  accumulate_outer(delta, in, {}, gs, bs, Exec::serial);
  accumulate_outer(delta, in, {}, gp, bp, Exec::parallel);
  EXPECT_TRUE(bitwise_equal(gs, gp));
  EXPECT_EQ(std::memcmp(bs.data(), bp.data(), bs.size() * sizeof(double)), 0);

  std::vector<std::size_t> subset;
  for (std::size_t i = 0; i < 500; i += 3) subset.push_back(i);
  Mat hs(64, 48), hp(64, 48);
  accumulate_outer(delta, in, subset, hs, {}, Exec::serial);
  accumulate_outer(delta, in, subset, hp, {}, Exec::parallel);
  EXPECT_TRUE(bitwise_equal(hs, hp));
  double ref = 0.0;
  for (std::size_t i : subset) ref += delta(i, 7) * in(i, 11);
  EXPECT_NEAR(hs(7, 11), ref, 1e-11);
}

TEST_F(KernelParity, RoutedForwardAndBackward) {
  std::vector<Mat> ws = {random_mat(40, 56, 7), random_mat(40, 56, 8), random_mat(40, 56, 9)};
  const Mat in = random_mat(600, 56, 10);
  std::vector<std::size_t> route(600);
  for (std::size_t i = 0; i < route.size(); ++i) route[i] = (i * 7) % 3;
  Mat s, p;
  routed_forward(ws, route, in, s, Exec::serial);
  routed_forward(ws, route, in, p, Exec::parallel);
  EXPECT_TRUE(bitwise_equal(s, p));
  double ref = 0.0;
  for (std::size_t c = 0; c < 56; ++c) ref += ws[route[13]](2, c) * in(13, c);
  EXPECT_NEAR(s(13, 2), ref, 1e-12);

  const Mat delta = random_mat(600, 40, 11);
  Mat bs, bp;
  routed_backward_input(ws, route, delta, bs, Exec::serial);
  routed_backward_input(ws, route, delta, bp, Exec::parallel);
  EXPECT_TRUE(bitwise_equal(bs, bp));
}

TEST_F(KernelParity, Gram) {
  const Mat a = random_mat(200, 64, 12);
  Mat s, p;
  gram(a, a, s, Exec::serial);
  gram(a, a, p, Exec::parallel);
  EXPECT_TRUE(bitwise_equal(s, p));
  EXPECT_EQ(s(3, 8), s(8, 3));
}

TEST_F(KernelParity, NormalizeRowsAndBackward) {
  const Mat in = random_mat(800, 40, 13);
  Mat us, up;
  Vec ns(800), np(800);
  normalize_rows(in, us, ns, Exec::serial);
  normalize_rows(in, up, np, Exec::parallel);
  EXPECT_TRUE(bitwise_equal(us, up));
  double sq = 0.0;
  for (double x : us.row(5)) sq += x * x;
  EXPECT_NEAR(sq, 1.0, 1e-14);

  const Mat g = random_mat(800, 40, 14);
  Mat bs, bp;
  normalize_rows_backward(us, ns, g, bs, Exec::serial);
  normalize_rows_backward(up, np, g, bp, Exec::parallel);
  EXPECT_TRUE(bitwise_equal(bs, bp));
  // The backward output is orthogonal to the unit row.
  double o = 0.0;
  for (std::size_t c = 0; c < 40; ++c) o += bs(9, c) * us(9, c);
  EXPECT_NEAR(o, 0.0, 1e-12);
}

TEST_F(KernelParity, DegenerateRowThrowsOnBothPaths) {
  Mat in = random_mat(600, 32, 15);
  for (double& x : in.row(321)) x = 0.0;
  Mat out;
  Vec norms(600);
  EXPECT_THROW(normalize_rows(in, out, norms, Exec::serial), DegenerateNorm);
  EXPECT_THROW(normalize_rows(in, out, norms, Exec::parallel), DegenerateNorm);
}

TEST_F(KernelParity, ThreadCountDoesNotChangeResults) {
  const Mat w = random_mat(128, 128, 16);
  const Mat in = random_mat(256, 128, 17);
  Mat one, many;
  omp_set_num_threads(1);
  affine_forward(w, {}, in, one, Exec::parallel);
  omp_set_num_threads(3);
  affine_forward(w, {}, in, many, Exec::parallel);
  EXPECT_TRUE(bitwise_equal(one, many));
}

TEST(Kernels, ShapeChecks) {
  Mat out;
  EXPECT_THROW(affine_forward(Mat(3, 4), {}, Mat(2, 5), out), DimensionMismatch);
  EXPECT_THROW(gram(Mat(2, 3), Mat(2, 4), out), DimensionMismatch);
}

}  // namespace
}  // namespace teams::kernels
