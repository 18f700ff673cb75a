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

#include <filesystem>

#include "teams/errors.hpp"
#include "teams/run_config.hpp"
#include "teams/text_io.hpp"

namespace teams {
namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "teams_test_run_config";
  std::filesystem::create_directories(dir);
  return dir / name;
}

TEST(RunConfig, EveryKeyRoundTripsThroughText) {
  const RunConfig defaults;
  for (const auto& k : config_keys()) {
    RunConfig c;
    const std::string text = get_config_value(defaults, k.key);
    set_config_value(c, k.key, text);
    EXPECT_EQ(get_config_value(c, k.key), text) << k.key;
  }
}

TEST(RunConfig, SetsTypedFields) {
  RunConfig c;
  set_config_value(c, "train.method", "online_negatives_adversarial");
  set_config_value(c, "train.hidden_dims", "16,8");
  set_config_value(c, "split.fractions", "0.6,0.2,0.2");
  set_config_value(c, "eval.expert_mode", "random");
  set_config_value(c, "train.hidden_dims", "16,8");
  EXPECT_EQ(c.train.method, Method::online_negatives_adversarial);
  EXPECT_EQ(c.train.hidden_dims, (std::vector<std::size_t>{16, 8}));
  EXPECT_EQ(c.split_fractions[0], 0.6);
  EXPECT_EQ(c.eval_mode, ExpertMode::Kind::random);
  set_config_value(c, "train.hidden_dims", "");
  EXPECT_TRUE(c.train.hidden_dims.empty());
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  RunConfig c;
  const auto key_of = [&](const std::string& key, const std::string& value) {
    try {
      set_config_value(c, key, value);
    } catch (const InvalidConfig& e) {
      return e.key();
    }
    return std::string("<accepted>");
  };
  EXPECT_EQ(key_of("train.colour", "red"), "train.colour");
  EXPECT_EQ(key_of("train.epochs", "ten"), "train.epochs");
  EXPECT_EQ(key_of("train.epochs", "-1"), "train.epochs");
  EXPECT_EQ(key_of("gen.noise_sigma", "1.5x"), "gen.noise_sigma");
  EXPECT_EQ(key_of("split.fractions", "0.5,0.5"), "split.fractions");
}

TEST(RunConfig, IniFileWithSectionsAndComments) {
  write_text(scratch("a.ini"),
             "# experiment\n"
             "[train]\n"
             "epochs = 3   \n"
             "; ignored\n"
             "lr=0.01\n"
             "\n"
             "[gen]\n"
             "seed = 7\n"
             "[]\n"
             "paths.checkpoint = out/x.ckpt\n");
  RunConfig c;
  load_config_file(scratch("a.ini"), c);
  EXPECT_EQ(c.train.epochs, 3u);
  EXPECT_EQ(c.train.lr, 0.01);
  EXPECT_EQ(c.gen.seed, 7u);
  EXPECT_EQ(c.checkpoint, "out/x.ckpt");
  // Later assignments win, as command-line flags do over the file.
  set_config_value(c, "train.epochs", "5");
  EXPECT_EQ(c.train.epochs, 5u);
}

TEST(RunConfig, IniErrors) {
  write_text(scratch("bad.ini"), "[train]\nepochs\n");
  try {
    RunConfig c;
    load_config_file(scratch("bad.ini"), c);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  write_text(scratch("unknown.ini"), "[train]\nfoo = 1\n");
  RunConfig c;
  EXPECT_THROW(load_config_file(scratch("unknown.ini"), c), InvalidConfig);
  EXPECT_THROW(load_config_file(scratch("missing.ini"), c), IoError);
}

TEST(RunConfig, ValidateCoversAllSections) {
  RunConfig c;
  EXPECT_NO_THROW(validate(c));
  c.train.batch_size = 1;
  EXPECT_THROW(validate(c), InvalidConfig);
  c = {};
  c.gen.n_variation_groups = 0;
  EXPECT_THROW(validate(c), InvalidConfig);
  c = {};
  c.eval_part = "holdout";
  EXPECT_THROW(validate(c), InvalidConfig);
}

}  // namespace
}  // namespace teams
