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

#pragma once

#include <stdexcept>
#include <string>

namespace teams {

// Every library failure derives from Error so callers can catch one type.
// The CLI maps the concrete type to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TEAMS_DEFINE_ERROR(Name)              \
  class Name : public Error {                 \
   public:                                    \
    explicit Name(const std::string& what)    \
        : Error(std::string(#Name ": ") + what) {} \
  }

TEAMS_DEFINE_ERROR(DegenerateNorm);
TEAMS_DEFINE_ERROR(DimensionMismatch);
TEAMS_DEFINE_ERROR(IndexOutOfRange);
TEAMS_DEFINE_ERROR(UnknownGroup);
TEAMS_DEFINE_ERROR(UnknownTreatment);
TEAMS_DEFINE_ERROR(EmptyPairSet);
TEAMS_DEFINE_ERROR(ShapeMismatch);
TEAMS_DEFINE_ERROR(EmptySplit);
TEAMS_DEFINE_ERROR(TooFewTreatments);
TEAMS_DEFINE_ERROR(EmptyTreatment);
TEAMS_DEFINE_ERROR(InfeasibleExperiment);
TEAMS_DEFINE_ERROR(IoError);
TEAMS_DEFINE_ERROR(VersionMismatch);

#undef TEAMS_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error("ParseError: " + source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class InvalidConfig : public Error {
 public:
  InvalidConfig(const std::string& key, const std::string& what)
      : Error("InvalidConfig: " + key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(long step, double value)
      : Error("NonFiniteLoss: step " + std::to_string(step) + " produced loss " +
              std::to_string(value)),
        step_(step),
        value_(value) {}
  long step() const { return step_; }
  double value() const { return value_; }

 private:
  long step_;
  double value_;
};

}  // namespace teams
