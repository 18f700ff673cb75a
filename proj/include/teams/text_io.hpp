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

// Small helpers for the line-oriented text formats (CSV, checkpoints, INI).

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace teams {

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);
/// 17 significant digits; also round-trips exactly.
std::string format_double17(double x);

double parse_double(std::string_view s, const std::string& source, std::size_t line);
std::int64_t parse_int(std::string_view s, const std::string& source, std::size_t line);

std::vector<std::string_view> split_fields(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// Reads all lines, stripping a trailing '\r'. Throws IoError naming the path.
std::vector<std::string> read_lines(const std::filesystem::path& path);
/// Writes `content` atomically enough for our purposes. Throws IoError.
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace teams
