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

#include <sstream>

#include "teams/errors.hpp"
#include "teams/run_config.hpp"
#include "teams/text_io.hpp"
#include "teams/trainer.hpp"

namespace teams {

namespace {

constexpr const char* kMagic = "TEAMS-CKPT";

void write_tensor(std::string& out, const std::string& name, std::size_t rows, std::size_t cols,
                  std::span<const double> values) {
  out += "tensor " + name + " " + std::to_string(rows) + " " + std::to_string(cols) + "\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out += ' ';
      out += format_double17(values[r * cols + c]);
    }
    out += '\n';
  }
}

std::string join_doubles(std::span<const double> xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double17(xs[i]);
  }
  return out;
}

class Reader {
 public:
  Reader(const std::string& text, std::string source) : source_(std::move(source)) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines_.push_back(std::move(line));
    }
  }

  bool done() const { return pos_ >= lines_.size(); }
  const std::string& peek() const { return lines_[pos_]; }
  std::size_t line_no() const { return pos_ + 1; }
  const std::string& next() {
    if (done()) fail("unexpected end of checkpoint");
    return lines_[pos_++];
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source_, std::min(pos_ + 1, lines_.size()), what);
  }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

std::size_t parse_count(Reader& rd, std::string_view s) {
  const auto v = parse_int(s, rd.source(), rd.line_no() - 1);
  if (v < 0) rd.fail("negative size");
  return static_cast<std::size_t>(v);
}

Mat read_tensor(Reader& rd, const std::string& expected_name) {
  const std::string header = rd.next();
  const auto f = split_fields(header, ' ');
  if (f.size() != 4 || f[0] != "tensor") rd.fail("expected 'tensor <name> <rows> <cols>'");
  if (f[1] != expected_name) {
    rd.fail("expected tensor '" + expected_name + "', found '" + std::string(f[1]) + "'");
  }
  Mat m(parse_count(rd, f[2]), parse_count(rd, f[3]));
  for (std::size_t r = 0; r < m.rows; ++r) {
    const std::string& line = rd.next();
    const auto vals = m.cols == 0 ? std::vector<std::string_view>{} : split_fields(line, ' ');
    if (vals.size() != m.cols) rd.fail("expected " + std::to_string(m.cols) + " values");
    for (std::size_t c = 0; c < m.cols; ++c) {
      m(r, c) = parse_double(vals[c], rd.source(), rd.line_no() - 1);
    }
  }
  return m;
}

}  // namespace

std::string format_checkpoint(const Checkpoint& ckpt) {
  const ModelState& m = ckpt.model;
  std::string out = std::string(kMagic) + " v" + std::to_string(Checkpoint::kFormatVersion) + "\n";
  RunConfig rc;
  rc.train = ckpt.config;
  for (const auto& k : config_keys()) {
    if (k.key.rfind("train.", 0) == 0) out += k.key + "=" + k.get(rc) + "\n";
  }
  out += "best_epoch=" + std::to_string(ckpt.epoch) + "\n";
  out += "val_history=" + join_doubles(ckpt.val_history) + "\n";
  out += "model.input_dim=" + std::to_string(m.config.input_dim) + "\n";
  out += "model.hidden_dims=" + join_sizes(m.config.hidden_dims) + "\n";
  out += "model.output_dim=" + std::to_string(m.config.output_dim) + "\n";
  out += "model.embed_dim=" + std::to_string(m.embed_dim) + "\n";
  out += "model.shared_expert=" + std::string(m.shared_expert ? "1" : "0") + "\n";
  out += "model.experts=" + std::to_string(m.expert_count()) + "\n";
  std::string ids;
  for (std::size_t i = 0; i < m.exemplar_treatments.size(); ++i) {
    if (i) ids += ',';
    ids += std::to_string(m.exemplar_treatments[i]);
  }
  out += "model.exemplar_treatments=" + ids + "\n";
  for (std::size_t l = 0; l < m.params.encoder.size(); ++l) {
    const auto& layer = m.params.encoder[l];
    const std::string p = "encoder." + std::to_string(l);
    write_tensor(out, p + ".weight", layer.weight.rows, layer.weight.cols, layer.weight.values);
    write_tensor(out, p + ".bias", 1, layer.bias.size(), layer.bias);
  }
  for (std::size_t e = 0; e < m.params.experts.size(); ++e) {
    const auto& w = m.params.experts[e];
    write_tensor(out, "expert." + std::to_string(e), w.rows, w.cols, w.values);
  }
  const auto& c = m.params.exemplars;
  write_tensor(out, "exemplars", c.rows, c.cols, c.values);
  out += "end\n";
  return out;
}

Checkpoint parse_checkpoint(const std::string& text, const std::string& source) {
  Reader rd(text, source);
  if (rd.done()) rd.fail("empty checkpoint");
  {
    const std::string header(trim(rd.next()));
    const std::string magic = std::string(kMagic) + " ";
    if (header.rfind(magic, 0) != 0) rd.fail("missing '" + std::string(kMagic) + "' header");
    const std::string version = header.substr(magic.size());
    const std::string expected = "v" + std::to_string(Checkpoint::kFormatVersion);
    if (version != expected) {
      throw VersionMismatch("checkpoint " + source + " has format " + version + ", expected " +
                            expected);
    }
  }

  Checkpoint ck;
  RunConfig rc;
  ModelState& m = ck.model;
  std::size_t n_experts = 0;
  bool have_experts = false;
  while (!rd.done() && rd.peek().rfind("tensor ", 0) != 0) {
    const std::string line = rd.next();
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) rd.fail("expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    const std::size_t ln = rd.line_no() - 1;
    try {
      if (key.rfind("train.", 0) == 0) {
        set_config_value(rc, key, value);
      } else if (key == "best_epoch") {
        ck.epoch = parse_count(rd, value);
      } else if (key == "val_history") {
        if (!value.empty()) {
          for (auto f : split_fields(value, ',')) ck.val_history.push_back(parse_double(f, source, ln));
        }
      } else if (key == "model.input_dim") {
        m.config.input_dim = parse_count(rd, value);
      } else if (key == "model.hidden_dims") {
        m.config.hidden_dims = parse_size_list(key, value);
      } else if (key == "model.output_dim") {
        m.config.output_dim = parse_count(rd, value);
      } else if (key == "model.embed_dim") {
        m.embed_dim = parse_count(rd, value);
      } else if (key == "model.shared_expert") {
        if (value != "0" && value != "1") rd.fail("model.shared_expert must be 0 or 1");
        m.shared_expert = value == "1";
      } else if (key == "model.experts") {
        n_experts = parse_count(rd, value);
        have_experts = true;
      } else if (key == "model.exemplar_treatments") {
        if (!value.empty()) {
          for (auto f : split_fields(value, ',')) m.exemplar_treatments.push_back(parse_int(f, source, ln));
        }
      } else {
        rd.fail("unknown key '" + key + "'");
      }
    } catch (const InvalidConfig& e) {
      throw ParseError(source, ln, e.what());
    }
  }
  if (!have_experts) rd.fail("missing model.experts");
  ck.config = rc.train;

  std::size_t fan_in = m.config.input_dim;
  std::vector<std::size_t> widths = m.config.hidden_dims;
  widths.push_back(m.config.output_dim);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const std::string p = "encoder." + std::to_string(l);
    DenseLayer layer;
    layer.weight = read_tensor(rd, p + ".weight");
    if (layer.weight.rows != widths[l] || layer.weight.cols != fan_in) rd.fail(p + ".weight has wrong shape");
    Mat b = read_tensor(rd, p + ".bias");
    if (b.rows != 1 || b.cols != widths[l]) rd.fail(p + ".bias has wrong shape");
    layer.bias = std::move(b.values);
    m.params.encoder.push_back(std::move(layer));
    fan_in = widths[l];
  }
  for (std::size_t e = 0; e < n_experts; ++e) {
    Mat w = read_tensor(rd, "expert." + std::to_string(e));
    if (w.rows != m.embed_dim || w.cols != m.config.output_dim) rd.fail("expert tensor has wrong shape");
    m.params.experts.push_back(std::move(w));
  }
  m.params.exemplars = read_tensor(rd, "exemplars");
  if (m.params.exemplars.rows != m.exemplar_treatments.size() ||
      m.params.exemplars.cols != m.embed_dim) {
    rd.fail("exemplars tensor has wrong shape");
  }
  if (rd.done() || trim(rd.next()) != "end") rd.fail("missing 'end'");
  if (!std::is_sorted(m.exemplar_treatments.begin(), m.exemplar_treatments.end())) {
    rd.fail("exemplar treatments are not sorted");
  }
  if (m.shared_expert && n_experts != 1) rd.fail("shared expert model must have one expert");
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_text(path, format_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::string text;
  for (const auto& l : lines) {
    text += l;
    text += '\n';
  }
  return parse_checkpoint(text, path.string());
}

}  // namespace teams
