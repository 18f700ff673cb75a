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

// teams: command-line front end.
//
//   teams gen-data --out data --seed 1
//   teams train    --data data --method teams --checkpoint teams.ckpt
//   teams eval     --data data --checkpoint teams.ckpt --expert-mode average
//   teams export   --data data --checkpoint teams.ckpt --part test
//
// Every flag maps onto a dotted config key; `--config FILE` loads an INI file
// first and explicit flags override it.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "teams/datagen.hpp"
#include "teams/errors.hpp"
#include "teams/eval.hpp"
#include "teams/kernels.hpp"
#include "teams/run_config.hpp"
#include "teams/text_io.hpp"
#include "teams/trainer.hpp"

namespace {

using teams::RunConfig;

constexpr int kExitInvalidConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitInfeasible = 4;
constexpr int kExitNumeric = 5;

struct FlagBinding {
  std::string key;
  CLI::Option* option = nullptr;
  std::string value;
};

// Flag spelling of a key: its last component with '_' turned into '-'.
std::string flag_for(const std::string& key) {
  std::string name = key.substr(key.rfind('.') + 1);
  for (char& c : name) {
    if (c == '_') c = '-';
  }
  return name;
}

class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& help)
      : sub_(app.add_subcommand(name, help)) {
    sub_->add_option("--config", config_path_, "INI config file loaded before flags");
  }

  CLI::App* app() { return sub_; }

  /// Binds every key with one of `prefixes`, plus explicit (flag, key) pairs.
  void bind_prefix(const std::string& prefix, const std::string& rename_from = "",
                   const std::string& rename_to = "") {
    for (const auto& k : teams::config_keys()) {
      if (k.key.rfind(prefix, 0) != 0) continue;
      std::string flag = flag_for(k.key);
      if (!rename_from.empty() && flag == rename_from) flag = rename_to;
      bind(flag, k.key);
    }
  }

  void bind(const std::string& flag, const std::string& key) {
    static const RunConfig defaults;
    const teams::ConfigKey* info = nullptr;
    for (const auto& k : teams::config_keys()) {
      if (k.key == key) info = &k;
    }
    bindings_.push_back(std::make_unique<FlagBinding>());
    auto& b = *bindings_.back();
    b.key = key;
    b.option = sub_->add_option("--" + flag, b.value, info->help + " [" + key + "]")
                   ->default_str(info->get(defaults));
  }

  /// Defaults, then the config file, then flags given on the command line.
  RunConfig resolve() const {
    RunConfig config;
    if (!config_path_.empty()) teams::load_config_file(config_path_, config);
    for (const auto& b : bindings_) {
      if (b->option->count() > 0) teams::set_config_value(config, b->key, b->value);
    }
    return config;
  }

 private:
  CLI::App* sub_;
  std::string config_path_;
  std::vector<std::unique_ptr<FlagBinding>> bindings_;
};

std::vector<teams::CellRecord> load_records(const RunConfig& c) {
  return teams::read_dataset(c.dataset_path());
}

int run_gen_data(const RunConfig& c) {
  teams::validate(c);
  if (teams::separation_warning(c.gen)) {
    std::cerr << "warning: gen.class_sep <= gen.treatment_sep; mechanisms will overlap\n";
  }
  const auto records = teams::generate(c.gen);
  const auto split = teams::split_by_treatment(records, c.split_fractions, c.split_seed);
  std::filesystem::create_directories(c.data_dir);
  teams::write_dataset(records, c.dataset_path());
  teams::write_split(split, c.split_path());
  std::cout << "wrote " << records.size() << " records to " << c.dataset_path().string() << "\n"
            << "split train/val/test treatments: " << split.train.size() << "/"
            << split.val.size() << "/" << split.test.size() << " -> " << c.split_path().string()
            << "\n";
  return 0;
}

int run_train(const RunConfig& c) {
  teams::validate(c.train);
  const auto records = load_records(c);
  const auto split = teams::read_split(c.split_path());
  teams::TrainHooks hooks;
  hooks.on_epoch = [](std::size_t epoch, double acc) {
    std::cout << "epoch " << epoch << " val mech_vs_mech " << teams::format_double(acc) << "\n";
  };
  const auto result = teams::train(records, split, c.train, hooks);
  teams::save_checkpoint(result.checkpoint, c.checkpoint);
  teams::write_text(c.train_log, teams::format_log(result.log));
  const auto& ck = result.checkpoint;
  std::cout << "best epoch " << ck.epoch << " (val accuracy "
            << teams::format_double(ck.val_history.at(ck.epoch)) << ")\n"
            << "checkpoint " << c.checkpoint.string() << ", log " << c.train_log.string() << "\n";
  return 0;
}

void restrict_experiments(RunConfig& c, const std::string& list) {
  bool keep[3] = {false, false, false};
  for (auto f : teams::split_fields(list, ',')) {
    const std::string name(teams::trim(f));
    if (name.empty()) continue;
    try {
      keep[static_cast<int>(teams::experiment_from_string(name))] = true;
    } catch (const teams::Error&) {
      throw teams::InvalidConfig("eval.experiments", "unknown experiment '" + name + "'");
    }
  }
  if (!keep[0]) c.eval_counts.mech_vs_mech = 0;
  if (!keep[1]) c.eval_counts.mech_vs_control = 0;
  if (!keep[2]) c.eval_counts.treatment_level = 0;
}

int run_eval(const RunConfig& c) {
  const auto ckpt = teams::load_checkpoint(c.checkpoint);
  const auto records = load_records(c);
  const auto split = teams::read_split(c.split_path());
  const auto part = teams::split_part_from_string(c.eval_part);
  teams::ExpertMode mode{c.eval_mode, c.eval_seed};
  const auto report = teams::run_experiments(ckpt.model, records, split.part(part), c.eval_counts,
                                             mode, c.eval_seed);
  teams::write_report(report, c.report);
  for (const auto& r : report.results) {
    std::cout << teams::to_string(r.experiment) << " (" << teams::to_string(mode.kind)
              << "): " << r.correct << "/" << r.n << " = " << teams::format_double(r.accuracy)
              << "\n";
  }
  std::cout << "report " << c.report.string() << "\n";
  return 0;
}

int run_export(const RunConfig& c) {
  const auto ckpt = teams::load_checkpoint(c.checkpoint);
  const auto records = load_records(c);
  std::vector<teams::CellRecord> selected;
  if (c.export_part == "all") {
    selected = records;
  } else if (c.export_part == "control") {
    for (const auto& r : records) {
      if (r.is_control) selected.push_back(r);
    }
  } else {
    const auto split = teams::read_split(c.split_path());
    const auto& part = split.part(teams::split_part_from_string(c.export_part));
    for (const auto& r : records) {
      if (!r.is_control && part.count(r.treatment)) selected.push_back(r);
    }
  }
  const teams::EmbeddingTable table(ckpt.model, selected);
  const std::size_t dim = table.experts() * table.embed_dim();
  std::string out = "cell_id,treatment_id,mechanism_ids,variation_group";
  for (std::size_t i = 0; i < dim; ++i) out += ",e" + std::to_string(i);
  out += '\n';
  for (const auto& r : selected) {
    out += std::to_string(r.cell_id) + "," + std::to_string(r.treatment) + ",";
    for (std::size_t k = 0; k < r.mechanisms.size(); ++k) {
      if (k) out += '|';
      out += std::to_string(r.mechanisms[k]);
    }
    out += "," + std::to_string(r.group);
    for (double x : table.row(r.cell_id)) out += "," + teams::format_double(x);
    out += '\n';
  }
  teams::write_text(c.embeddings, out);
  std::cout << "wrote " << selected.size() << " x " << dim << " embeddings to "
            << c.embeddings.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Treatment-exemplar embeddings with per-group experts on synthetic cell profiles"};
  app.require_subcommand(1);

  Command gen(app, "gen-data", "Generate a synthetic dataset and a treatment split");
  gen.bind_prefix("gen.");
  gen.bind("fractions", "split.fractions");
  gen.bind("split-seed", "split.seed");
  gen.bind("out", "paths.data_dir");

  Command trn(app, "train", "Train one method and save the best-validation checkpoint");
  trn.bind_prefix("train.");
  trn.bind("data", "paths.data_dir");
  trn.bind("checkpoint", "paths.checkpoint");
  trn.bind("log", "paths.train_log");

  Command ev(app, "eval", "Triplet accuracy of a checkpoint on one split part");
  ev.bind_prefix("eval.");
  ev.bind("data", "paths.data_dir");
  ev.bind("checkpoint", "paths.checkpoint");
  ev.bind("out", "paths.report");
  std::string experiments = "mech_vs_mech,mech_vs_control,treatment_level";
  ev.app()
      ->add_option("--experiments", experiments, "comma-separated experiments to run")
      ->capture_default_str();

  Command exp(app, "export", "Write concatenated per-expert embeddings as CSV");
  exp.bind_prefix("export.");
  exp.bind("data", "paths.data_dir");
  exp.bind("checkpoint", "paths.checkpoint");
  exp.bind("out", "paths.embeddings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalidConfig;
  }

  try {
    teams::kernels::configure_threads_from_env();
    if (gen.app()->parsed()) return run_gen_data(gen.resolve());
    if (trn.app()->parsed()) return run_train(trn.resolve());
    if (ev.app()->parsed()) {
      RunConfig c = ev.resolve();
      restrict_experiments(c, experiments);
      return run_eval(c);
    }
    if (exp.app()->parsed()) return run_export(exp.resolve());
  } catch (const teams::InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const teams::InfeasibleExperiment& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const teams::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const teams::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const teams::VersionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const teams::NonFiniteLoss& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const teams::DegenerateNorm& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const teams::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
