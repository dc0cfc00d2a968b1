/*
 * Copyright 2026 The surfdet authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "surfdet/checkpoint.hpp"
#include "surfdet/config.hpp"
#include "surfdet/data.hpp"
#include "surfdet/errors.hpp"
#include "surfdet/eval.hpp"
#include "surfdet/loss.hpp"
#include "surfdet/model.hpp"
#include "surfdet/sampling.hpp"
#include "surfdet/train.hpp"

namespace fs = std::filesystem;
using namespace surfdet;

namespace {

// Flags shared by every subcommand. Specific flags are folded into the
// override list after --set entries, so they win.
struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string seed;
  std::string epochs;
  std::string out;
  int deterministic = 0;
  int no_deterministic = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "configuration file (key = value lines)");
  cmd->add_option("--set", o.sets, "override as key=value, repeatable");
  cmd->add_option("--seed", o.seed, "run seed (train.seed)");
  cmd->add_option("--epochs", o.epochs, "epoch count (train.epochs)");
  cmd->add_option("--out", o.out, "output directory (out.dir)");
  cmd->add_flag("--deterministic", o.deterministic, "pin the configured seed (default)");
  cmd->add_flag("--no-deterministic", o.no_deterministic,
                "draw a fresh seed and record it in the resolved config");
}

RunConfig load_run_config(const CommonOpts& o) {
  std::vector<std::string> overrides = o.sets;
  if (!o.seed.empty()) overrides.push_back("train.seed=" + o.seed);
  if (!o.epochs.empty()) overrides.push_back("train.epochs=" + o.epochs);
  if (!o.out.empty()) overrides.push_back("out.dir=" + o.out);
  if (o.deterministic > 0) overrides.push_back("run.deterministic=1");
  if (o.no_deterministic > 0) overrides.push_back("run.deterministic=0");
  return resolve_config(o.config_path, overrides);
}

// A non-deterministic run draws its seed once; the resolved config then
// pins it so the artifact replays the same run.
void finalize_seed(RunConfig& cfg) {
  if (cfg.deterministic) return;
  std::random_device rd;
  cfg.train.seed = (static_cast<uint64_t>(rd()) << 32) ^ rd();
  cfg.deterministic = true;
}

DatasetSplit load_split(const RunConfig& cfg, const std::string& root) {
  return load_dataset(root, parse_layout(cfg.data_layout), 2 * cfg.model.downsample_factor,
                      cfg.model.input_channels);
}

int cmd_train(RunConfig cfg) {
  finalize_seed(cfg);
  if (cfg.data_root.empty()) throw ConfigError("key 'data.root' must be set for training");
  const std::string out = resolved_out_dir(cfg);
  fs::create_directories(out);

  DatasetSplit train_split = load_split(cfg, cfg.data_root);
  std::optional<DatasetSplit> val;
  if (!cfg.val_root.empty()) val = load_split(cfg, cfg.val_root);
  if (cfg.train.validation_select && !val.has_value())
    throw ConfigError("key 'data.val_root' must be set when train.validation_select is on");
  write_resolved(cfg, (fs::path(out) / "resolved.cfg").string());

  ModelF model = default_model_for(cfg.model, cfg.train.toggles, cfg.train.seed);
  NegativeSampler sampler(cfg.train.seed, cfg.train.toggles.freq_sampling);
  TrainResult result = train(model, train_split, val ? &*val : nullptr, cfg.train, &sampler);

  result.history.write_tsv((fs::path(out) / "history.tsv").string());
  sampler.export_histogram((fs::path(out) / "usage_histogram.tsv").string());

  if (cfg.train.validation_select && result.best_epoch >= 0) {
    save_checkpoint((fs::path(out) / "checkpoint_best.ckpt").string(), model, result.best_epoch);
    const std::vector<float> best = model.parameter_vector();
    model.set_parameter_vector(result.final_params);
    save_checkpoint((fs::path(out) / "checkpoint_final.ckpt").string(), model, cfg.train.epochs);
    model.set_parameter_vector(best);
    std::cout << "best validation ap " << result.best_val_ap << " at epoch "
              << result.best_epoch << '\n';
  } else {
    save_checkpoint((fs::path(out) / "checkpoint_final.ckpt").string(), model, cfg.train.epochs);
  }

  if (!cfg.test_root.empty()) {
    DatasetSplit test_split = load_split(cfg, cfg.test_root);
    const EvalReport report = evaluate(model, test_split);
    write_report(report, (fs::path(out) / "report.txt").string(),
                 (fs::path(out) / "pr_curve.tsv").string());
    std::cout << "test ap " << report.ap << ", fp " << report.fp << ", fn " << report.fn << '\n';
  }
  std::cout << "outputs in " << out << '\n';
  return 0;
}

int cmd_eval(RunConfig cfg) {
  if (cfg.eval_checkpoint.empty())
    throw ConfigError("key 'eval.checkpoint' must name a checkpoint file");
  std::vector<std::string> roots;
  if (!cfg.folds.empty()) {
    std::string rest = cfg.folds;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      roots.push_back(rest.substr(0, comma));
      if (comma == std::string::npos) break;
      rest.erase(0, comma + 1);
    }
  } else if (!cfg.test_root.empty()) {
    roots.push_back(cfg.test_root);
  } else if (!cfg.data_root.empty()) {
    roots.push_back(cfg.data_root);
  }
  if (roots.empty())
    throw ConfigError("key 'data.folds' (or 'data.test_root') must name the evaluation data");

  const std::string out = resolved_out_dir(cfg);
  fs::create_directories(out);

  ModelF model = load_checkpoint_model(cfg.eval_checkpoint);
  cfg.model = model.config();  // record the architecture actually evaluated
  write_resolved(cfg, (fs::path(out) / "resolved.cfg").string());

  std::vector<EvalReport> reports;
  for (size_t i = 0; i < roots.size(); ++i) {
    DatasetSplit split = load_dataset(roots[i], parse_layout(cfg.data_layout),
                                      2 * model.config().downsample_factor,
                                      model.config().input_channels);
    reports.push_back(evaluate(model, split));
    const std::string tag = roots.size() == 1 ? "" : "_fold" + std::to_string(i);
    write_report(reports.back(), (fs::path(out) / ("report" + tag + ".txt")).string(),
                 (fs::path(out) / ("pr_curve" + tag + ".tsv")).string());
    std::cout << "fold " << i << " (" << roots[i] << "): ap " << reports.back().ap << ", fp "
              << reports.back().fp << ", fn " << reports.back().fn << '\n';
  }
  if (reports.size() > 1) {
    const FoldSummary summary = aggregate_folds(reports);
    std::ofstream f((fs::path(out) / "fold_summary.txt").string());
    f.precision(9);
    f << "folds=" << summary.folds << '\n'
      << "mean_ap=" << summary.mean_ap << '\n'
      << "fp_sum=" << summary.fp_sum << '\n'
      << "fn_sum=" << summary.fn_sum << '\n';
    std::cout << "mean ap " << summary.mean_ap << ", fp sum " << summary.fp_sum << ", fn sum "
              << summary.fn_sum << '\n';
  }
  std::cout << "outputs in " << out << '\n';
  return 0;
}

int cmd_ablate(RunConfig cfg) {
  finalize_seed(cfg);
  if (cfg.ablate_grid.empty()) throw ConfigError("key 'ablate.grid' must name a grid file");
  if (cfg.data_root.empty()) throw ConfigError("key 'data.root' must be set for ablation");
  if (cfg.test_root.empty()) throw ConfigError("key 'data.test_root' must be set for ablation");
  const auto grid = parse_toggle_grid(cfg.ablate_grid);

  const std::string out = resolved_out_dir(cfg);
  fs::create_directories(out);

  DatasetSplit train_split = load_split(cfg, cfg.data_root);
  std::optional<DatasetSplit> val;
  if (!cfg.val_root.empty()) val = load_split(cfg, cfg.val_root);
  if (cfg.train.validation_select && !val.has_value())
    throw ConfigError("key 'data.val_root' must be set when train.validation_select is on");
  DatasetSplit test_split = load_split(cfg, cfg.test_root);
  write_resolved(cfg, (fs::path(out) / "resolved.cfg").string());

  const ModelFactory factory = [&cfg](const TrainToggles& toggles) {
    return default_model_for(cfg.model, toggles, cfg.train.seed);
  };
  const auto rows =
      ablate(factory, train_split, val ? &*val : nullptr, test_split, cfg.train, grid);
  write_ablation_table(rows, (fs::path(out) / "ablation.tsv").string());
  for (const auto& row : rows) {
    if (row.aborted)
      std::cout << row.name << ": aborted (" << row.abort_reason << ")\n";
    else
      std::cout << row.name << ": ap " << row.report.ap << ", fp " << row.report.fp << ", fn "
                << row.report.fn << '\n';
  }
  std::cout << "outputs in " << out << '\n';
  return 0;
}

int cmd_synth(RunConfig cfg, bool force) {
  finalize_seed(cfg);
  if (cfg.synth.size % cfg.model.downsample_factor != 0)
    throw ConfigError("synth.size (" + std::to_string(cfg.synth.size) +
                      ") must be divisible by model.downsample_factor (" +
                      std::to_string(cfg.model.downsample_factor) + ")");
  const std::string out = resolved_out_dir(cfg);
  const DatasetSplit split = synth_generate(cfg.synth, cfg.train.seed);
  write_dataset_mask_folders(split, out, force);
  write_resolved(cfg, (fs::path(out) / "resolved.cfg").string());
  std::cout << "wrote " << split.positives.size() << " positives and "
            << split.negatives.size() << " negatives to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage surface defect detection"};
  app.require_subcommand(1);

  CommonOpts train_opts, eval_opts, ablate_opts, synth_opts;
  std::string eval_checkpoint, ablate_grid;
  std::vector<std::string> eval_data;
  std::string data_layout;
  bool synth_force = false;

  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  add_common(train_cmd, train_opts);

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file (eval.checkpoint)");
  eval_cmd->add_option("--data", eval_data, "dataset root, repeatable for folds (data.folds)");
  eval_cmd->add_option("--layout", data_layout, "dataset layout (data.layout)");

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "run a toggle grid");
  add_common(ablate_cmd, ablate_opts);
  ablate_cmd->add_option("--grid", ablate_grid, "grid file (ablate.grid)");

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth_cmd, synth_opts);
  synth_cmd->add_flag("--force", synth_force, "overwrite a non-empty output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(load_run_config(train_opts));
    if (eval_cmd->parsed()) {
      if (!eval_checkpoint.empty()) eval_opts.sets.push_back("eval.checkpoint=" + eval_checkpoint);
      if (!data_layout.empty()) eval_opts.sets.push_back("data.layout=" + data_layout);
      if (!eval_data.empty()) {
        std::string joined;
        for (const auto& d : eval_data) {
          if (!joined.empty()) joined += ',';
          joined += d;
        }
        eval_opts.sets.push_back("data.folds=" + joined);
      }
      return cmd_eval(load_run_config(eval_opts));
    }
    if (ablate_cmd->parsed()) {
      if (!ablate_grid.empty()) ablate_opts.sets.push_back("ablate.grid=" + ablate_grid);
      return cmd_ablate(load_run_config(ablate_opts));
    }
    if (synth_cmd->parsed()) return cmd_synth(load_run_config(synth_opts), synth_force);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
