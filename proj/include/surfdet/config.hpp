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

#pragma once

#include <string>
#include <vector>

#include "surfdet/data.hpp"
#include "surfdet/model.hpp"
#include "surfdet/train.hpp"

namespace surfdet {

// Flat dotted-key configuration covering model, training, data, synthesis
// and output settings. Unknown keys are rejected by name; every run writes
// its fully resolved form next to its outputs so it can be replayed.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;

  std::string data_layout = "mask_folders";
  std::string data_root;
  std::string val_root;
  std::string test_root;
  std::string folds;  // comma-separated roots for multi-fold evaluation

  std::string eval_checkpoint;
  std::string ablate_grid;

  SynthSpec synth;
  std::string out_dir = "runs/out";

  // When false the run seed is drawn fresh and recorded in the resolved
  // config; execution itself is always single-threaded and replayable.
  bool deterministic = true;
};

// Applies one "key=value" assignment. Throws ConfigError naming the key on
// unknown keys or unparseable values.
void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value);

// key=value lines, '#' comments. Later assignments win.
void load_config_file(RunConfig& cfg, const std::string& path);

// Defaults, then the optional file, then overrides in order.
RunConfig resolve_config(const std::string& file_path, const std::vector<std::string>& overrides);

// Full key set in a stable order; parseable by load_config_file.
void write_resolved(const RunConfig& cfg, const std::string& path);

// Output root: out.dir, prefixed by the SURFDET_OUT environment variable
// when that is set and out.dir is relative.
std::string resolved_out_dir(const RunConfig& cfg);

}  // namespace surfdet
