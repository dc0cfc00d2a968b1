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

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "surfdet/data.hpp"
#include "surfdet/eval.hpp"
#include "surfdet/model.hpp"
#include "surfdet/sampling.hpp"

namespace surfdet {

// The four method components that the ablation grid switches.
struct TrainToggles {
  bool dyn_balanced_loss = true;  // epoch-indexed mixing instead of a fixed lambda
  bool grad_flow_adjust = true;   // both gradient stops between the towers
  bool freq_sampling = true;      // usage-weighted negative selection
  bool dist_transform = true;     // distance-shaped positive pixel weights
};

struct TrainConfig {
  double eta = 0.1;       // SGD learning rate, no momentum, no weight decay
  double delta = 1.0;     // classification loss scale
  int epochs = 50;
  int batch_size = 1;
  double w_pos = 1.0;     // positive pixel weight cap
  double p = 1.0;         // distance shaping exponent
  TrainToggles toggles;
  uint64_t seed = 0;
  bool validation_select = false;  // keep the epoch with the best validation AP

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double lambda = 0.0;
  double seg_loss = 0.0;   // epoch mean per sample
  double cls_loss = 0.0;   // epoch mean per sample
  double total_loss = 0.0;
  double val_ap = 0.0;
  bool has_val = false;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  void write_tsv(const std::string& path) const;
};

struct TrainResult {
  TrainHistory history;
  int best_epoch = -1;       // -1 when validation selection is off
  double best_val_ap = 0.0;
  std::vector<float> final_params;  // last-epoch parameters, regardless of selection
};

// In-place update theta <- theta - eta * grad for every parameter.
void sgd_step(const std::vector<Param<float>*>& params, double eta);

// Runs the full loop: per-epoch lambda, alternating sample stream, combined
// backward pass under the gradient-flow contract, plain SGD. On return the
// model holds the best-validation parameters when validation_select is on,
// otherwise the final-epoch parameters. A non-finite loss aborts with
// TrainDivergence naming epoch and step. When sampler is null an internal
// one is seeded from cfg.seed.
TrainResult train(ModelF& model, const DatasetSplit& split, const DatasetSplit* validation,
                  const TrainConfig& cfg, NegativeSampler* sampler = nullptr);

// One ablation grid row: a named toggle combination and its test outcome.
struct AblationRow {
  std::string name;
  TrainToggles toggles;
  bool aborted = false;
  std::string abort_reason;
  EvalReport report;
};

// Builds a fresh model for a toggle row; grad_flow_adjust maps onto the
// model's gradient stops here.
using ModelFactory = std::function<ModelF(const TrainToggles&)>;

ModelF default_model_for(const ModelConfig& base, const TrainToggles& toggles, uint64_t seed);

// One train+eval run per grid row with identical seeds across rows. A row
// that aborts (divergence) is marked and the remaining rows still run.
std::vector<AblationRow> ablate(const ModelFactory& factory, const DatasetSplit& train_split,
                                const DatasetSplit* validation, const DatasetSplit& test_split,
                                const TrainConfig& base_cfg,
                                const std::vector<std::pair<std::string, TrainToggles>>& grid);

// Grid file: one row per line, "name dyn grad freq dt" with 0/1 flags,
// '#' starts a comment.
std::vector<std::pair<std::string, TrainToggles>> parse_toggle_grid(const std::string& path);

void write_ablation_table(const std::vector<AblationRow>& rows, const std::string& path);

}  // namespace surfdet
