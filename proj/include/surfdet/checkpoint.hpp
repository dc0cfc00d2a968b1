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

#include "surfdet/model.hpp"

namespace surfdet {

// Binary checkpoint: magic, format version, model configuration, epoch
// counter, then each parameter as (name, element count, float32 payload).
// Loading rebuilds the model from the stored configuration and fails on any
// name/shape mismatch.
void save_checkpoint(const std::string& path, ModelF& model, int epoch);

struct LoadedCheckpoint {
  ModelConfig config;
  int epoch = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path, ModelF& model);

// Reads only the stored configuration, then constructs the model and fills
// its parameters.
ModelF load_checkpoint_model(const std::string& path, int* epoch_out = nullptr);

}  // namespace surfdet
