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

#include <stdexcept>
#include <string>

namespace surfdet {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScheduleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when training hits a non-finite loss. Divergence is surfaced with
// the exact epoch/step so the configuration can be diagnosed; it is never
// clipped away.
struct TrainDivergence : std::runtime_error {
  TrainDivergence(int epoch, int step, double value)
      : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(step) +
                           " (value=" + std::to_string(value) + ")"),
        epoch(epoch),
        step(step),
        value(value) {}
  int epoch;
  int step;
  double value;
};

}  // namespace surfdet
