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
#include <map>
#include <string>
#include <vector>

#include "surfdet/rng.hpp"

namespace surfdet {

// Negative-image selection state. With frequency-of-use enabled each draw
// picks a remaining id with probability proportional to 1/(c_i - c_min + 1),
// where c_i is how often that id has been used so far and c_min is the
// smallest count among the remaining candidates; counters update after each
// draw. Otherwise selection is uniform. Either way one epoch never repeats a
// negative unless more draws than ids are requested.
class NegativeSampler {
 public:
  NegativeSampler(uint64_t seed, bool freq_enabled)
      : rng_(Rng(seed).child(0x5A11)), freq_enabled_(freq_enabled) {}

  // Selects k ids. Without replacement per round; if k exceeds the pool the
  // selection restarts with a fresh round, so repeats only happen across
  // rounds.
  std::vector<std::string> select(const std::vector<std::string>& negatives, int k);

  const std::map<std::string, long long>& usage_counts() const { return counts_; }
  bool freq_enabled() const { return freq_enabled_; }
  long long count_of(const std::string& id) const {
    auto it = counts_.find(id);
    return it == counts_.end() ? 0 : it->second;
  }

  // Pre-loads usage counters (testing and resumed runs).
  void set_counts(const std::map<std::string, long long>& counts) { counts_ = counts; }

  // One row per id: "id<TAB>count", sorted by id.
  void export_histogram(const std::string& path) const;

  Rng& rng() { return rng_; }

 private:
  Rng rng_;
  bool freq_enabled_;
  std::map<std::string, long long> counts_;
};

// One epoch of training ids: positives shuffled once, negatives selected via
// the sampler, interleaved P,N,P,N,... so every even index is positive.
std::vector<std::string> build_epoch_stream(const std::vector<std::string>& positives,
                                            const std::vector<std::string>& negatives,
                                            NegativeSampler& sampler);

}  // namespace surfdet
