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

#include "surfdet/sampling.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "surfdet/errors.hpp"

namespace surfdet {

namespace {

// Draws one index from [0, remaining.size()) with probability proportional
// to 1/(c_i - c_min + 1), where c_min is the smallest usage count among the
// remaining candidates. Measuring use relative to the least-used candidate
// keeps the preference for under-used samples equally sharp at any point in
// training; an absolute 1/(c_i + 1) law would flatten out once all counts
// grow large and let the histogram spread drift upward again. While any
// candidate is still unused the two laws coincide. Weights are recomputed
// per draw so earlier picks in the same round shift later probabilities.
size_t weighted_draw(const std::vector<std::string>& remaining,
                     const std::map<std::string, long long>& counts, Rng& rng,
                     bool freq_enabled) {
  if (!freq_enabled) return static_cast<size_t>(rng.uniform_int(remaining.size()));
  std::vector<long long> c(remaining.size());
  long long floor = std::numeric_limits<long long>::max();
  for (size_t i = 0; i < remaining.size(); ++i) {
    auto it = counts.find(remaining[i]);
    c[i] = it == counts.end() ? 0 : it->second;
    floor = std::min(floor, c[i]);
  }
  double total = 0.0;
  std::vector<double> weights(remaining.size());
  for (size_t i = 0; i < remaining.size(); ++i) {
    weights[i] = 1.0 / static_cast<double>(c[i] - floor + 1);
    total += weights[i];
  }
  double u = rng.uniform01() * total;
  double acc = 0.0;
  for (size_t i = 0; i < remaining.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return remaining.size() - 1;  // floating-point slack on the last bucket
}

}  // namespace

std::vector<std::string> NegativeSampler::select(const std::vector<std::string>& negatives,
                                                 int k) {
  if (k < 0) throw DataError("negative sample count must be >= 0");
  if (k > 0 && negatives.empty()) throw DataError("cannot sample from an empty negative pool");
  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(k));
  std::vector<std::string> remaining;
  while (static_cast<int>(out.size()) < k) {
    if (remaining.empty()) remaining = negatives;  // new round
    size_t idx = weighted_draw(remaining, counts_, rng_, freq_enabled_);
    const std::string id = remaining[idx];
    remaining.erase(remaining.begin() + static_cast<long>(idx));
    ++counts_[id];
    out.push_back(id);
  }
  return out;
}

void NegativeSampler::export_histogram(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open histogram file for writing: " + path);
  f << "id\tcount\n";
  for (const auto& [id, count] : counts_) f << id << '\t' << count << '\n';
}

std::vector<std::string> build_epoch_stream(const std::vector<std::string>& positives,
                                            const std::vector<std::string>& negatives,
                                            NegativeSampler& sampler) {
  std::vector<std::string> pos = positives;
  sampler.rng().shuffle(pos);
  std::vector<std::string> neg = sampler.select(negatives, static_cast<int>(pos.size()));
  std::vector<std::string> stream;
  stream.reserve(pos.size() * 2);
  for (size_t i = 0; i < pos.size(); ++i) {
    stream.push_back(pos[i]);
    stream.push_back(neg[i]);
  }
  return stream;
}

}  // namespace surfdet
