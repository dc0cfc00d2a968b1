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

#include "surfdet/loss.hpp"

#include <algorithm>
#include <cmath>

#include "surfdet/distance.hpp"

namespace surfdet {

WeightMask compute_weight_mask(const BinaryMask& target, double w_pos, double p, bool dt_enabled) {
  WeightMask wm;
  wm.h = target.h;
  wm.w = target.w;
  wm.w_pos = static_cast<float>(w_pos);
  wm.p = static_cast<float>(p);
  wm.weights.assign(target.size(), 1.0f);
  if (!target.any()) return wm;

  if (!dt_enabled) {
    for (size_t i = 0; i < target.size(); ++i)
      if (target.v[i]) wm.weights[i] = static_cast<float>(w_pos);
    return wm;
  }

  const std::vector<double> dist = distance_to_negative(target);
  std::vector<int> labels;
  const int n_regions = connected_components8(target, labels);

  std::vector<double> region_max(n_regions, 0.0);
  for (size_t i = 0; i < target.size(); ++i)
    if (labels[i] >= 0) region_max[labels[i]] = std::max(region_max[labels[i]], dist[i]);

  for (size_t i = 0; i < target.size(); ++i) {
    if (labels[i] < 0) continue;
    const double dmax = region_max[labels[i]];
    // a region whose pixels all sit at the no-negative sentinel gets w_pos flat
    if (dist[i] >= kNoNegativeDistance || dmax <= 0.0) {
      wm.weights[i] = static_cast<float>(w_pos);
      continue;
    }
    wm.weights[i] = static_cast<float>(w_pos * std::pow(dist[i] / dmax, p));
  }
  return wm;
}

std::vector<float> weight_mask_to_image(const WeightMask& wm) {
  std::vector<float> img(wm.weights.size());
  const float scale = wm.w_pos > 0.0f ? 1.0f / wm.w_pos : 1.0f;
  for (size_t i = 0; i < img.size(); ++i)
    img[i] = std::clamp(wm.weights[i] * scale, 0.0f, 1.0f);
  return img;
}

}  // namespace surfdet
