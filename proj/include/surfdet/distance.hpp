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

#include <vector>

#include "surfdet/mask.hpp"

namespace surfdet {

// Distance beyond any possible in-image value; reported for pixels of a mask
// with no negative pixel at all.
constexpr double kNoNegativeDistance = 1e12;

// Exact Euclidean distance from every pixel to the nearest negative (zero)
// pixel. Negative pixels get 0. Felzenszwalb-Huttenlocher lower-envelope
// transform, separable and metric-exact.
std::vector<double> distance_to_negative(const BinaryMask& mask);

// 8-connected components over positive pixels. Returns the number of
// components; labels get 0..n-1 for positive pixels and -1 for negative.
int connected_components8(const BinaryMask& mask, std::vector<int>& labels);

}  // namespace surfdet
