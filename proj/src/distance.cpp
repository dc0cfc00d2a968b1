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

#include "surfdet/distance.hpp"

#include <cmath>
#include <deque>

namespace surfdet {
namespace {

constexpr double kInf = kNoNegativeDistance * kNoNegativeDistance;

// 1D squared-distance transform of a sampled cost function f, i.e.
// d[q] = min_p ((q-p)^2 + f[p]). Lower envelope of parabolas.
void edt1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
           std::vector<double>& z, int n) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + static_cast<double>(q) * q) - (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
               (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + static_cast<double>(q) * q) - (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
          (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

std::vector<double> distance_to_negative(const BinaryMask& mask) {
  const int h = mask.h, w = mask.w;
  std::vector<double> sq(static_cast<size_t>(h) * w);

  // column pass on the 0/inf indicator
  {
    const int n = h;
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) f[y] = mask.at(y, x) ? kInf : 0.0;
      edt1d(f, d, v, z, n);
      for (int y = 0; y < h; ++y) sq[static_cast<size_t>(y) * w + x] = d[y];
    }
  }
  // row pass over the column results
  {
    const int n = w;
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) f[x] = sq[static_cast<size_t>(y) * w + x];
      edt1d(f, d, v, z, n);
      for (int x = 0; x < w; ++x) sq[static_cast<size_t>(y) * w + x] = d[x];
    }
  }

  std::vector<double> out(sq.size());
  for (size_t i = 0; i < sq.size(); ++i) {
    const double s = sq[i];
    out[i] = s >= kInf ? kNoNegativeDistance : std::sqrt(s);
  }
  return out;
}

int connected_components8(const BinaryMask& mask, std::vector<int>& labels) {
  const int h = mask.h, w = mask.w;
  labels.assign(static_cast<size_t>(h) * w, -1);
  int next = 0;
  std::deque<std::pair<int, int>> queue;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (!mask.at(y0, x0) || labels[static_cast<size_t>(y0) * w + x0] != -1) continue;
      const int label = next++;
      labels[static_cast<size_t>(y0) * w + x0] = label;
      queue.emplace_back(y0, x0);
      while (!queue.empty()) {
        auto [y, x] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = y + dy, nx = x + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            const size_t idx = static_cast<size_t>(ny) * w + nx;
            if (mask.v[idx] && labels[idx] == -1) {
              labels[idx] = label;
              queue.emplace_back(ny, nx);
            }
          }
        }
      }
    }
  }
  return next;
}

}  // namespace surfdet
