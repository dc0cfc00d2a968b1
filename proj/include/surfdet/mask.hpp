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
#include <vector>

namespace surfdet {

// H x W binary annotation mask, 1 = defective pixel.
struct BinaryMask {
  int h = 0, w = 0;
  std::vector<uint8_t> v;

  BinaryMask() = default;
  BinaryMask(int height, int width) : h(height), w(width), v(static_cast<size_t>(height) * width, 0) {}

  uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  size_t size() const { return v.size(); }

  bool any() const {
    for (uint8_t p : v)
      if (p) return true;
    return false;
  }

  long long count() const {
    long long n = 0;
    for (uint8_t p : v) n += p != 0;
    return n;
  }
};

}  // namespace surfdet
