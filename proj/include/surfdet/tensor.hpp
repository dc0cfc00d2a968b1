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

#include <cstddef>
#include <vector>

namespace surfdet {

// Dense CHW tensor, planar layout. Channel planes are contiguous, so the
// whole buffer doubles as a row-major (channels x height*width) matrix.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width)
      : c_(channels), h_(height), w_(width),
        v_(static_cast<size_t>(channels) * height * width, T(0)) {}

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.c_, other.h_, other.w_); }

  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }

  T* plane(int c) { return v_.data() + static_cast<size_t>(c) * h_ * w_; }
  const T* plane(int c) const { return v_.data() + static_cast<size_t>(c) * h_ * w_; }

  T& operator()(int c, int y, int x) {
    return v_[(static_cast<size_t>(c) * h_ + y) * w_ + x];
  }
  const T& operator()(int c, int y, int x) const {
    return v_[(static_cast<size_t>(c) * h_ + y) * w_ + x];
  }

  T& operator[](size_t i) { return v_[i]; }
  const T& operator[](size_t i) const { return v_[i]; }

  void fill(T value) { std::fill(v_.begin(), v_.end(), value); }

  bool same_shape(const Tensor& o) const { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }

  const std::vector<T>& raw() const { return v_; }

 private:
  int c_ = 0, h_ = 0, w_ = 0;
  std::vector<T> v_;
};

using TensorF = Tensor<float>;

}  // namespace surfdet
