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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "surfdet/rng.hpp"
#include "surfdet/tensor.hpp"

namespace surfdet {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct Param {
  std::string name;
  std::vector<T> value;
  std::vector<T> grad;

  void init(std::string n, size_t size) {
    name = std::move(n);
    value.assign(size, T(0));
    grad.assign(size, T(0));
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

// 2D convolution, stride 1, zero 'same' padding for odd kernels.
// Lowered to a single GEMM per pass via im2col; the patch matrix is kept
// between forward and backward.
template <typename T>
class Conv2d {
 public:
  Conv2d(const std::string& name, int in_c, int out_c, int kernel, Rng& rng)
      : in_c_(in_c), out_c_(out_c), k_(kernel), pad_(kernel / 2) {
    const size_t fan_in = static_cast<size_t>(in_c) * kernel * kernel;
    weight_.init(name + ".weight", static_cast<size_t>(out_c) * fan_in);
    bias_.init(name + ".bias", static_cast<size_t>(out_c));
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : weight_.value) v = static_cast<T>(rng.normal() * stddev);
  }

  Tensor<T> forward(const Tensor<T>& in) {
    h_ = in.height();
    w_ = in.width();
    im2col(in);
    const int n = h_ * w_;
    const int kk = in_c_ * k_ * k_;
    Tensor<T> out(out_c_, h_, w_);
    Eigen::Map<const RowMat<T>> wmat(weight_.value.data(), out_c_, kk);
    Eigen::Map<RowMat<T>> omat(out.data(), out_c_, n);
    omat.noalias() = wmat * patches_;
    for (int m = 0; m < out_c_; ++m) omat.row(m).array() += bias_.value[m];
    return out;
  }

  // Accumulates weight/bias gradients, returns gradient w.r.t. the input.
  Tensor<T> backward(const Tensor<T>& grad_out) {
    const int n = h_ * w_;
    const int kk = in_c_ * k_ * k_;
    Eigen::Map<const RowMat<T>> gmat(grad_out.data(), out_c_, n);
    Eigen::Map<RowMat<T>> dw(weight_.grad.data(), out_c_, kk);
    dw.noalias() += gmat * patches_.transpose();
    for (int m = 0; m < out_c_; ++m) bias_.grad[m] += gmat.row(m).sum();

    Eigen::Map<const RowMat<T>> wmat(weight_.value.data(), out_c_, kk);
    cols_.resize(kk, n);
    cols_.noalias() = wmat.transpose() * gmat;
    return col2im();
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  int out_channels() const { return out_c_; }

 private:
  void im2col(const Tensor<T>& in) {
    const int n = h_ * w_;
    patches_.resize(static_cast<Eigen::Index>(in_c_) * k_ * k_, n);
    int r = 0;
    for (int ci = 0; ci < in_c_; ++ci) {
      const T* plane = in.plane(ci);
      for (int ky = 0; ky < k_; ++ky) {
        const int sy = ky - pad_;
        for (int kx = 0; kx < k_; ++kx, ++r) {
          const int sx = kx - pad_;
          T* row = patches_.data() + static_cast<size_t>(r) * n;
          for (int y = 0; y < h_; ++y) {
            T* dst = row + static_cast<size_t>(y) * w_;
            const int iy = y + sy;
            if (iy < 0 || iy >= h_) {
              std::fill(dst, dst + w_, T(0));
              continue;
            }
            const T* src = plane + static_cast<size_t>(iy) * w_;
            // clamped so a kernel wider than the map stays in bounds
            const int x0 = std::min(w_, std::max(0, -sx));
            const int x1 = std::max(x0, std::min(w_, w_ - sx));
            std::fill(dst, dst + x0, T(0));
            if (x1 > x0) std::copy(src + x0 + sx, src + x1 + sx, dst + x0);
            std::fill(dst + x1, dst + w_, T(0));
          }
        }
      }
    }
  }

  Tensor<T> col2im() const {
    Tensor<T> gin(in_c_, h_, w_);
    const int n = h_ * w_;
    int r = 0;
    for (int ci = 0; ci < in_c_; ++ci) {
      T* plane = gin.plane(ci);
      for (int ky = 0; ky < k_; ++ky) {
        const int sy = ky - pad_;
        for (int kx = 0; kx < k_; ++kx, ++r) {
          const int sx = kx - pad_;
          const T* row = cols_.data() + static_cast<size_t>(r) * n;
          for (int y = 0; y < h_; ++y) {
            const int iy = y + sy;
            if (iy < 0 || iy >= h_) continue;
            const T* src = row + static_cast<size_t>(y) * w_;
            T* dst = plane + static_cast<size_t>(iy) * w_;
            const int x0 = std::min(w_, std::max(0, -sx));
            const int x1 = std::max(x0, std::min(w_, w_ - sx));
            for (int x = x0; x < x1; ++x) dst[x + sx] += src[x];
          }
        }
      }
    }
    return gin;
  }

  int in_c_, out_c_, k_, pad_;
  int h_ = 0, w_ = 0;
  Param<T> weight_, bias_;
  RowMat<T> patches_;  // (in_c*k*k) x (h*w)
  RowMat<T> cols_;
};

template <typename T>
class MaxPool2x2 {
 public:
  Tensor<T> forward(const Tensor<T>& in) {
    c_ = in.channels();
    h_ = in.height();
    w_ = in.width();
    const int oh = h_ / 2, ow = w_ / 2;
    Tensor<T> out(c_, oh, ow);
    argmax_.resize(out.size());
    size_t o = 0;
    for (int c = 0; c < c_; ++c) {
      const T* plane = in.plane(c);
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x, ++o) {
          size_t best = (static_cast<size_t>(2 * y) * w_) + 2 * x;
          T bv = plane[best];
          const size_t cand[3] = {best + 1, best + w_, best + w_ + 1};
          for (size_t idx : cand) {
            if (plane[idx] > bv) {
              bv = plane[idx];
              best = idx;
            }
          }
          out.plane(c)[static_cast<size_t>(y) * ow + x] = bv;
          argmax_[o] = static_cast<uint32_t>(best);
        }
      }
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    Tensor<T> gin(c_, h_, w_);
    const int oh = h_ / 2, ow = w_ / 2;
    size_t o = 0;
    for (int c = 0; c < c_; ++c) {
      T* plane = gin.plane(c);
      const T* gplane = grad_out.plane(c);
      for (int i = 0; i < oh * ow; ++i, ++o) plane[argmax_[o]] += gplane[i];
    }
    return gin;
  }

 private:
  int c_ = 0, h_ = 0, w_ = 0;
  std::vector<uint32_t> argmax_;
};

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& in) {
    Tensor<T> out = in;
    mask_.resize(in.size());
    for (size_t i = 0; i < out.size(); ++i) {
      const bool pos = out[i] > T(0);
      mask_[i] = pos;
      if (!pos) out[i] = T(0);
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    Tensor<T> gin = grad_out;
    for (size_t i = 0; i < gin.size(); ++i)
      if (!mask_[i]) gin[i] = T(0);
    return gin;
  }

 private:
  std::vector<uint8_t> mask_;
};

// Batch-free feature normalization: divides the whole map by its RMS.
// No running statistics, so train and eval behave identically.
template <typename T>
class RmsNorm {
 public:
  Tensor<T> forward(const Tensor<T>& in) {
    double ss = 0.0;
    for (size_t i = 0; i < in.size(); ++i) ss += static_cast<double>(in[i]) * in[i];
    r_ = static_cast<T>(std::sqrt(ss / static_cast<double>(in.size()) + kEps));
    y_ = in;
    const T inv = T(1) / r_;
    for (size_t i = 0; i < y_.size(); ++i) y_[i] *= inv;
    return y_;
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    double dot = 0.0;
    for (size_t i = 0; i < y_.size(); ++i) dot += static_cast<double>(grad_out[i]) * y_[i];
    const T m = static_cast<T>(dot / static_cast<double>(y_.size()));
    Tensor<T> gin = grad_out;
    const T inv = T(1) / r_;
    for (size_t i = 0; i < gin.size(); ++i) gin[i] = (gin[i] - y_[i] * m) * inv;
    return gin;
  }

 private:
  static constexpr double kEps = 1e-5;
  Tensor<T> y_;
  T r_ = T(1);
};

// Per-channel global max and average pooling, concatenated as
// [max_0..max_{C-1}, avg_0..avg_{C-1}].
template <typename T>
class GlobalPool {
 public:
  std::vector<T> forward(const Tensor<T>& in) {
    c_ = in.channels();
    h_ = in.height();
    w_ = in.width();
    const int n = h_ * w_;
    argmax_.resize(c_);
    std::vector<T> out(2 * c_);
    for (int c = 0; c < c_; ++c) {
      const T* plane = in.plane(c);
      int best = 0;
      double sum = plane[0];
      for (int i = 1; i < n; ++i) {
        if (plane[i] > plane[best]) best = i;
        sum += plane[i];
      }
      argmax_[c] = best;
      out[c] = plane[best];
      out[c_ + c] = static_cast<T>(sum / n);
    }
    return out;
  }

  Tensor<T> backward(const std::vector<T>& grad_vec) {
    Tensor<T> gin(c_, h_, w_);
    const int n = h_ * w_;
    for (int c = 0; c < c_; ++c) {
      T* plane = gin.plane(c);
      plane[argmax_[c]] += grad_vec[c];
      const T g = grad_vec[c_ + c] / static_cast<T>(n);
      for (int i = 0; i < n; ++i) plane[i] += g;
    }
    return gin;
  }

 private:
  int c_ = 0, h_ = 0, w_ = 0;
  std::vector<int> argmax_;
};

// Single linear unit: dot product plus bias.
template <typename T>
class Linear {
 public:
  Linear(const std::string& name, int in_dim, Rng& rng) {
    weight_.init(name + ".weight", in_dim);
    bias_.init(name + ".bias", 1);
    const double stddev = std::sqrt(1.0 / in_dim);
    for (auto& v : weight_.value) v = static_cast<T>(rng.normal() * stddev);
  }

  T forward(const std::vector<T>& v) {
    input_ = v;
    double acc = bias_.value[0];
    for (size_t i = 0; i < v.size(); ++i)
      acc += static_cast<double>(weight_.value[i]) * v[i];
    return static_cast<T>(acc);
  }

  std::vector<T> backward(T grad) {
    std::vector<T> gin(input_.size());
    for (size_t i = 0; i < input_.size(); ++i) {
      weight_.grad[i] += grad * input_[i];
      gin[i] = grad * weight_.value[i];
    }
    bias_.grad[0] += grad;
    return gin;
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

 private:
  Param<T> weight_, bias_;
  std::vector<T> input_;
};

// conv -> RMS norm -> ReLU. The norm can be disabled for output heads.
template <typename T>
class ConvUnit {
 public:
  ConvUnit(const std::string& name, int in_c, int out_c, int kernel, bool normalize, Rng& rng)
      : conv_(name, in_c, out_c, kernel, rng), normalize_(normalize) {}

  Tensor<T> forward(const Tensor<T>& in) {
    Tensor<T> x = conv_.forward(in);
    if (normalize_) x = norm_.forward(x);
    return relu_.forward(x);
  }

  Tensor<T> backward(const Tensor<T>& grad_out) {
    Tensor<T> g = relu_.backward(grad_out);
    if (normalize_) g = norm_.backward(g);
    return conv_.backward(g);
  }

  void collect(std::vector<Param<T>*>& out) { conv_.collect(out); }
  int out_channels() const { return conv_.out_channels(); }

 private:
  Conv2d<T> conv_;
  RmsNorm<T> norm_;
  ReLU<T> relu_;
  bool normalize_;
};

}  // namespace surfdet
