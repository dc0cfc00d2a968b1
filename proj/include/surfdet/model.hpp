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
#include <memory>
#include <string>
#include <vector>

#include "surfdet/errors.hpp"
#include "surfdet/layers.hpp"
#include "surfdet/rng.hpp"
#include "surfdet/tensor.hpp"

namespace surfdet {

struct ModelConfig {
  int input_channels = 1;
  int base_channels = 32;
  int downsample_factor = 8;
  // Back-propagation stop (a): the pooled output-map summaries feeding the
  // final classification vector are constants in backward.
  bool grad_stop_shortcuts = true;
  // Back-propagation stop (b): everything the classification stage reads
  // from the segmentation stage is a constant in backward.
  bool grad_stop_seg_features = true;

  void validate() const {
    if (downsample_factor != 2 && downsample_factor != 4 && downsample_factor != 8 &&
        downsample_factor != 16)
      throw ConfigError("model.downsample_factor must be one of 2,4,8,16 (got " +
                        std::to_string(downsample_factor) + ")");
    if (base_channels < 1) throw ConfigError("model.base_channels must be >= 1");
    if (input_channels < 1) throw ConfigError("model.input_channels must be >= 1");
  }

  int pooling_levels() const {
    int d = downsample_factor, n = 0;
    while (d > 1) {
      d /= 2;
      ++n;
    }
    return n;
  }
};

template <typename T>
struct ForwardOutputs {
  Tensor<T> seg_features;    // (32*base, H/d, W/d)
  Tensor<T> seg_output_map;  // (1, H/d, W/d), raw logits
  T cls_logit = T(0);
};

// Gradient reaching the segmentation output map during the last backward
// pass, split by route. Stopped routes report exact zeros.
template <typename T>
struct BackwardDiag {
  Tensor<T> segmap_from_shortcut;
  Tensor<T> segmap_from_trunk;
};

// Two-stage network: a segmentation tower producing a per-pixel defect logit
// map at 1/d resolution, and a classification head producing one per-image
// logit from the segmentation features and output map.
//
// Segmentation tower: log2(d) blocks of 5x5 conv units (2,3,4,... per block;
// base, 2*base, 4*base,... channels), 2x2 max-pool after each block, a wide
// 15x15 conv to 32*base channels, and a 1x1 conv to the logit map.
// Classification head: 2x2 max-pool of [features || map], three 5x5 conv
// units (8/16/32 channels), global max+avg pooling of the conv output and of
// the map, and a single linear unit.
template <typename T>
class TwoStageModel {
 public:
  TwoStageModel(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng = Rng(seed).child(0xC0DE);
    const int levels = cfg_.pooling_levels();
    int in_c = cfg_.input_channels;
    for (int b = 0; b < levels; ++b) {
      const int out_c = cfg_.base_channels << b;
      std::vector<ConvUnit<T>> units;
      const int n_units = 2 + b;
      for (int u = 0; u < n_units; ++u) {
        units.emplace_back("seg.block" + std::to_string(b) + ".conv" + std::to_string(u),
                           u == 0 ? in_c : out_c, out_c, 5, true, rng);
      }
      seg_blocks_.push_back(std::move(units));
      seg_pools_.emplace_back();
      in_c = out_c;
    }
    feature_channels_ = 32 * cfg_.base_channels;
    wide_ = std::make_unique<ConvUnit<T>>("seg.features", in_c, feature_channels_, 15, true, rng);
    seg_head_ = std::make_unique<Conv2d<T>>("seg.output", feature_channels_, 1, 1, rng);

    int cls_in = feature_channels_ + 1;
    const int cls_channels[3] = {8, 16, 32};
    for (int u = 0; u < 3; ++u) {
      cls_units_.emplace_back("cls.conv" + std::to_string(u), u == 0 ? cls_in : cls_channels[u - 1],
                              cls_channels[u], 5, true, rng);
    }
    // 2*(max+avg of 32 conv channels) + max+avg of the map
    cls_linear_ = std::make_unique<Linear<T>>("cls.linear", 2 * 32 + 2, rng);
  }

  ForwardOutputs<T> forward(const Tensor<T>& image) {
    if (image.channels() != cfg_.input_channels)
      throw ShapeError("input has " + std::to_string(image.channels()) + " channels, model expects " +
                       std::to_string(cfg_.input_channels));
    const int d = cfg_.downsample_factor;
    if (image.height() % d != 0 || image.width() % d != 0)
      throw ShapeError("input " + std::to_string(image.height()) + "x" +
                       std::to_string(image.width()) + " not divisible by downsample factor " +
                       std::to_string(d));
    if ((image.height() / d) % 2 != 0 || (image.width() / d) % 2 != 0)
      throw ShapeError("map size " + std::to_string(image.height() / d) + "x" +
                       std::to_string(image.width() / d) +
                       " must be even for the classification pool (pad input to a multiple of " +
                       std::to_string(2 * d) + ")");

    Tensor<T> x = image;
    for (size_t b = 0; b < seg_blocks_.size(); ++b) {
      for (auto& u : seg_blocks_[b]) x = u.forward(x);
      x = seg_pools_[b].forward(x);
    }
    features_ = wide_->forward(x);
    segmap_ = seg_head_->forward(features_);

    concat_in_ = concat_channels(features_, segmap_);
    Tensor<T> t = cls_pool_.forward(concat_in_);
    for (auto& u : cls_units_) t = u.forward(t);
    std::vector<T> vec = cls_gpool_.forward(t);
    const std::vector<T> map_vec = map_gpool_.forward(segmap_);
    vec.insert(vec.end(), map_vec.begin(), map_vec.end());
    const T logit = cls_linear_->forward(vec);

    ForwardOutputs<T> out;
    out.seg_features = features_;
    out.seg_output_map = segmap_;
    out.cls_logit = logit;
    return out;
  }

  // One combined backward pass. seg_map_grad is dL/d(seg_output_map) from the
  // segmentation loss (already scaled); cls_logit_grad is dL/d(cls_logit).
  // Either seed may be null/zero. Gradient stops are applied here, in the
  // graph: a stopped route simply contributes nothing, so parameter gradients
  // on the far side are exactly zero rather than zeroed afterwards.
  BackwardDiag<T> backward(const Tensor<T>* seg_map_grad, T cls_logit_grad) {
    BackwardDiag<T> diag;
    diag.segmap_from_shortcut = Tensor<T>::zeros_like(segmap_);
    diag.segmap_from_trunk = Tensor<T>::zeros_like(segmap_);

    Tensor<T> d_map = seg_map_grad ? *seg_map_grad : Tensor<T>::zeros_like(segmap_);
    Tensor<T> d_feat = Tensor<T>::zeros_like(features_);
    bool seg_seeded = seg_map_grad != nullptr;

    if (cls_logit_grad != T(0)) {
      std::vector<T> d_vec = cls_linear_->backward(cls_logit_grad);
      const size_t conv_part = d_vec.size() - 2;
      std::vector<T> d_conv_vec(d_vec.begin(), d_vec.begin() + conv_part);
      std::vector<T> d_map_vec(d_vec.begin() + conv_part, d_vec.end());

      // (a) pooled shortcut summaries of the output map
      if (!cfg_.grad_stop_shortcuts && !cfg_.grad_stop_seg_features) {
        diag.segmap_from_shortcut = map_gpool_.backward(d_map_vec);
        add_inplace(d_map, diag.segmap_from_shortcut);
        seg_seeded = true;
      }

      Tensor<T> d_t = cls_gpool_.backward(d_conv_vec);
      for (auto it = cls_units_.rbegin(); it != cls_units_.rend(); ++it) d_t = it->backward(d_t);
      Tensor<T> d_cat = cls_pool_.backward(d_t);

      // (b) the whole segmentation-to-classification boundary
      if (!cfg_.grad_stop_seg_features) {
        split_channels(d_cat, d_feat, diag.segmap_from_trunk);
        add_inplace(d_map, diag.segmap_from_trunk);
        seg_seeded = true;
      }
    }

    if (seg_seeded) {
      add_inplace(d_feat, seg_head_->backward(d_map));
      Tensor<T> g = wide_->backward(d_feat);
      for (size_t b = seg_blocks_.size(); b-- > 0;) {
        g = seg_pools_[b].backward(g);
        for (auto it = seg_blocks_[b].rbegin(); it != seg_blocks_[b].rend(); ++it)
          g = it->backward(g);
      }
    }
    return diag;
  }

  void zero_grad() {
    for (Param<T>* p : parameters()) p->zero_grad();
  }

  std::vector<Param<T>*> parameters() {
    std::vector<Param<T>*> out = segmentation_parameters();
    std::vector<Param<T>*> cls = classification_parameters();
    out.insert(out.end(), cls.begin(), cls.end());
    return out;
  }

  std::vector<Param<T>*> segmentation_parameters() {
    std::vector<Param<T>*> out;
    for (auto& block : seg_blocks_)
      for (auto& u : block) u.collect(out);
    wide_->collect(out);
    seg_head_->collect(out);
    return out;
  }

  std::vector<Param<T>*> classification_parameters() {
    std::vector<Param<T>*> out;
    for (auto& u : cls_units_) u.collect(out);
    cls_linear_->collect(out);
    return out;
  }

  const ModelConfig& config() const { return cfg_; }
  int feature_channels() const { return feature_channels_; }

  std::vector<T> parameter_vector() {
    std::vector<T> out;
    for (Param<T>* p : parameters()) out.insert(out.end(), p->value.begin(), p->value.end());
    return out;
  }

  void set_parameter_vector(const std::vector<T>& flat) {
    size_t off = 0;
    for (Param<T>* p : parameters()) {
      if (off + p->value.size() > flat.size())
        throw CheckpointError("parameter vector too short for model");
      std::copy(flat.begin() + off, flat.begin() + off + p->value.size(), p->value.begin());
      off += p->value.size();
    }
    if (off != flat.size()) throw CheckpointError("parameter vector size mismatch");
  }

 private:
  static Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    Tensor<T> out(a.channels() + b.channels(), a.height(), a.width());
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    return out;
  }

  static void split_channels(const Tensor<T>& cat, Tensor<T>& a, Tensor<T>& b) {
    std::copy(cat.data(), cat.data() + a.size(), a.data());
    std::copy(cat.data() + a.size(), cat.data() + a.size() + b.size(), b.data());
  }

  static void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }

  ModelConfig cfg_;
  int feature_channels_ = 0;

  std::vector<std::vector<ConvUnit<T>>> seg_blocks_;
  std::vector<MaxPool2x2<T>> seg_pools_;
  std::unique_ptr<ConvUnit<T>> wide_;
  std::unique_ptr<Conv2d<T>> seg_head_;

  MaxPool2x2<T> cls_pool_;
  std::vector<ConvUnit<T>> cls_units_;
  GlobalPool<T> cls_gpool_, map_gpool_;
  std::unique_ptr<Linear<T>> cls_linear_;

  // forward caches
  Tensor<T> features_, segmap_, concat_in_;
};

template <typename T>
struct GradientPartition {
  std::map<std::string, std::vector<T>> seg;
  std::map<std::string, std::vector<T>> cls;
};

// Splits the gradients accumulated by the last backward pass by parameter
// set. Every parameter belongs to exactly one side.
template <typename T>
GradientPartition<T> gradient_partition(TwoStageModel<T>& model) {
  GradientPartition<T> out;
  for (Param<T>* p : model.segmentation_parameters()) out.seg[p->name] = p->grad;
  for (Param<T>* p : model.classification_parameters()) out.cls[p->name] = p->grad;
  return out;
}

using ModelF = TwoStageModel<float>;

}  // namespace surfdet
