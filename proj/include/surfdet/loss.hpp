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

#include <cmath>
#include <string>
#include <vector>

#include "surfdet/errors.hpp"
#include "surfdet/mask.hpp"
#include "surfdet/tensor.hpp"

namespace surfdet {

// Loss mixing state. lambda shifts linearly from 1 (segmentation only) at
// epoch 0 to 0 (classification only) at the final epoch; delta additionally
// scales the classification term so it cannot dominate.
struct MixSchedule {
  int total_epochs = 1;
  double delta = 1.0;
  bool dynamic_enabled = true;
};

// Fixed mixing used when dynamic balancing is disabled: both losses stay
// active with equal weight for the whole run.
constexpr double kStaticLambda = 0.5;

inline double lambda_at(int epoch, const MixSchedule& schedule) {
  if (epoch < 0 || epoch > schedule.total_epochs)
    throw ScheduleError("epoch " + std::to_string(epoch) + " outside schedule of " +
                        std::to_string(schedule.total_epochs) + " epochs");
  if (!schedule.dynamic_enabled) return kStaticLambda;
  return 1.0 - static_cast<double>(epoch) / static_cast<double>(schedule.total_epochs);
}

inline double total_loss(double seg_loss, double cls_loss, double lambda, double delta) {
  if (!std::isfinite(seg_loss) || !std::isfinite(cls_loss))
    throw NonFiniteLoss("non-finite loss term (seg=" + std::to_string(seg_loss) +
                        ", cls=" + std::to_string(cls_loss) + ")");
  return lambda * seg_loss + delta * (1.0 - lambda) * cls_loss;
}

struct LossBreakdown {
  double seg_loss = 0.0;
  double cls_loss = 0.0;
  double lambda = 1.0;
  double total = 0.0;
};

inline LossBreakdown make_breakdown(double seg_loss, double cls_loss, double lambda, double delta) {
  LossBreakdown b;
  b.seg_loss = seg_loss;
  b.cls_loss = cls_loss;
  b.lambda = lambda;
  b.total = total_loss(seg_loss, cls_loss, lambda, delta);
  return b;
}

// Per-pixel segmentation-loss weights at the loss resolution. Negative
// pixels always weigh 1; positive pixels weigh w_pos * (D/Dmax)^p with D the
// exact Euclidean distance to the nearest negative pixel and Dmax the
// maximum D inside that pixel's 8-connected positive region.
struct WeightMask {
  int h = 0, w = 0;
  std::vector<float> weights;
  float w_pos = 1.0f;
  float p = 1.0f;

  float at(int y, int x) const { return weights[static_cast<size_t>(y) * w + x]; }
};

WeightMask compute_weight_mask(const BinaryMask& target, double w_pos, double p, bool dt_enabled);

// Grayscale rendering for inspection: weight w_pos maps to full white.
std::vector<float> weight_mask_to_image(const WeightMask& wm);

// numerically stable binary cross-entropy on a logit
inline double bce_with_logit(double logit, double target) {
  return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double classification_loss(double cls_logit, int label) {
  return bce_with_logit(cls_logit, static_cast<double>(label));
}

// dL/dlogit for the classification loss
inline double classification_loss_grad(double cls_logit, int label) {
  return sigmoid(cls_logit) - static_cast<double>(label);
}

// Weighted pixel-wise cross-entropy, averaged over all pixels (weighted
// numerator, plain pixel-count denominator).
template <typename T>
double segmentation_loss(const Tensor<T>& logit_map, const BinaryMask& target,
                         const WeightMask& weights) {
  if (logit_map.channels() != 1 || logit_map.height() != target.h || logit_map.width() != target.w ||
      weights.h != target.h || weights.w != target.w)
    throw ShapeError("segmentation loss inputs disagree on shape");
  const size_t n = target.size();
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i)
    acc += static_cast<double>(weights.weights[i]) *
           bce_with_logit(static_cast<double>(logit_map[i]), target.v[i] ? 1.0 : 0.0);
  return acc / static_cast<double>(n);
}

// dL/dlogit of segmentation_loss, scaled. scale folds in the loss mixing
// weight and the batch average.
template <typename T>
Tensor<T> segmentation_loss_grad(const Tensor<T>& logit_map, const BinaryMask& target,
                                 const WeightMask& weights, double scale) {
  Tensor<T> grad = Tensor<T>::zeros_like(logit_map);
  const size_t n = target.size();
  const double inv_n = scale / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    const double t = target.v[i] ? 1.0 : 0.0;
    grad[i] = static_cast<T>(static_cast<double>(weights.weights[i]) *
                             (sigmoid(static_cast<double>(logit_map[i])) - t) * inv_n);
  }
  return grad;
}

}  // namespace surfdet
