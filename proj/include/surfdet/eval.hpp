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

#include <string>
#include <vector>

#include "surfdet/data.hpp"
#include "surfdet/model.hpp"

namespace surfdet {

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

// Per-image classification quality of one dataset. Confusion counts and
// rates are taken at the best-F-measure threshold.
struct EvalReport {
  std::vector<PrPoint> pr_points;  // recall non-decreasing
  double ap = 0.0;
  double best_threshold = 0.0;
  long long fp = 0;
  long long fn = 0;
  double tpr = 0.0;
  double tnr = 0.0;
  long long n_pos = 0;
  long long n_neg = 0;
};

struct Scored {
  std::vector<double> scores;  // sigmoid of the classification logit
  std::vector<int> labels;
};

// Order-stable per-image scores.
Scored score_dataset(ModelF& model, const std::vector<const ImageSample*>& samples);
Scored score_dataset(ModelF& model, const DatasetSplit& split);  // positives then negatives

// Area under the precision-recall curve, step-wise over descending score
// thresholds with tied scores grouped at one threshold. Requires at least
// one positive label.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

// PR points as produced by the same threshold sweep (one point per distinct
// score, recall non-decreasing).
std::vector<PrPoint> pr_curve(const std::vector<double>& scores, const std::vector<int>& labels);

struct BestF {
  double threshold = 0.0;  // predict positive iff score >= threshold
  double f1 = 0.0;
  long long fp = 0;
  long long fn = 0;
  double tpr = 0.0;
  double tnr = 0.0;
};

// Maximizes F1 over all distinct score cut points; ties break toward the
// higher threshold. Requires both classes present.
BestF best_f_measure(const std::vector<double>& scores, const std::vector<int>& labels);

EvalReport evaluate(ModelF& model, const DatasetSplit& split);
EvalReport report_from_scores(const std::vector<double>& scores, const std::vector<int>& labels);

// Cross-fold protocol: mean of per-fold AP, sum of per-fold FP and FN. Raw
// scores are never pooled across folds.
struct FoldSummary {
  double mean_ap = 0.0;
  long long fp_sum = 0;
  long long fn_sum = 0;
  int folds = 0;
};

FoldSummary aggregate_folds(const std::vector<EvalReport>& reports);

// Flat key=value file plus a separate recall/precision table.
void write_report(const EvalReport& report, const std::string& kv_path,
                  const std::string& pr_path);

}  // namespace surfdet
