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

#include "surfdet/eval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "surfdet/errors.hpp"
#include "surfdet/loss.hpp"

namespace surfdet {

namespace {

void check_paired(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw MetricError("score and label vectors differ in length");
  if (scores.empty()) throw MetricError("cannot evaluate an empty score vector");
}

// Indices sorted by score descending; equal scores stay adjacent.
std::vector<size_t> descending_order(const std::vector<double>& scores) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

Scored score_dataset(ModelF& model, const std::vector<const ImageSample*>& samples) {
  Scored out;
  out.scores.reserve(samples.size());
  out.labels.reserve(samples.size());
  for (const ImageSample* s : samples) {
    auto fwd = model.forward(s->image);
    out.scores.push_back(sigmoid(static_cast<double>(fwd.cls_logit)));
    out.labels.push_back(s->label);
  }
  return out;
}

Scored score_dataset(ModelF& model, const DatasetSplit& split) {
  std::vector<const ImageSample*> samples;
  samples.reserve(split.size());
  for (const auto& s : split.positives) samples.push_back(&s);
  for (const auto& s : split.negatives) samples.push_back(&s);
  return score_dataset(model, samples);
}

std::vector<PrPoint> pr_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_paired(scores, labels);
  const long long total_pos = std::count(labels.begin(), labels.end(), 1);
  if (total_pos == 0) throw MetricError("precision-recall curve needs at least one positive");

  const auto order = descending_order(scores);
  std::vector<PrPoint> points;
  long long tp = 0;
  long long fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]] == 1)
        ++tp;
      else
        ++fp;
      ++i;
    }
    PrPoint p;
    p.recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    points.push_back(p);
  }
  return points;
}

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  const auto points = pr_curve(scores, labels);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const auto& p : points) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

BestF best_f_measure(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_paired(scores, labels);
  const long long total_pos = std::count(labels.begin(), labels.end(), 1);
  const long long total_neg = static_cast<long long>(labels.size()) - total_pos;
  if (total_pos == 0 || total_neg == 0)
    throw MetricError("f-measure threshold selection needs both classes");

  const auto order = descending_order(scores);
  BestF best;
  bool found = false;
  long long tp = 0;
  long long fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]] == 1)
        ++tp;
      else
        ++fp;
      ++i;
    }
    const long long fn = total_pos - tp;
    const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    if (!found || f1 > best.f1) {  // strict: ties keep the higher threshold
      found = true;
      best.threshold = threshold;
      best.f1 = f1;
      best.fp = fp;
      best.fn = fn;
      best.tpr = static_cast<double>(tp) / static_cast<double>(total_pos);
      best.tnr = static_cast<double>(total_neg - fp) / static_cast<double>(total_neg);
    }
  }
  return best;
}

EvalReport report_from_scores(const std::vector<double>& scores, const std::vector<int>& labels) {
  EvalReport report;
  report.pr_points = pr_curve(scores, labels);
  report.ap = average_precision(scores, labels);
  const BestF best = best_f_measure(scores, labels);
  report.best_threshold = best.threshold;
  report.fp = best.fp;
  report.fn = best.fn;
  report.tpr = best.tpr;
  report.tnr = best.tnr;
  report.n_pos = std::count(labels.begin(), labels.end(), 1);
  report.n_neg = static_cast<long long>(labels.size()) - report.n_pos;
  return report;
}

EvalReport evaluate(ModelF& model, const DatasetSplit& split) {
  const Scored scored = score_dataset(model, split);
  return report_from_scores(scored.scores, scored.labels);
}

FoldSummary aggregate_folds(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw MetricError("fold aggregation needs at least one report");
  FoldSummary summary;
  summary.folds = static_cast<int>(reports.size());
  for (const auto& r : reports) {
    summary.mean_ap += r.ap;
    summary.fp_sum += r.fp;
    summary.fn_sum += r.fn;
  }
  summary.mean_ap /= static_cast<double>(reports.size());
  return summary;
}

void write_report(const EvalReport& report, const std::string& kv_path,
                  const std::string& pr_path) {
  std::ofstream kv(kv_path);
  if (!kv) throw MetricError("cannot write " + kv_path);
  kv.precision(9);
  kv << "ap=" << report.ap << '\n'
     << "best_threshold=" << report.best_threshold << '\n'
     << "fp=" << report.fp << '\n'
     << "fn=" << report.fn << '\n'
     << "tpr=" << report.tpr << '\n'
     << "tnr=" << report.tnr << '\n'
     << "n_pos=" << report.n_pos << '\n'
     << "n_neg=" << report.n_neg << '\n';

  std::ofstream pr(pr_path);
  if (!pr) throw MetricError("cannot write " + pr_path);
  pr.precision(9);
  pr << "recall\tprecision\n";
  for (const auto& p : report.pr_points) pr << p.recall << '\t' << p.precision << '\n';
}

}  // namespace surfdet
