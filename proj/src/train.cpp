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

#include "surfdet/train.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "surfdet/errors.hpp"
#include "surfdet/loss.hpp"

namespace surfdet {

namespace {

// Loss-resolution target and pixel weights for one sample; fixed for the
// whole run, so computed once up front.
struct PreparedTarget {
  BinaryMask target;
  WeightMask weights;
};

std::unordered_map<std::string, PreparedTarget> prepare_targets(const DatasetSplit& split,
                                                                const TrainConfig& cfg,
                                                                int downsample_factor) {
  std::unordered_map<std::string, PreparedTarget> out;
  auto add = [&](const ImageSample& s) {
    PreparedTarget pt;
    pt.target = downsample_mask(s.mask, downsample_factor);
    pt.weights =
        compute_weight_mask(pt.target, cfg.w_pos, cfg.p, cfg.toggles.dist_transform);
    out.emplace(s.id, std::move(pt));
  };
  for (const auto& s : split.positives) add(s);
  for (const auto& s : split.negatives) add(s);
  return out;
}

std::vector<std::string> ids_of(const std::vector<ImageSample>& samples) {
  std::vector<std::string> ids;
  ids.reserve(samples.size());
  for (const auto& s : samples) ids.push_back(s.id);
  return ids;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("learning rate must be > 0");
  if (delta < 0.0) throw ConfigError("delta must be >= 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(w_pos > 0.0)) throw ConfigError("positive pixel weight must be > 0");
  if (p < 0.0) throw ConfigError("distance exponent must be >= 0");
}

void TrainHistory::write_tsv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write history file: " + path);
  f.precision(9);
  f << "epoch\tlambda\tseg_loss\tcls_loss\ttotal_loss\tval_ap\n";
  for (const auto& r : epochs) {
    f << r.epoch << '\t' << r.lambda << '\t' << r.seg_loss << '\t' << r.cls_loss << '\t'
      << r.total_loss << '\t';
    if (r.has_val)
      f << r.val_ap;
    else
      f << '-';
    f << '\n';
  }
}

void sgd_step(const std::vector<Param<float>*>& params, double eta) {
  const float lr = static_cast<float>(eta);
  for (auto* p : params)
    for (size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr * p->grad[i];
}

TrainResult train(ModelF& model, const DatasetSplit& split, const DatasetSplit* validation,
                  const TrainConfig& cfg, NegativeSampler* sampler) {
  cfg.validate();
  TrainResult result;
  if (cfg.epochs == 0) {
    result.final_params = model.parameter_vector();
    return result;
  }
  if (split.positives.empty() || split.negatives.empty())
    throw DataError("training needs at least one positive and one negative sample");
  if (cfg.validation_select && validation == nullptr)
    throw ConfigError("validation selection requested without a validation split");

  const int d = model.config().downsample_factor;
  auto targets = prepare_targets(split, cfg, d);
  const auto index = build_index(split);
  const auto pos_ids = ids_of(split.positives);
  const auto neg_ids = ids_of(split.negatives);

  NegativeSampler local_sampler(cfg.seed, cfg.toggles.freq_sampling);
  NegativeSampler& smp = sampler != nullptr ? *sampler : local_sampler;

  MixSchedule schedule;
  schedule.total_epochs = cfg.epochs;
  schedule.delta = cfg.delta;
  schedule.dynamic_enabled = cfg.toggles.dyn_balanced_loss;

  auto params = model.parameters();
  std::vector<float> best_params;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lambda = lambda_at(epoch, schedule);
    const double cls_scale_epoch = cfg.delta * (1.0 - lambda);
    const auto stream = build_epoch_stream(pos_ids, neg_ids, smp);

    double seg_sum = 0.0;
    double cls_sum = 0.0;
    int step = 0;
    for (size_t start = 0; start < stream.size(); start += cfg.batch_size, ++step) {
      const size_t end = std::min(stream.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      model.zero_grad();

      double batch_seg = 0.0;
      double batch_cls = 0.0;
      for (size_t i = start; i < end; ++i) {
        const ImageSample& s = *index.at(stream[i]);
        const PreparedTarget& pt = targets.at(s.id);
        auto fwd = model.forward(s.image);

        batch_seg += segmentation_loss(fwd.seg_output_map, pt.target, pt.weights);
        batch_cls += classification_loss(static_cast<double>(fwd.cls_logit), s.label);

        const float cls_grad = static_cast<float>(
            cls_scale_epoch * inv_batch *
            classification_loss_grad(static_cast<double>(fwd.cls_logit), s.label));
        if (lambda > 0.0) {
          const TensorF seg_grad = segmentation_loss_grad(fwd.seg_output_map, pt.target,
                                                          pt.weights, lambda * inv_batch);
          model.backward(&seg_grad, cls_grad);
        } else {
          model.backward(nullptr, cls_grad);
        }
      }
      batch_seg *= inv_batch;
      batch_cls *= inv_batch;
      const double batch_total = lambda * batch_seg + cls_scale_epoch * batch_cls;
      if (!std::isfinite(batch_total)) throw TrainDivergence(epoch, step, batch_total);

      sgd_step(params, cfg.eta);
      seg_sum += batch_seg * static_cast<double>(end - start);
      cls_sum += batch_cls * static_cast<double>(end - start);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lambda = lambda;
    rec.seg_loss = seg_sum / static_cast<double>(stream.size());
    rec.cls_loss = cls_sum / static_cast<double>(stream.size());
    rec.total_loss = lambda * rec.seg_loss + cls_scale_epoch * rec.cls_loss;

    if (cfg.validation_select) {
      const Scored scored = score_dataset(model, *validation);
      rec.val_ap = average_precision(scored.scores, scored.labels);
      rec.has_val = true;
      if (result.best_epoch < 0 || rec.val_ap > result.best_val_ap) {
        result.best_epoch = epoch;
        result.best_val_ap = rec.val_ap;
        best_params = model.parameter_vector();
      }
    }
    result.history.epochs.push_back(rec);
  }

  result.final_params = model.parameter_vector();
  if (cfg.validation_select && !best_params.empty()) model.set_parameter_vector(best_params);
  return result;
}

ModelF default_model_for(const ModelConfig& base, const TrainToggles& toggles, uint64_t seed) {
  ModelConfig cfg = base;
  cfg.grad_stop_shortcuts = toggles.grad_flow_adjust;
  cfg.grad_stop_seg_features = toggles.grad_flow_adjust;
  return ModelF(cfg, seed);
}

std::vector<AblationRow> ablate(const ModelFactory& factory, const DatasetSplit& train_split,
                                const DatasetSplit* validation, const DatasetSplit& test_split,
                                const TrainConfig& base_cfg,
                                const std::vector<std::pair<std::string, TrainToggles>>& grid) {
  std::vector<AblationRow> rows;
  for (const auto& [name, toggles] : grid) {
    AblationRow row;
    row.name = name;
    row.toggles = toggles;
    TrainConfig cfg = base_cfg;
    cfg.toggles = toggles;
    ModelF model = factory(toggles);
    try {
      train(model, train_split, validation, cfg);
      row.report = evaluate(model, test_split);
    } catch (const TrainDivergence& e) {
      row.aborted = true;
      row.abort_reason = e.what();
    } catch (const NonFiniteLoss& e) {
      row.aborted = true;
      row.abort_reason = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::pair<std::string, TrainToggles>> parse_toggle_grid(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open grid file: " + path);
  std::vector<std::pair<std::string, TrainToggles>> grid;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string name;
    if (!(row >> name)) continue;
    int dyn = 0, grad = 0, freq = 0, dt = 0;
    if (!(row >> dyn >> grad >> freq >> dt))
      throw ConfigError("malformed grid row " + std::to_string(line_no) + " in " + path +
                        " (want: name dyn grad freq dt)");
    TrainToggles t;
    t.dyn_balanced_loss = dyn != 0;
    t.grad_flow_adjust = grad != 0;
    t.freq_sampling = freq != 0;
    t.dist_transform = dt != 0;
    grid.emplace_back(name, t);
  }
  if (grid.empty()) throw ConfigError("grid file has no rows: " + path);
  return grid;
}

void write_ablation_table(const std::vector<AblationRow>& rows, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write ablation table: " + path);
  f.precision(9);
  f << "name\tdyn_balanced_loss\tgrad_flow_adjust\tfreq_sampling\tdist_transform"
       "\tap\tfp\tfn\tstatus\n";
  for (const auto& r : rows) {
    f << r.name << '\t' << r.toggles.dyn_balanced_loss << '\t' << r.toggles.grad_flow_adjust
      << '\t' << r.toggles.freq_sampling << '\t' << r.toggles.dist_transform << '\t';
    if (r.aborted)
      f << "-\t-\t-\taborted: " << r.abort_reason << '\n';
    else
      f << r.report.ap << '\t' << r.report.fp << '\t' << r.report.fn << "\tok\n";
  }
}

}  // namespace surfdet
