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

#include "surfdet/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "surfdet/errors.hpp"

namespace surfdet {

namespace {

int to_int(const std::string& key, const std::string& v) {
  size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("key '" + key + "': not an integer: '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not a number: '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("key '" + key + "': not a number: '" + v + "'");
  return out;
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  // stoull would wrap a leading minus around instead of failing.
  if (!v.empty() && v[0] == '-')
    throw ConfigError("key '" + key + "': not an unsigned integer: '" + v + "'");
  size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': not an unsigned integer: '" + v + "'");
  }
  if (used != v.size())
    throw ConfigError("key '" + key + "': not an unsigned integer: '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("key '" + key + "': not a boolean (use 0/1/true/false): '" + v + "'");
}

std::string defect_name(DefectKind kind) {
  return kind == DefectKind::kBlob ? "blob" : "scratch";
}

DefectKind to_defect(const std::string& key, const std::string& v) {
  if (v == "blob") return DefectKind::kBlob;
  if (v == "scratch") return DefectKind::kScratch;
  throw ConfigError("key '" + key + "': unknown defect kind '" + v + "' (blob|scratch)");
}

struct KeyDef {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      {"model.input_channels",
       [](RunConfig& c, const std::string& v) {
         c.model.input_channels = to_int("model.input_channels", v);
       },
       [](const RunConfig& c) { return std::to_string(c.model.input_channels); }},
      {"model.base_channels",
       [](RunConfig& c, const std::string& v) {
         c.model.base_channels = to_int("model.base_channels", v);
       },
       [](const RunConfig& c) { return std::to_string(c.model.base_channels); }},
      {"model.downsample_factor",
       [](RunConfig& c, const std::string& v) {
         c.model.downsample_factor = to_int("model.downsample_factor", v);
       },
       [](const RunConfig& c) { return std::to_string(c.model.downsample_factor); }},
      {"train.eta",
       [](RunConfig& c, const std::string& v) { c.train.eta = to_double("train.eta", v); },
       [](const RunConfig& c) { return fmt(c.train.eta); }},
      {"train.delta",
       [](RunConfig& c, const std::string& v) { c.train.delta = to_double("train.delta", v); },
       [](const RunConfig& c) { return fmt(c.train.delta); }},
      {"train.epochs",
       [](RunConfig& c, const std::string& v) { c.train.epochs = to_int("train.epochs", v); },
       [](const RunConfig& c) { return std::to_string(c.train.epochs); }},
      {"train.batch_size",
       [](RunConfig& c, const std::string& v) {
         c.train.batch_size = to_int("train.batch_size", v);
       },
       [](const RunConfig& c) { return std::to_string(c.train.batch_size); }},
      {"train.w_pos",
       [](RunConfig& c, const std::string& v) { c.train.w_pos = to_double("train.w_pos", v); },
       [](const RunConfig& c) { return fmt(c.train.w_pos); }},
      {"train.p",
       [](RunConfig& c, const std::string& v) { c.train.p = to_double("train.p", v); },
       [](const RunConfig& c) { return fmt(c.train.p); }},
      {"train.dyn_balanced_loss",
       [](RunConfig& c, const std::string& v) {
         c.train.toggles.dyn_balanced_loss = to_bool("train.dyn_balanced_loss", v);
       },
       [](const RunConfig& c) { return std::string(c.train.toggles.dyn_balanced_loss ? "1" : "0"); }},
      {"train.grad_flow_adjust",
       [](RunConfig& c, const std::string& v) {
         c.train.toggles.grad_flow_adjust = to_bool("train.grad_flow_adjust", v);
       },
       [](const RunConfig& c) { return std::string(c.train.toggles.grad_flow_adjust ? "1" : "0"); }},
      {"train.freq_sampling",
       [](RunConfig& c, const std::string& v) {
         c.train.toggles.freq_sampling = to_bool("train.freq_sampling", v);
       },
       [](const RunConfig& c) { return std::string(c.train.toggles.freq_sampling ? "1" : "0"); }},
      {"train.dist_transform",
       [](RunConfig& c, const std::string& v) {
         c.train.toggles.dist_transform = to_bool("train.dist_transform", v);
       },
       [](const RunConfig& c) { return std::string(c.train.toggles.dist_transform ? "1" : "0"); }},
      {"train.seed",
       [](RunConfig& c, const std::string& v) { c.train.seed = to_u64("train.seed", v); },
       [](const RunConfig& c) { return std::to_string(c.train.seed); }},
      {"train.validation_select",
       [](RunConfig& c, const std::string& v) {
         c.train.validation_select = to_bool("train.validation_select", v);
       },
       [](const RunConfig& c) { return std::string(c.train.validation_select ? "1" : "0"); }},
      {"data.layout",
       [](RunConfig& c, const std::string& v) {
         parse_layout(v);  // validates
         c.data_layout = v;
       },
       [](const RunConfig& c) { return c.data_layout; }},
      {"data.root", [](RunConfig& c, const std::string& v) { c.data_root = v; },
       [](const RunConfig& c) { return c.data_root; }},
      {"data.val_root", [](RunConfig& c, const std::string& v) { c.val_root = v; },
       [](const RunConfig& c) { return c.val_root; }},
      {"data.test_root", [](RunConfig& c, const std::string& v) { c.test_root = v; },
       [](const RunConfig& c) { return c.test_root; }},
      {"data.folds", [](RunConfig& c, const std::string& v) { c.folds = v; },
       [](const RunConfig& c) { return c.folds; }},
      {"eval.checkpoint", [](RunConfig& c, const std::string& v) { c.eval_checkpoint = v; },
       [](const RunConfig& c) { return c.eval_checkpoint; }},
      {"ablate.grid", [](RunConfig& c, const std::string& v) { c.ablate_grid = v; },
       [](const RunConfig& c) { return c.ablate_grid; }},
      {"synth.n_pos",
       [](RunConfig& c, const std::string& v) { c.synth.n_pos = to_int("synth.n_pos", v); },
       [](const RunConfig& c) { return std::to_string(c.synth.n_pos); }},
      {"synth.n_neg",
       [](RunConfig& c, const std::string& v) { c.synth.n_neg = to_int("synth.n_neg", v); },
       [](const RunConfig& c) { return std::to_string(c.synth.n_neg); }},
      {"synth.size",
       [](RunConfig& c, const std::string& v) { c.synth.size = to_int("synth.size", v); },
       [](const RunConfig& c) { return std::to_string(c.synth.size); }},
      {"synth.defect",
       [](RunConfig& c, const std::string& v) { c.synth.defect = to_defect("synth.defect", v); },
       [](const RunConfig& c) { return defect_name(c.synth.defect); }},
      {"synth.noise_level",
       [](RunConfig& c, const std::string& v) {
         c.synth.noise_level = to_double("synth.noise_level", v);
       },
       [](const RunConfig& c) { return fmt(c.synth.noise_level); }},
      {"out.dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
       [](const RunConfig& c) { return c.out_dir; }},
      {"run.deterministic",
       [](RunConfig& c, const std::string& v) {
         c.deterministic = to_bool("run.deterministic", v);
       },
       [](const RunConfig& c) { return std::string(c.deterministic ? "1" : "0"); }},
  };
  return table;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& def : key_table()) {
    if (key == def.key) {
      def.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown configuration key: '" + key + "'");
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + " of " + path +
                        " is not a key=value assignment");
    apply_kv(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

RunConfig resolve_config(const std::string& file_path,
                         const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!file_path.empty()) load_config_file(cfg, file_path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + kv + "' is not a key=value assignment");
    apply_kv(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  return cfg;
}

void write_resolved(const RunConfig& cfg, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write resolved config: " + path);
  for (const auto& def : key_table()) f << def.key << " = " << def.get(cfg) << '\n';
}

std::string resolved_out_dir(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  const char* root = std::getenv("SURFDET_OUT");
  fs::path out(cfg.out_dir);
  if (root != nullptr && *root != '\0' && out.is_relative()) return (fs::path(root) / out).string();
  return out.string();
}

}  // namespace surfdet
