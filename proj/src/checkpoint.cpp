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

#include "surfdet/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "surfdet/errors.hpp"

namespace surfdet {

namespace {

constexpr char kMagic[8] = {'S', 'D', 'T', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::ifstream& f, const std::string& path) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw CheckpointError("truncated checkpoint: " + path);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, ModelF& model, int epoch) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot write checkpoint: " + path);
  f.write(kMagic, sizeof(kMagic));
  put<uint32_t>(f, kVersion);
  const ModelConfig& cfg = model.config();
  put<int32_t>(f, cfg.input_channels);
  put<int32_t>(f, cfg.base_channels);
  put<int32_t>(f, cfg.downsample_factor);
  put<uint8_t>(f, cfg.grad_stop_shortcuts ? 1 : 0);
  put<uint8_t>(f, cfg.grad_stop_seg_features ? 1 : 0);
  put<int32_t>(f, epoch);

  auto params = model.parameters();
  put<uint32_t>(f, static_cast<uint32_t>(params.size()));
  for (const auto* p : params) {
    put<uint32_t>(f, static_cast<uint32_t>(p->name.size()));
    f.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put<uint64_t>(f, static_cast<uint64_t>(p->value.size()));
    f.write(reinterpret_cast<const char*>(p->value.data()),
            static_cast<std::streamsize>(p->value.size() * sizeof(float)));
  }
  if (!f) throw CheckpointError("write failure on checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path, ModelF& model) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  if (take<uint32_t>(f, path) != kVersion)
    throw CheckpointError("unsupported checkpoint version in " + path);

  LoadedCheckpoint loaded;
  loaded.config.input_channels = take<int32_t>(f, path);
  loaded.config.base_channels = take<int32_t>(f, path);
  loaded.config.downsample_factor = take<int32_t>(f, path);
  loaded.config.grad_stop_shortcuts = take<uint8_t>(f, path) != 0;
  loaded.config.grad_stop_seg_features = take<uint8_t>(f, path) != 0;
  loaded.epoch = take<int32_t>(f, path);

  const ModelConfig& cfg = model.config();
  if (loaded.config.input_channels != cfg.input_channels ||
      loaded.config.base_channels != cfg.base_channels ||
      loaded.config.downsample_factor != cfg.downsample_factor)
    throw CheckpointError("checkpoint architecture disagrees with the model: " + path);

  auto params = model.parameters();
  const uint32_t n = take<uint32_t>(f, path);
  if (n != params.size())
    throw CheckpointError("checkpoint parameter count disagrees with the model: " + path);
  for (auto* p : params) {
    const uint32_t name_len = take<uint32_t>(f, path);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    if (!f || name != p->name)
      throw CheckpointError("checkpoint parameter order mismatch at '" + p->name + "': " + path);
    const uint64_t count = take<uint64_t>(f, path);
    if (count != p->value.size())
      throw CheckpointError("checkpoint shape mismatch for '" + p->name + "': " + path);
    f.read(reinterpret_cast<char*>(p->value.data()),
           static_cast<std::streamsize>(count * sizeof(float)));
    if (!f) throw CheckpointError("truncated checkpoint: " + path);
  }
  return loaded;
}

ModelF load_checkpoint_model(const std::string& path, int* epoch_out) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  probe.read(magic, sizeof(magic));
  if (!probe || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  if (take<uint32_t>(probe, path) != kVersion)
    throw CheckpointError("unsupported checkpoint version in " + path);
  ModelConfig cfg;
  cfg.input_channels = take<int32_t>(probe, path);
  cfg.base_channels = take<int32_t>(probe, path);
  cfg.downsample_factor = take<int32_t>(probe, path);
  cfg.grad_stop_shortcuts = take<uint8_t>(probe, path) != 0;
  cfg.grad_stop_seg_features = take<uint8_t>(probe, path) != 0;
  probe.close();

  ModelF model(cfg, 0);
  const LoadedCheckpoint loaded = load_checkpoint(path, model);
  if (epoch_out != nullptr) *epoch_out = loaded.epoch;
  return model;
}

}  // namespace surfdet
