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

#include "surfdet/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "surfdet/errors.hpp"
#include "surfdet/rng.hpp"

namespace fs = std::filesystem;

namespace surfdet {

namespace {

std::vector<std::string> list_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

TensorF load_image(const fs::path& path, int channels) {
  cv::Mat img = cv::imread(path.string(),
                           channels == 1 ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
  if (img.empty()) throw DataError("unreadable image: " + path.string());
  TensorF t(channels, img.rows, img.cols);
  for (int y = 0; y < img.rows; ++y) {
    for (int x = 0; x < img.cols; ++x) {
      if (channels == 1) {
        t(0, y, x) = static_cast<float>(img.at<uint8_t>(y, x)) / 255.0f;
      } else {
        const auto& px = img.at<cv::Vec3b>(y, x);
        for (int c = 0; c < 3; ++c) t(c, y, x) = static_cast<float>(px[c]) / 255.0f;
      }
    }
  }
  return t;
}

BinaryMask load_mask(const fs::path& path) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (img.empty()) throw DataError("unreadable mask: " + path.string());
  BinaryMask mask(img.rows, img.cols);
  for (int y = 0; y < img.rows; ++y)
    for (int x = 0; x < img.cols; ++x) mask.at(y, x) = img.at<uint8_t>(y, x) != 0 ? 1 : 0;
  return mask;
}

std::string stem_of(const std::string& filename) {
  return fs::path(filename).stem().string();
}

DatasetSplit load_mask_folders(const fs::path& root, int pad_multiple, int channels) {
  DatasetSplit split;
  split.name = root.filename().string();

  const fs::path pos_dir = root / "pos";
  const fs::path mask_dir = root / "pos_masks";
  const fs::path neg_dir = root / "neg";

  const auto pos_names = list_pngs(pos_dir);
  if (pos_names.empty())
    throw DataError("no positive images under " + pos_dir.string() + "; training impossible");

  for (const auto& name : pos_names) {
    ImageSample s;
    s.id = "pos/" + stem_of(name);
    s.image = load_image(pos_dir / name, channels);
    const fs::path mask_path = mask_dir / name;
    if (!fs::exists(mask_path))
      throw DataError("missing mask for positive image: " + mask_path.string());
    s.mask = load_mask(mask_path);
    if (s.mask.h != s.image.height() || s.mask.w != s.image.width())
      throw DataError("mask dims disagree with image dims for " + s.id);
    if (!s.mask.any())
      throw DataError("all-zero mask for positive image " + s.id +
                      "; label and mask contradict each other");
    s.label = 1;
    pad_to_multiple(s.image, s.mask, pad_multiple);
    split.positives.push_back(std::move(s));
  }

  for (const auto& name : list_pngs(neg_dir)) {
    ImageSample s;
    s.id = "neg/" + stem_of(name);
    s.image = load_image(neg_dir / name, channels);
    s.mask = BinaryMask(s.image.height(), s.image.width());
    s.label = 0;
    pad_to_multiple(s.image, s.mask, pad_multiple);
    split.negatives.push_back(std::move(s));
  }
  return split;
}

DatasetSplit load_rotated_box_index(const fs::path& root, int pad_multiple, int channels) {
  DatasetSplit split;
  split.name = root.filename().string();

  const fs::path index_path = root / "annotations.tsv";
  std::ifstream index(index_path);
  if (!index) throw DataError("cannot open " + index_path.string());

  std::map<std::string, std::vector<RotatedBox>> boxes;
  std::string line;
  int line_no = 0;
  bool saw_data = false;
  while (std::getline(index, line)) {
    ++line_no;
    std::istringstream row(line);
    std::string id;
    if (!(row >> id)) continue;  // blank line
    RotatedBox box;
    if (!(row >> box.cx >> box.cy >> box.w >> box.h >> box.angle_deg)) {
      if (!saw_data && id == "id") continue;  // optional header row
      throw DataError("malformed annotation row " + std::to_string(line_no) + " in " +
                      index_path.string());
    }
    if (box.w <= 0.0 || box.h <= 0.0)
      throw DataError("non-positive box size on row " + std::to_string(line_no) + " in " +
                      index_path.string());
    saw_data = true;
    boxes[id].push_back(box);
  }

  const fs::path image_dir = root / "images";
  const auto names = list_pngs(image_dir);
  for (const auto& name : names) {
    const std::string id = stem_of(name);
    ImageSample s;
    s.id = id;
    s.image = load_image(image_dir / name, channels);
    auto it = boxes.find(id);
    if (it != boxes.end()) {
      s.mask = rasterize_boxes(it->second, s.image.height(), s.image.width());
      if (!s.mask.any())
        throw DataError("annotated boxes for " + id + " rasterize to an empty mask");
      s.label = 1;
      pad_to_multiple(s.image, s.mask, pad_multiple);
      split.positives.push_back(std::move(s));
      boxes.erase(it);
    } else {
      s.mask = BinaryMask(s.image.height(), s.image.width());
      s.label = 0;
      pad_to_multiple(s.image, s.mask, pad_multiple);
      split.negatives.push_back(std::move(s));
    }
  }
  if (!boxes.empty())
    throw DataError("annotation refers to missing image: " + boxes.begin()->first);
  if (split.positives.empty())
    throw DataError("no annotated images under " + root.string() + "; training impossible");
  return split;
}

float clamp01(double v) { return static_cast<float>(std::min(1.0, std::max(0.0, v))); }

// Band-limited texture: bilinear interpolation of a coarse uniform grid plus
// fine per-pixel noise around mid gray.
TensorF synth_background(int size, double noise_level, Rng& rng) {
  const int cell = 16;
  const int nodes = size / cell + 2;
  std::vector<double> grid(static_cast<size_t>(nodes) * nodes);
  for (auto& g : grid) g = rng.uniform(-1.0, 1.0);

  TensorF img(1, size, size);
  for (int y = 0; y < size; ++y) {
    const double gy = static_cast<double>(y) / cell;
    const int iy = static_cast<int>(gy);
    const double fy = gy - iy;
    for (int x = 0; x < size; ++x) {
      const double gx = static_cast<double>(x) / cell;
      const int ix = static_cast<int>(gx);
      const double fx = gx - ix;
      const double top = grid[iy * nodes + ix] * (1.0 - fx) + grid[iy * nodes + ix + 1] * fx;
      const double bot =
          grid[(iy + 1) * nodes + ix] * (1.0 - fx) + grid[(iy + 1) * nodes + ix + 1] * fx;
      const double coarse = top * (1.0 - fy) + bot * fy;
      const double fine = rng.uniform(-1.0, 1.0) * noise_level;
      img(0, y, x) = clamp01(0.5 + 0.18 * coarse + fine);
    }
  }
  return img;
}

// Elliptic intensity bump. Every masked pixel receives at least 35% of the
// full shift so the generation mask is exactly the modified support.
void add_blob(TensorF& img, BinaryMask& mask, Rng& rng) {
  const int size = img.height();
  const double margin = 14.0;
  const double cx = rng.uniform(margin, size - margin);
  const double cy = rng.uniform(margin, size - margin);
  const double a = rng.uniform(4.0, 9.0);
  const double b = rng.uniform(4.0, 9.0);
  const double theta = rng.uniform(0.0, 3.141592653589793);
  const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
  const double shift = sign * rng.uniform(0.30, 0.45);
  const double c = std::cos(theta);
  const double s = std::sin(theta);

  const int r = static_cast<int>(std::ceil(std::max(a, b))) + 1;
  for (int y = std::max(0, static_cast<int>(cy) - r);
       y <= std::min(size - 1, static_cast<int>(cy) + r); ++y) {
    for (int x = std::max(0, static_cast<int>(cx) - r);
         x <= std::min(size - 1, static_cast<int>(cx) + r); ++x) {
      const double dx = (x + 0.5) - cx;
      const double dy = (y + 0.5) - cy;
      const double u = (dx * c + dy * s) / a;
      const double v = (-dx * s + dy * c) / b;
      const double r2 = u * u + v * v;
      if (r2 > 1.0) continue;
      img(0, y, x) = clamp01(img(0, y, x) + shift * (0.35 + 0.65 * (1.0 - r2)));
      mask.at(y, x) = 1;
    }
  }
}

void add_scratch(TensorF& img, BinaryMask& mask, Rng& rng) {
  const int size = img.height();
  RotatedBox box;
  box.cx = rng.uniform(0.3 * size, 0.7 * size);
  box.cy = rng.uniform(0.3 * size, 0.7 * size);
  box.w = rng.uniform(0.25 * size, 0.5 * size);
  box.h = rng.uniform(2.0, 3.5);
  box.angle_deg = rng.uniform(0.0, 180.0);
  const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
  const double shift = sign * rng.uniform(0.30, 0.45);

  BinaryMask box_mask = rasterize_rotated_box(box, size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (!box_mask.at(y, x)) continue;
      img(0, y, x) = clamp01(img(0, y, x) + shift);
      mask.at(y, x) = 1;
    }
  }
}

std::string padded_index(int i) {
  std::string s = std::to_string(i);
  while (s.size() < 4) s.insert(s.begin(), '0');
  return s;
}

cv::Mat tensor_to_u8(const TensorF& image) {
  cv::Mat m(image.height(), image.width(), CV_8UC1);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      m.at<uint8_t>(y, x) =
          static_cast<uint8_t>(std::lround(clamp01(image(0, y, x)) * 255.0));
  return m;
}

}  // namespace

DatasetLayout parse_layout(const std::string& text) {
  if (text == "mask_folders") return DatasetLayout::kMaskFolders;
  if (text == "rotated_box_index") return DatasetLayout::kRotatedBoxIndex;
  throw DataError("unknown dataset layout: " + text);
}

DatasetSplit load_dataset(const std::string& root, DatasetLayout layout, int pad_multiple,
                          int channels) {
  if (pad_multiple < 1) throw DataError("pad multiple must be >= 1");
  if (channels != 1 && channels != 3) throw DataError("channels must be 1 or 3");
  const fs::path root_path(root);
  if (!fs::is_directory(root_path)) throw DataError("dataset root not found: " + root);
  return layout == DatasetLayout::kMaskFolders
             ? load_mask_folders(root_path, pad_multiple, channels)
             : load_rotated_box_index(root_path, pad_multiple, channels);
}

BinaryMask rasterize_rotated_box(const RotatedBox& box, int height, int width) {
  if (box.w <= 0.0 || box.h <= 0.0) throw DataError("box size must be positive");
  BinaryMask mask(height, width);
  const double rad = box.angle_deg * 3.141592653589793 / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  const double radius = 0.5 * std::hypot(box.w, box.h) + 1.0;
  const int y0 = std::max(0, static_cast<int>(std::floor(box.cy - radius)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(box.cy + radius)));
  const int x0 = std::max(0, static_cast<int>(std::floor(box.cx - radius)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(box.cx + radius)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x + 0.5) - box.cx;
      const double dy = (y + 0.5) - box.cy;
      const double u = dx * c + dy * s;   // along the w axis
      const double v = -dx * s + dy * c;  // along the h axis
      if (std::abs(u) <= box.w / 2.0 && std::abs(v) <= box.h / 2.0) mask.at(y, x) = 1;
    }
  }
  return mask;
}

BinaryMask rasterize_boxes(const std::vector<RotatedBox>& boxes, int height, int width) {
  BinaryMask mask(height, width);
  for (const auto& box : boxes) {
    BinaryMask one = rasterize_rotated_box(box, height, width);
    for (size_t i = 0; i < mask.v.size(); ++i) mask.v[i] = mask.v[i] | one.v[i];
  }
  return mask;
}

BinaryMask downsample_mask(const BinaryMask& mask, int factor) {
  if (factor < 1) throw ShapeError("downsample factor must be >= 1");
  if (mask.h % factor != 0 || mask.w % factor != 0)
    throw ShapeError("mask dims " + std::to_string(mask.h) + "x" + std::to_string(mask.w) +
                     " not divisible by " + std::to_string(factor));
  BinaryMask out(mask.h / factor, mask.w / factor);
  for (int y = 0; y < mask.h; ++y) {
    for (int x = 0; x < mask.w; ++x) {
      if (mask.at(y, x)) out.at(y / factor, x / factor) = 1;
    }
  }
  return out;
}

void pad_to_multiple(TensorF& image, BinaryMask& mask, int multiple) {
  if (multiple < 1) throw ShapeError("pad multiple must be >= 1");
  const int h = image.height();
  const int w = image.width();
  const int ph = (h + multiple - 1) / multiple * multiple;
  const int pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return;
  TensorF padded(image.channels(), ph, pw);
  for (int c = 0; c < image.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) padded(c, y, x) = image(c, y, x);
  BinaryMask padded_mask(ph, pw);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) padded_mask.at(y, x) = mask.at(y, x);
  image = std::move(padded);
  mask = std::move(padded_mask);
}

DatasetSplit synth_generate(const SynthSpec& spec, uint64_t seed) {
  if (spec.size < 32) throw DataError("synthetic image size must be >= 32");
  if (spec.n_pos < 0 || spec.n_neg < 0) throw DataError("sample counts must be >= 0");
  DatasetSplit split;
  split.name = "synth";
  Rng base(seed);
  for (int i = 0; i < spec.n_pos; ++i) {
    Rng rng = base.child(0x100000 + static_cast<uint64_t>(i));
    ImageSample s;
    s.id = "pos_" + padded_index(i);
    s.image = synth_background(spec.size, spec.noise_level, rng);
    s.mask = BinaryMask(spec.size, spec.size);
    if (spec.defect == DefectKind::kBlob)
      add_blob(s.image, s.mask, rng);
    else
      add_scratch(s.image, s.mask, rng);
    s.label = 1;
    split.positives.push_back(std::move(s));
  }
  for (int i = 0; i < spec.n_neg; ++i) {
    Rng rng = base.child(0x200000 + static_cast<uint64_t>(i));
    ImageSample s;
    s.id = "neg_" + padded_index(i);
    s.image = synth_background(spec.size, spec.noise_level, rng);
    s.mask = BinaryMask(spec.size, spec.size);
    s.label = 0;
    split.negatives.push_back(std::move(s));
  }
  return split;
}

void save_grayscale_png(const std::string& path, const TensorF& image) {
  if (image.channels() != 1) throw DataError("png writer expects a single channel");
  if (!cv::imwrite(path, tensor_to_u8(image))) throw DataError("cannot write " + path);
}

void save_mask_png(const std::string& path, const BinaryMask& mask) {
  cv::Mat m(mask.h, mask.w, CV_8UC1);
  for (int y = 0; y < mask.h; ++y)
    for (int x = 0; x < mask.w; ++x) m.at<uint8_t>(y, x) = mask.at(y, x) ? 255 : 0;
  if (!cv::imwrite(path, m)) throw DataError("cannot write " + path);
}

void write_dataset_mask_folders(const DatasetSplit& split, const std::string& root, bool force) {
  const fs::path root_path(root);
  if (fs::exists(root_path) && !fs::is_empty(root_path) && !force)
    throw DataError("refusing to write into non-empty directory " + root +
                    " (pass force to overwrite)");
  fs::create_directories(root_path / "pos");
  fs::create_directories(root_path / "pos_masks");
  fs::create_directories(root_path / "neg");
  for (const auto& s : split.positives) {
    save_grayscale_png((root_path / "pos" / (s.id + ".png")).string(), s.image);
    save_mask_png((root_path / "pos_masks" / (s.id + ".png")).string(), s.mask);
  }
  for (const auto& s : split.negatives)
    save_grayscale_png((root_path / "neg" / (s.id + ".png")).string(), s.image);
}

std::unordered_map<std::string, const ImageSample*> build_index(const DatasetSplit& split) {
  std::unordered_map<std::string, const ImageSample*> index;
  for (const auto& s : split.positives) index.emplace(s.id, &s);
  for (const auto& s : split.negatives) index.emplace(s.id, &s);
  return index;
}

}  // namespace surfdet
