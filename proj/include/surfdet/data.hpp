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
#include <string>
#include <unordered_map>
#include <vector>

#include "surfdet/mask.hpp"
#include "surfdet/tensor.hpp"

namespace surfdet {

// One supervised image. label is 1 whenever the mask has a positive pixel;
// an explicitly positive sample with an all-zero mask is rejected at load
// time because it would contradict the pixel supervision.
struct ImageSample {
  std::string id;
  TensorF image;   // C x H x W, values in [0, 1]
  BinaryMask mask; // same H x W as image
  int label = 0;
};

// Rectangle of size w x h centered at (cx, cy), rotated by angle_deg about
// its center. Coordinates are in pixels; pixel (ix, iy) has center
// (ix + 0.5, iy + 0.5).
struct RotatedBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  double angle_deg = 0.0;
};

struct DatasetSplit {
  std::vector<ImageSample> positives;
  std::vector<ImageSample> negatives;
  std::string name;

  size_t size() const { return positives.size() + negatives.size(); }
};

// Directory conventions accepted by load_dataset:
//  - kMaskFolders: root/pos/*.png with sibling masks root/pos_masks/<same
//    name>.png (8-bit, nonzero = defect) and root/neg/*.png.
//  - kRotatedBoxIndex: root/images/*.png plus root/annotations.tsv with
//    columns "id cx cy w h angle_deg"; multiple rows per id union their
//    boxes, ids absent from the file are negatives.
enum class DatasetLayout { kMaskFolders, kRotatedBoxIndex };

DatasetLayout parse_layout(const std::string& text);

// Loads a split with deterministic ordering by id. Images are never resized;
// dims that are not a multiple of pad_multiple are zero-padded bottom/right
// (masks likewise). channels must be 1 or 3.
DatasetSplit load_dataset(const std::string& root, DatasetLayout layout, int pad_multiple,
                          int channels = 1);

// Marks every pixel whose center lies inside the box, clipped to H x W. A
// fully out-of-bounds box yields an all-zero mask.
BinaryMask rasterize_rotated_box(const RotatedBox& box, int height, int width);

// Union of several boxes on one canvas.
BinaryMask rasterize_boxes(const std::vector<RotatedBox>& boxes, int height, int width);

// Block-max pooling: output pixel is positive iff any pixel of its d x d
// block is positive. Dims must be divisible by d.
BinaryMask downsample_mask(const BinaryMask& mask, int factor);

// Zero-pads image and mask bottom/right to the next multiple.
void pad_to_multiple(TensorF& image, BinaryMask& mask, int multiple);

enum class DefectKind { kBlob, kScratch };

struct SynthSpec {
  int n_pos = 0;
  int n_neg = 0;
  int size = 128;             // square images, must be divisible by the pad multiple
  DefectKind defect = DefectKind::kBlob;
  double noise_level = 0.05;  // amplitude of the per-pixel noise component
};

// Textured background plus, for positives, one inserted defect together with
// its exact generation mask. Bit-identical for identical (spec, seed).
DatasetSplit synth_generate(const SynthSpec& spec, uint64_t seed);

// PNG output, single-channel. Image values are clamped to [0, 1] and scaled
// to 8 bits; masks are written as 0/255.
void save_grayscale_png(const std::string& path, const TensorF& image);
void save_mask_png(const std::string& path, const BinaryMask& mask);

// Materializes a split in the kMaskFolders layout. Refuses to write into an
// existing non-empty directory unless force is set.
void write_dataset_mask_folders(const DatasetSplit& split, const std::string& root, bool force);

// id -> sample lookup across both lists.
std::unordered_map<std::string, const ImageSample*> build_index(const DatasetSplit& split);

}  // namespace surfdet
