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

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "surfdet/data.hpp"
#include "surfdet/errors.hpp"
#include "surfdet/rng.hpp"

using namespace surfdet;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case.
fs::path scratch_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("surfdet_data_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Grayscale image whose pixels sit exactly on the 8-bit grid, so values
// survive the PNG round trip unchanged.
TensorF ramp_image(int h, int w, int offset) {
  TensorF t(1, h, w);
  for (int i = 0; i < h * w; ++i) t[i] = static_cast<float>((i + offset) % 256) / 255.0f;
  return t;
}

BinaryMask checker_mask(int h, int w) {
  BinaryMask m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.v[static_cast<size_t>(y) * w + x] = (x + y) % 2;
  return m;
}

ImageSample make_sample(const std::string& id, int h, int w, int label, int offset) {
  ImageSample s;
  s.id = id;
  s.image = ramp_image(h, w, offset);
  s.mask = label ? checker_mask(h, w) : BinaryMask(h, w);
  s.label = label;
  return s;
}

// Membership test for a rotated box, written independently of the rasterizer:
// rotate the pixel-center offset into the box frame and compare against the
// half extents.
bool inside_box(const RotatedBox& b, int x, int y) {
  const double rad = b.angle_deg * M_PI / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double dx = (x + 0.5) - b.cx;
  const double dy = (y + 0.5) - b.cy;
  const double u = dx * c + dy * s;
  const double v = -dx * s + dy * c;
  return std::abs(u) <= b.w / 2.0 && std::abs(v) <= b.h / 2.0;
}

void write_annotations(const fs::path& root, const std::string& body) {
  std::ofstream f(root / "annotations.tsv");
  f << body;
}

}  // namespace

TEST_CASE("mask-folder datasets survive a write/load round trip") {
  const fs::path root = scratch_dir("roundtrip");
  DatasetSplit split;
  split.name = "train";
  split.positives.push_back(make_sample("a", 8, 8, 1, 0));
  split.positives.push_back(make_sample("b", 8, 8, 1, 3));
  split.negatives.push_back(make_sample("c", 8, 8, 0, 7));

  write_dataset_mask_folders(split, root.string(), false);

  DatasetSplit loaded = load_dataset(root.string(), DatasetLayout::kMaskFolders, 4);
  REQUIRE(loaded.positives.size() == 2);
  REQUIRE(loaded.negatives.size() == 1);
  CHECK(loaded.positives[0].id == "pos/a");
  CHECK(loaded.positives[1].id == "pos/b");
  CHECK(loaded.negatives[0].id == "neg/c");

  for (size_t i = 0; i < 2; ++i) {
    const auto& orig = split.positives[i];
    const auto& got = loaded.positives[i];
    CHECK(got.label == 1);
    REQUIRE(got.image.height() == 8);
    REQUIRE(got.image.width() == 8);
    for (int k = 0; k < 64; ++k) CHECK(got.image[k] == orig.image[k]);
    REQUIRE(got.mask.h == 8);
    for (int k = 0; k < 64; ++k) CHECK(got.mask.v[k] == orig.mask.v[k]);
  }
  CHECK(loaded.negatives[0].label == 0);
  CHECK_FALSE(loaded.negatives[0].mask.any());
  fs::remove_all(root);
}

TEST_CASE("mask-folder writer refuses a non-empty directory unless forced") {
  const fs::path root = scratch_dir("force");
  DatasetSplit split;
  split.positives.push_back(make_sample("a", 8, 8, 1, 0));
  split.negatives.push_back(make_sample("c", 8, 8, 0, 1));

  write_dataset_mask_folders(split, root.string(), false);
  CHECK_THROWS_WITH_AS(write_dataset_mask_folders(split, root.string(), false),
                       doctest::Contains("force"), DataError);
  CHECK_NOTHROW(write_dataset_mask_folders(split, root.string(), true));
  fs::remove_all(root);
}

TEST_CASE("loading rejects broken mask-folder layouts") {
  const DatasetLayout layout = DatasetLayout::kMaskFolders;

  SUBCASE("missing root") {
    CHECK_THROWS_AS(load_dataset("/nonexistent/surfdet/root", layout, 1), DataError);
  }
  SUBCASE("no positives") {
    const fs::path root = scratch_dir("nopos");
    fs::create_directories(root / "pos");
    fs::create_directories(root / "pos_masks");
    fs::create_directories(root / "neg");
    save_grayscale_png((root / "neg" / "x.png").string(), ramp_image(8, 8, 0));
    CHECK_THROWS_WITH_AS(load_dataset(root.string(), layout, 1),
                         doctest::Contains("training impossible"), DataError);
    fs::remove_all(root);
  }
  SUBCASE("missing mask for a positive") {
    const fs::path root = scratch_dir("nomask");
    fs::create_directories(root / "pos");
    fs::create_directories(root / "pos_masks");
    fs::create_directories(root / "neg");
    save_grayscale_png((root / "pos" / "a.png").string(), ramp_image(8, 8, 0));
    CHECK_THROWS_WITH_AS(load_dataset(root.string(), layout, 1),
                         doctest::Contains("missing mask"), DataError);
    fs::remove_all(root);
  }
  SUBCASE("all-zero mask contradicts the positive label") {
    const fs::path root = scratch_dir("zeromask");
    fs::create_directories(root / "pos");
    fs::create_directories(root / "pos_masks");
    fs::create_directories(root / "neg");
    save_grayscale_png((root / "pos" / "a.png").string(), ramp_image(8, 8, 0));
    save_mask_png((root / "pos_masks" / "a.png").string(), BinaryMask(8, 8));
    CHECK_THROWS_WITH_AS(load_dataset(root.string(), layout, 1),
                         doctest::Contains("contradict"), DataError);
    fs::remove_all(root);
  }
  SUBCASE("mask dimensions must match the image") {
    const fs::path root = scratch_dir("dimmask");
    fs::create_directories(root / "pos");
    fs::create_directories(root / "pos_masks");
    fs::create_directories(root / "neg");
    save_grayscale_png((root / "pos" / "a.png").string(), ramp_image(8, 8, 0));
    save_mask_png((root / "pos_masks" / "a.png").string(), checker_mask(4, 4));
    CHECK_THROWS_WITH_AS(load_dataset(root.string(), layout, 1),
                         doctest::Contains("disagree"), DataError);
    fs::remove_all(root);
  }
  SUBCASE("bad pad multiple and channel count") {
    const fs::path root = scratch_dir("badargs");
    CHECK_THROWS_AS(load_dataset(root.string(), layout, 0), DataError);
    CHECK_THROWS_AS(load_dataset(root.string(), layout, 4, 2), DataError);
    fs::remove_all(root);
  }
}

TEST_CASE("rotated-box datasets load annotations into union masks") {
  const fs::path root = scratch_dir("rotbox");
  fs::create_directories(root / "images");
  save_grayscale_png((root / "images" / "a.png").string(), ramp_image(16, 16, 0));
  save_grayscale_png((root / "images" / "b.png").string(), ramp_image(16, 16, 5));
  save_grayscale_png((root / "images" / "c.png").string(), ramp_image(16, 16, 9));
  write_annotations(root,
                    "id\tcx\tcy\tw\th\tangle_deg\n"      // header row is skipped
                    "a\t4.0\t4.0\t4.0\t2.0\t0.0\n"       // box 1 on image a
                    "a\t12.0\t12.0\t4.0\t2.0\t90.0\n"    // box 2 on image a
                    "b\t8.0\t8.0\t6.0\t6.0\t45.0\n");    // single box on image b

  DatasetSplit loaded = load_dataset(root.string(), DatasetLayout::kRotatedBoxIndex, 4);
  REQUIRE(loaded.positives.size() == 2);
  REQUIRE(loaded.negatives.size() == 1);
  CHECK(loaded.negatives[0].label == 0);
  CHECK_FALSE(loaded.negatives[0].mask.any());

  // image a carries the union of its two boxes
  const auto& a = loaded.positives[0];
  const RotatedBox b1{4.0, 4.0, 4.0, 2.0, 0.0};
  const RotatedBox b2{12.0, 12.0, 4.0, 2.0, 90.0};
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const bool want = inside_box(b1, x, y) || inside_box(b2, x, y);
      CHECK(a.mask.at(y, x) == (want ? 1 : 0));
    }
  fs::remove_all(root);
}

TEST_CASE("rotated-box annotation errors are reported with their row") {
  const DatasetLayout layout = DatasetLayout::kRotatedBoxIndex;

  SUBCASE("malformed row") {
    const fs::path root = scratch_dir("rbmal");
    fs::create_directories(root / "images");
    save_grayscale_png((root / "images" / "a.png").string(), ramp_image(16, 16, 0));
    write_annotations(root, "a\t4.0\t4.0\tnotanumber\t2.0\t0.0\n");
    CHECK_THROWS_WITH_AS(load_dataset(root.string(), layout, 1),
                         doctest::Contains("malformed annotation row"), DataError);
    fs::remove_all(root);
  }
  SUBCASE("non-positive box size") {
    const fs::path root = scratch_dir("rbneg");
    fs::create_directories(root / "images");
    save_grayscale_png((root / "images" / "a.png").string(), ramp_image(16, 16, 0));
    write_annotations(root, "a\t4.0\t4.0\t0.0\t2.0\t0.0\n");
    CHECK_THROWS_WITH_AS(load_dataset(root.string(), layout, 1),
                         doctest::Contains("non-positive box size"), DataError);
    fs::remove_all(root);
  }
  SUBCASE("annotation for a missing image") {
    const fs::path root = scratch_dir("rbmiss");
    fs::create_directories(root / "images");
    save_grayscale_png((root / "images" / "a.png").string(), ramp_image(16, 16, 0));
    write_annotations(root, "ghost\t4.0\t4.0\t4.0\t2.0\t0.0\n");
    CHECK_THROWS_WITH_AS(load_dataset(root.string(), layout, 1),
                         doctest::Contains("missing image"), DataError);
    fs::remove_all(root);
  }
  SUBCASE("box fully outside the image rasterizes to nothing") {
    const fs::path root = scratch_dir("rbempty");
    fs::create_directories(root / "images");
    save_grayscale_png((root / "images" / "a.png").string(), ramp_image(16, 16, 0));
    write_annotations(root, "a\t100.0\t100.0\t4.0\t2.0\t0.0\n");
    CHECK_THROWS_WITH_AS(load_dataset(root.string(), layout, 1),
                         doctest::Contains("empty mask"), DataError);
    fs::remove_all(root);
  }
  SUBCASE("no annotations at all") {
    const fs::path root = scratch_dir("rbnone");
    fs::create_directories(root / "images");
    save_grayscale_png((root / "images" / "a.png").string(), ramp_image(16, 16, 0));
    write_annotations(root, "");
    CHECK_THROWS_WITH_AS(load_dataset(root.string(), layout, 1),
                         doctest::Contains("training impossible"), DataError);
    fs::remove_all(root);
  }
}

TEST_CASE("axis-aligned box rasterization covers the expected pixels") {
  // center (4,4), 4 wide, 2 tall: pixel centers x+0.5 in (2,6), y+0.5 in (3,5)
  const RotatedBox box{4.0, 4.0, 4.0, 2.0, 0.0};
  BinaryMask m = rasterize_rotated_box(box, 8, 8);
  std::set<std::pair<int, int>> expect;
  for (int y : {3, 4})
    for (int x : {2, 3, 4, 5}) expect.insert({y, x});
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      CHECK(m.at(y, x) == (expect.count({y, x}) ? 1 : 0));
}

TEST_CASE("rotating a box by 90 degrees swaps its extents") {
  const RotatedBox wide{8.0, 8.0, 6.0, 2.0, 0.0};
  const RotatedBox tall{8.0, 8.0, 2.0, 6.0, 0.0};
  const RotatedBox wide90{8.0, 8.0, 6.0, 2.0, 90.0};
  BinaryMask a = rasterize_rotated_box(tall, 16, 16);
  BinaryMask b = rasterize_rotated_box(wide90, 16, 16);
  REQUIRE(a.v.size() == b.v.size());
  CHECK(a.v == b.v);
  // and a half turn changes nothing
  const RotatedBox wide180{8.0, 8.0, 6.0, 2.0, 180.0};
  BinaryMask c = rasterize_rotated_box(wide, 16, 16);
  BinaryMask d = rasterize_rotated_box(wide180, 16, 16);
  CHECK(c.v == d.v);
}

TEST_CASE("diagonal boxes agree with an independent membership test") {
  const RotatedBox box{8.0, 8.0, 6.0, 6.0, 45.0};
  BinaryMask m = rasterize_rotated_box(box, 16, 16);
  int count = 0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      CHECK(m.at(y, x) == (inside_box(box, x, y) ? 1 : 0));
      count += m.at(y, x);
    }
  // pixel-center quantization keeps the count near the true area of 36
  CHECK(std::abs(count - 36) <= 12);
  CHECK(count > 0);

  // randomized boxes, same oracle
  Rng rng(404);
  for (int t = 0; t < 25; ++t) {
    const RotatedBox r{2.0 + 12.0 * rng.uniform01(), 2.0 + 12.0 * rng.uniform01(),
                       1.0 + 6.0 * rng.uniform01(), 1.0 + 6.0 * rng.uniform01(),
                       180.0 * rng.uniform01()};
    BinaryMask rm = rasterize_rotated_box(r, 16, 16);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) CHECK(rm.at(y, x) == (inside_box(r, x, y) ? 1 : 0));
  }
}

TEST_CASE("rasterize_boxes unions and validates") {
  const RotatedBox b1{4.0, 4.0, 4.0, 2.0, 0.0};
  const RotatedBox b2{12.0, 12.0, 4.0, 2.0, 0.0};
  BinaryMask u = rasterize_boxes({b1, b2}, 16, 16);
  BinaryMask m1 = rasterize_rotated_box(b1, 16, 16);
  BinaryMask m2 = rasterize_rotated_box(b2, 16, 16);
  for (size_t i = 0; i < u.v.size(); ++i) CHECK(u.v[i] == ((m1.v[i] || m2.v[i]) ? 1 : 0));

  const RotatedBox bad{4.0, 4.0, -1.0, 2.0, 0.0};
  CHECK_THROWS_AS(rasterize_rotated_box(bad, 16, 16), DataError);
}

TEST_CASE("mask downsampling marks any covered block") {
  BinaryMask m(8, 8);
  m.v[0 * 8 + 0] = 1;  // block (0,0)
  m.v[5 * 8 + 6] = 1;  // block (1,1) with factor 4
  BinaryMask d = downsample_mask(m, 4);
  REQUIRE(d.h == 2);
  REQUIRE(d.w == 2);
  CHECK(d.at(0, 0) == 1);
  CHECK(d.at(0, 1) == 0);
  CHECK(d.at(1, 0) == 0);
  CHECK(d.at(1, 1) == 1);

  SUBCASE("random masks match the per-block any() oracle") {
    Rng rng(88);
    for (int t = 0; t < 20; ++t) {
      BinaryMask r(32, 32);
      for (auto& v : r.v) v = rng.uniform01() < 0.1 ? 1 : 0;
      BinaryMask rd = downsample_mask(r, 8);
      REQUIRE(rd.h == 4);
      for (int by = 0; by < 4; ++by)
        for (int bx = 0; bx < 4; ++bx) {
          int any = 0;
          for (int y = by * 8; y < (by + 1) * 8; ++y)
            for (int x = bx * 8; x < (bx + 1) * 8; ++x) any |= r.at(y, x);
          CHECK(rd.at(by, bx) == any);
        }
    }
  }
  SUBCASE("indivisible dimensions are rejected") {
    BinaryMask odd(6, 8);
    CHECK_THROWS_AS(downsample_mask(odd, 4), ShapeError);
  }
}

TEST_CASE("padding grows images to the next multiple and keeps content") {
  TensorF image = ramp_image(10, 13, 0);
  BinaryMask mask = checker_mask(10, 13);
  const TensorF orig_image = image;
  const BinaryMask orig_mask = mask;

  pad_to_multiple(image, mask, 8);
  REQUIRE(image.height() == 16);
  REQUIRE(image.width() == 16);
  REQUIRE(mask.h == 16);
  REQUIRE(mask.w == 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const bool in = y < 10 && x < 13;
      CHECK(image.plane(0)[static_cast<size_t>(y) * 16 + x] ==
            (in ? orig_image.plane(0)[static_cast<size_t>(y) * 13 + x] : 0.0f));
      CHECK(mask.at(y, x) == (in ? orig_mask.at(y, x) : 0));
    }

  // already aligned: untouched
  TensorF aligned = ramp_image(16, 16, 2);
  BinaryMask amask = checker_mask(16, 16);
  const TensorF acopy = aligned;
  pad_to_multiple(aligned, amask, 8);
  REQUIRE(aligned.height() == 16);
  REQUIRE(aligned.width() == 16);
  for (int k = 0; k < 256; ++k) CHECK(aligned[k] == acopy[k]);
}

TEST_CASE("synthetic datasets are deterministic in the seed") {
  SynthSpec spec;
  spec.n_pos = 4;
  spec.n_neg = 3;
  spec.size = 64;
  spec.defect = DefectKind::kBlob;

  DatasetSplit a = synth_generate(spec, 99);
  DatasetSplit b = synth_generate(spec, 99);
  DatasetSplit c = synth_generate(spec, 100);
  REQUIRE(a.positives.size() == 4);
  REQUIRE(a.negatives.size() == 3);
  REQUIRE(b.positives.size() == 4);

  bool identical = true, differs = false;
  for (size_t i = 0; i < 4; ++i) {
    for (int k = 0; k < 64 * 64; ++k) {
      if (a.positives[i].image[k] != b.positives[i].image[k]) identical = false;
      if (a.positives[i].image[k] != c.positives[i].image[k]) differs = true;
    }
    if (a.positives[i].mask.v != b.positives[i].mask.v) identical = false;
  }
  CHECK(identical);
  CHECK(differs);
  CHECK(a.positives[0].id == "pos_0000");
  CHECK(a.negatives[2].id == "neg_0002");
}

TEST_CASE("synthetic defects exist, stay in range, and respect labels") {
  for (DefectKind kind : {DefectKind::kBlob, DefectKind::kScratch}) {
    for (uint64_t seed = 0; seed < 25; ++seed) {
      SynthSpec spec;
      spec.n_pos = 2;
      spec.n_neg = 1;
      spec.size = 64;
      spec.defect = kind;
      DatasetSplit d = synth_generate(spec, seed);
      for (const auto& s : d.positives) {
        CHECK(s.label == 1);
        CHECK(s.mask.any());
        REQUIRE(s.mask.h == 64);
        for (int k = 0; k < 64 * 64; ++k) {
          CHECK(s.image[k] >= 0.0f);
          CHECK(s.image[k] <= 1.0f);
        }
        if (kind == DefectKind::kBlob) {
          // blob centers keep a margin, so the mask stays off the border
          for (int x = 0; x < 64; ++x) {
            CHECK(s.mask.at(0, x) == 0);
            CHECK(s.mask.at(63, x) == 0);
          }
          for (int y = 0; y < 64; ++y) {
            CHECK(s.mask.at(y, 0) == 0);
            CHECK(s.mask.at(y, 63) == 0);
          }
        }
      }
      for (const auto& s : d.negatives) {
        CHECK(s.label == 0);
        CHECK_FALSE(s.mask.any());
      }
    }
  }
}

TEST_CASE("synthetic generation rejects bad specs") {
  SynthSpec spec;
  spec.size = 16;
  CHECK_THROWS_AS(synth_generate(spec, 1), DataError);
  spec.size = 64;
  spec.n_pos = -1;
  CHECK_THROWS_AS(synth_generate(spec, 1), DataError);

  SynthSpec empty;
  empty.n_pos = 0;
  empty.n_neg = 2;
  empty.size = 64;
  DatasetSplit d = synth_generate(empty, 1);
  CHECK(d.positives.empty());
  CHECK(d.negatives.size() == 2);
}

TEST_CASE("dataset index spans both lists") {
  DatasetSplit split;
  split.positives.push_back(make_sample("p0", 8, 8, 1, 0));
  split.negatives.push_back(make_sample("n0", 8, 8, 0, 1));
  auto index = build_index(split);
  REQUIRE(index.size() == 2);
  CHECK(index.at("p0")->label == 1);
  CHECK(index.at("n0")->label == 0);
}

TEST_CASE("layout names parse or fail by name") {
  CHECK(parse_layout("mask_folders") == DatasetLayout::kMaskFolders);
  CHECK(parse_layout("rotated_box_index") == DatasetLayout::kRotatedBoxIndex);
  CHECK_THROWS_WITH_AS(parse_layout("bogus"), doctest::Contains("unknown dataset layout"),
                       DataError);
}
