// Copyright 2026 The lpdr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "lpdr/image.hpp"
#include "lpdr/image_ops.hpp"
#include "lpdr/network.hpp"
#include "lpdr/rng.hpp"
#include "lpdr/tensor.hpp"

namespace lpdr {

struct CharBlock {
  Rect box;             // within the plate crop
  int pixel_count = 0;
  enum class Origin { Direct, Split, Merged } origin = Origin::Direct;
};

struct CharPrediction {
  std::vector<float> probs;  // 36 classes
  int cls = -1;
  float confidence = 0.0f;
};

struct PlateReading {
  std::string text;
  std::vector<float> confidences;  // one per character
  bool unreadable = false;
  Tensor step_probs;  // sequence mode only: per-step 37-class distributions
};

struct SegRecConfig {
  int max_chars = 7;  // the country cap N
  double polarity_margin = 1.5;
  double split_width_ratio = 1.6;  // split blocks wider than ratio * median
  double merge_gap_ratio = 0.15;   // merge gaps below ratio * median
  int tta_count = 5;
  double contrast_saturate = 0.01;
  double min_height_frac = 0.3;  // drop blocks shorter than this * plate height
  NiblackConfig niblack{15, -0.2, 3};
  std::uint64_t seed = 1;
};

// Binarize, label components, drop implausible blocks, then repair with
// width-based splitting and gap-based merging. Blocks come back sorted left
// to right; an empty result means the plate is unreadable.
std::vector<CharBlock> segment_plate(const GrayImage& plate, const SegRecConfig& cfg);

// Averaged softmax over tta_count crops jittered around the block (the first
// crop is centered). Crop is resized to the net input beforehand.
CharPrediction classify_char(const Network& net, const GrayImage& crop, int tta_count,
                             Rng& rng);

// Same contract with a (grayscale, LBP) two-channel input.
CharPrediction classify_char_lbp(const Network& net_lbp, const GrayImage& crop,
                                 int tta_count, Rng& rng);

// Element-wise mean of the two probability vectors.
CharPrediction ensemble(const CharPrediction& a, const CharPrediction& b);

// Full baseline path: segment, classify every block (ensembling when the LBP
// net is supplied), keep the max_chars highest-confidence blocks in reading
// order.
PlateReading read_plate_segmented(const GrayImage& plate, const Network& net,
                                  const Network* net_lbp, const SegRecConfig& cfg);

}  // namespace lpdr
