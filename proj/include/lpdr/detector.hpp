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

#include <vector>

#include "lpdr/image.hpp"
#include "lpdr/network.hpp"
#include "lpdr/rng.hpp"

namespace lpdr {

// Per-location character probability (1 - P(background)) over a padded,
// scaled copy of the input. Grid cell (row, col) is the stride*col,
// stride*row window top-left on that padded image.
struct SaliencyMap {
  int grid_w = 0, grid_h = 0;
  std::vector<float> values;  // row-major [grid_h][grid_w]
  double scale = 1.0;         // scaled = original * scale
  int stride = 8;
  int pad = 12;
  int window = 24;

  bool empty() const { return values.empty(); }
  float at(int col, int row) const {
    return values[static_cast<std::size_t>(row) * grid_w + col];
  }
  // pixel span of a grid-cell range, mapped back to original coordinates
  Rect cells_to_original(int row0, int row1, int col0, int col1, int img_w,
                         int img_h) const;
};

struct NmsConfig {
  int delta = 2;                 // Eq.-1 width threshold, grid columns
  double rlsa_multiplier = 1.0;  // gap threshold = mean + mult * stddev
  double peak_threshold = 0.5;   // saliency needed to count as a peak
};

struct DetectorConfig {
  int scale_count = 12;
  double scale_ratio = 0.85;
  int pad = 12;
  NmsConfig nms;
  int min_height = 12;
  double max_height_frac = 2.0 / 3.0;
  double min_aspect = 1.5;
  double max_aspect = 8.0;
  double box_nms_overlap = 0.5;   // paper-overlap above this suppresses
  int refine_edge_threshold = 96;  // Sobel magnitude that counts as an edge
  double row_band_threshold = 0.3;
  double col_band_threshold = 0.15;
  double enlarge_frac = 0.2;      // refine pre-enlargement per side
  double refine_margin_x = 0.04;  // margin around the character band as a
  double refine_margin_y = 0.35;  // fraction of the band height, per side
  double verify_threshold = 0.5;
  int jitter_count = 5;
  double jitter_frac = 0.06;
  std::uint64_t seed = 1;
};

// Dense evaluation of the 37-class net over an already scaled and padded
// image; requires the fully-convolutional form (Network::to_fully_convolutional).
// Numerically identical to evaluating each stride-8 window independently.
// Images smaller than the window yield an empty map.
SaliencyMap saliency_map(const Network& fcn37, const GrayImage& padded_scaled,
                         double scale, const DetectorConfig& cfg);

// Eq. 1: keep a value iff it is >= every value closer than `delta` columns.
std::vector<float> row_nms(const std::vector<float>& row, int delta);

// Bridges neighboring peaks whose spacing is below mean + mult * stddev of
// the peak spacings in this row; rows with fewer than two peaks keep only
// the isolated peaks.
std::vector<std::uint8_t> rlsa_link(const std::vector<float>& row_after_nms,
                                    double multiplier);

// Row NMS + RLSA + connected components per scale, mapped back to original
// coordinates; each box scored by the mean saliency inside it.
std::vector<BBox> propose_boxes(const std::vector<SaliencyMap>& maps,
                                const NmsConfig& nms, int img_w, int img_h);

// Geometric constraints, below-mean score elimination, then box-level NMS
// under the paper overlap.
std::vector<BBox> filter_and_nms(std::vector<BBox> boxes, const DetectorConfig& cfg,
                                 int img_w, int img_h);

// Enlarge by 20% per side, find the character band via the vertical-edge
// projections, pad it by the configured margins (clamped to the enlarged
// region). A blank edge response returns the enlarged box unchanged.
BBox refine_box(const GrayImage& img, const BBox& box, const DetectorConfig& cfg);

struct VerifyResult {
  bool accepted = false;
  float score = 0.0f;  // mean plate probability over the jittered crops
};

// Crop resized to the verifier input; first evaluation is the untranslated
// crop, the remaining jitter_count-1 are small random translations.
VerifyResult verify_plate(const Network& plate_net, const GrayImage& img,
                          const BBox& box, const DetectorConfig& cfg, Rng& rng);

// The full cascade. fcn37 must be the fully-convolutional saliency net.
// Deterministic for a fixed (cfg.seed, image_id).
std::vector<BBox> detect(const GrayImage& img, const Network& fcn37,
                         const Network& plate_net, const DetectorConfig& cfg,
                         std::uint64_t image_id);

}  // namespace lpdr
