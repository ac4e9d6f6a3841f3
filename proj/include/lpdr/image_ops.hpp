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

#include <cstdint>
#include <vector>

#include "lpdr/image.hpp"

namespace lpdr {

// Connected-component labeling result. Labels are 1..count in raster order of
// first occurrence; 0 is background.
struct ComponentLabeling {
  int width = 0, height = 0;
  std::vector<std::int32_t> labels;
  int count = 0;
  std::vector<Rect> boxes;            // per component, tight
  std::vector<int> pixel_counts;      // per component
};

// Linear remap clamping the lowest/highest `saturate_fraction` of pixels to 0
// and 255. A constant image is returned unchanged.
GrayImage contrast_stretch(const GrayImage& img, double saturate_fraction);

// |Gx| of the Sobel operator (responds to vertical edges), clamped to u8.
// Borders are reflected. Requires width,height >= 3.
GrayImage sobel_vertical(const GrayImage& img);

enum class Axis {
  Rows,  // one sum per row (the paper's "horizontal projection")
  Cols,  // one sum per column
};
std::vector<long long> project(const GrayImage& img, Axis axis);
std::vector<long long> project(const BinaryImage& img, Axis axis);

struct NiblackConfig {
  int window = 15;
  double k = -0.2;
  int filter_window = 3;  // ordered-statistic filter on the threshold surfaces
};

// Non-linear Niblack: foreground iff I > T with
//   T = ( maxfilt(m + k*s) + minfilt(m - k*s) ) / 2,
// m,s the windowed mean/stddev (reflected borders) and min/max filters the
// two ordered-statistic passes over the background/foreground estimates.
BinaryImage niblack_binarize(const GrayImage& img, const NiblackConfig& cfg);

// Inverts the image when white pixels outnumber black by more than `margin`
// (foreground is assumed to be the minority). Idempotent for margin > 1.
BinaryImage choose_polarity(const BinaryImage& bin, double margin = 1.5);

ComponentLabeling connected_components(const BinaryImage& bin, int connectivity);

// 8-bit local binary pattern, bit b set iff neighbor_b >= center; neighbors
// clockwise from the top-left, reflected borders.
GrayImage lbp_map(const GrayImage& img);

// Rotate about the image center by `degrees` (positive = counterclockwise in
// y-down coordinates), bilinear resampling, `fill` outside.
GrayImage rotate_image(const GrayImage& img, double degrees, std::uint8_t fill);

struct DeskewResult {
  GrayImage image;
  double angle_degrees = 0.0;  // detected dominant near-horizontal direction
};

// Hough vote over near-horizontal lines in the edge map within
// [-angle_range, +angle_range] degrees; rotates by the negative of the
// detected angle. Returns the input and angle 0 when no line is found.
DeskewResult hough_deskew(const GrayImage& img, double angle_range);

GrayImage resize_bilinear(const GrayImage& img, int new_w, int new_h);

GrayImage pad(const GrayImage& img, int left, int right, int top, int bottom,
              std::uint8_t fill);

// Clamps the rectangle to the image; throws if nothing remains.
GrayImage crop(const GrayImage& img, const Rect& r);

}  // namespace lpdr
