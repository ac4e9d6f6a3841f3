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
#include "lpdr/network.hpp"
#include "lpdr/rng.hpp"

namespace lpdr {

// 36-class plate alphabet: '0'-'9' are classes 0-9, 'A'-'Z' are 10-35.
constexpr int kAlphabetSize = 36;
char class_to_char(int cls);
int char_to_class(char c);  // -1 when outside the alphabet
std::string labels_to_string(const std::vector<int>& labels);
std::vector<int> string_to_labels(const std::string& s);  // throws on bad chars

// Embedded bitmap glyphs (several styles standing in for plate fonts of
// different countries). Mask is scaled to the requested height.
int glyph_style_count();
BinaryImage render_glyph(int cls, int style, int height);

struct AugmentConfig {
  double translate_px = 0.0;  // max |dx| and |dy|
  double rotate_deg = 0.0;
  double noise_sigma = 0.0;
  double lighting_amp = 0.0;  // max linear shading amplitude, intensity units
  double shear = 0.0;         // max horizontal shear factor
  std::uint64_t seed = 1;
};

// 24x24 character sample for classifier training.
GrayImage synth_char(int cls, const AugmentConfig& cfg);

enum class NegativeKind { Texture, Stripes, Bricks, GeneralText };

GrayImage synth_negative(NegativeKind kind, int w, int h, std::uint64_t seed);

struct PlateSample {
  GrayImage image;
  std::string label;
  std::vector<Rect> char_boxes;  // one per label character, left to right
  bool subtitle = false;
};

struct PlateOptions {
  int char_height = 24;
  bool subtitle = false;        // small text strip touching the characters,
                                // the classic segmentation killer
  int style = -1;               // -1 = random per plate
};

// Bordered plate with the label rendered left to right; 4..8 characters.
PlateSample synth_plate(const std::string& label, const AugmentConfig& cfg,
                        const PlateOptions& opts = {});

struct PlacedPlate {
  Rect box;
  std::string label;
  bool subtitle = false;
  std::vector<Rect> char_boxes;
};

struct SceneTruth {
  GrayImage image;
  std::vector<PlacedPlate> plates;
};

struct SceneOptions {
  int width = 320;
  int height = 240;
  int min_char_height = 26;
  int max_char_height = 48;
  double subtitle_prob = 0.25;
  int min_label_len = 5;
  int max_label_len = 7;
};

// Negative-texture composite with `plate_count` disjoint plates embedded at
// random positions and sizes inside the detector's scale-pyramid coverage.
SceneTruth synth_scene(int plate_count, const AugmentConfig& cfg,
                       const SceneOptions& opts = {});

std::string random_label(Rng& rng, int min_len, int max_len);

struct BootstrapResult {
  std::vector<int> hard_indices;       // pool entries collected over all rounds
  std::vector<double> fp_rates;        // pool false-positive rate before each round
};

// Hard-negative mining: per round, score the pool with the current net, take
// the patches the net calls characters, append them to the training set with
// the background label, retrain.
BootstrapResult bootstrap_negatives(Network& net, const std::vector<GrayImage>& pool,
                                    const Dataset& base_train, const SgdConfig& cfg,
                                    int rounds, int background_label,
                                    double threshold = 0.5);

}  // namespace lpdr
