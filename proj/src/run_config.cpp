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

#include "lpdr/run_config.hpp"

#include <fstream>
#include <stdexcept>

namespace lpdr {

namespace {

const std::map<std::string, std::string>& default_entries() {
  static const std::map<std::string, std::string> defaults = {
      {"seed", "1"},
      {"jobs", "1"},

      // dataset synthesis (desk-scale defaults)
      {"synth.chars", "20000"},
      {"synth.negatives", "50000"},
      {"synth.plates", "5000"},
      {"synth.plate_negatives", "6000"},
      {"synth.scenes", "200"},
      {"synth.scene_width", "320"},
      {"synth.scene_height", "240"},
      {"synth.scene_plates_min", "1"},
      {"synth.scene_plates_max", "2"},
      {"synth.min_char_height", "26"},
      {"synth.max_char_height", "48"},
      {"synth.min_label_len", "5"},
      {"synth.max_label_len", "7"},
      {"synth.subtitle_prob", "0.25"},
      {"synth.noise_sigma", "6"},
      {"synth.lighting_amp", "25"},
      {"synth.rotate_deg", "4"},
      {"synth.shear", "0.06"},
      {"synth.translate_px", "2"},

      // classifier training
      {"train.lr", "0.02"},
      {"train.momentum", "0.9"},
      {"train.epochs", "6"},
      {"train.batch", "64"},
      {"train.decay", "0.5"},
      {"train.patience", "3"},
      {"train.val_frac", "0.1"},
      {"train.char37.max_chars", "0"},      // 0 = use everything synthesized
      {"train.char37.max_negatives", "0"},
      {"train.char36.max_chars", "0"},
      {"train.char36.epochs", "0"},         // 0 = train.epochs
      {"train.plate2.max_plates", "0"},
      {"train.plate2.max_negatives", "0"},
      {"train.bootstrap_rounds", "0"},
      {"train.bootstrap_epochs", "2"},

      // BLSTM + PCA
      {"train.blstm.hidden", "128"},
      {"train.blstm.epochs", "40"},
      {"train.blstm.lr", "0.02"},
      {"train.blstm.momentum", "0.9"},
      {"train.blstm.batch", "8"},
      {"train.blstm.grad_clip", "5.0"},
      {"train.blstm.patience", "5"},
      {"train.blstm.max_plates", "0"},
      {"train.pca.dim", "256"},
      {"train.pca.samples", "2000"},

      // detector
      {"detector.scales", "12"},
      {"detector.scale_ratio", "0.85"},
      {"detector.pad", "12"},
      {"detector.nms_delta", "2"},
      {"detector.rlsa_multiplier", "1.0"},
      {"detector.peak_threshold", "0.5"},
      {"detector.min_height", "12"},
      {"detector.max_height_frac", "0.6667"},
      {"detector.min_aspect", "1.5"},
      {"detector.max_aspect", "8.0"},
      {"detector.box_nms_overlap", "0.5"},
      {"detector.refine_edge_threshold", "96"},
      {"detector.row_band_threshold", "0.3"},
      {"detector.col_band_threshold", "0.15"},
      {"detector.enlarge_frac", "0.2"},
      {"detector.refine_margin_x", "0.04"},
      {"detector.refine_margin_y", "0.35"},
      {"detector.verify_threshold", "0.5"},
      {"detector.jitter_count", "5"},
      {"detector.jitter_frac", "0.06"},

      // segmentation-based recognizer
      {"segrec.max_chars", "7"},
      {"segrec.polarity_margin", "1.5"},
      {"segrec.split_ratio", "1.6"},
      {"segrec.merge_ratio", "0.15"},
      {"segrec.tta", "5"},
      {"segrec.contrast_saturate", "0.01"},
      {"segrec.min_height_frac", "0.3"},
      {"segrec.niblack_window", "15"},
      {"segrec.niblack_k", "-0.2"},

      // sequence recognizer
      {"seqrec.pad_lr", "10"},
      {"seqrec.pca_dim", "256"},

      // evaluation
      {"eval.overlap_threshold", "0.5"},
  };
  return defaults;
}

}  // namespace

RunConfig::RunConfig() : values_(default_entries()) {}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::invalid_argument("unknown config key: " + key);
  if (value.empty()) throw std::invalid_argument("empty value for config key: " + key);
  it->second = value;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      auto b = s.find_first_not_of(" \t");
      auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    try {
      set(key, value);
    } catch (const std::exception& ex) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* type) {
  throw std::invalid_argument("config key " + key + " = '" + value + "' is not " + type);
}

}  // namespace

int RunConfig::get_int(const std::string& key) const {
  const std::string& v = get_string(key);
  try {
    std::size_t pos = 0;
    int out = std::stoi(v, &pos);
    if (pos != v.size()) bad_value(key, v, "an integer");
    return out;
  } catch (const std::logic_error&) {
    bad_value(key, v, "an integer");
  }
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get_string(key);
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) bad_value(key, v, "a number");
    return out;
  } catch (const std::logic_error&) {
    bad_value(key, v, "a number");
  }
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& v = get_string(key);
  try {
    std::size_t pos = 0;
    std::uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) bad_value(key, v, "an unsigned integer");
    return out;
  } catch (const std::logic_error&) {
    bad_value(key, v, "an unsigned integer");
  }
}

std::string RunConfig::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::logic_error("config key not registered: " + key);
  return it->second;
}

}  // namespace lpdr
