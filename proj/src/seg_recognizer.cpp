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

#include "lpdr/seg_recognizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lpdr/data_synth.hpp"

namespace lpdr {

namespace {

double median_width(const std::vector<CharBlock>& blocks) {
  std::vector<int> widths;
  for (const auto& b : blocks) widths.push_back(b.box.w);
  std::sort(widths.begin(), widths.end());
  std::size_t n = widths.size();
  if (n == 0) return 0.0;
  return n % 2 ? widths[n / 2] : 0.5 * (widths[n / 2 - 1] + widths[n / 2]);
}

}  // namespace

namespace {

// segmentation on an already contrast-stretched plate; the public entry point
// stretches first and the reader reuses the stretched image for its crops
std::vector<CharBlock> segment_stretched(const GrayImage& stretched,
                                         const SegRecConfig& cfg);

}  // namespace

std::vector<CharBlock> segment_plate(const GrayImage& plate, const SegRecConfig& cfg) {
  if (plate.width < cfg.niblack.window || plate.height < cfg.niblack.window) return {};
  return segment_stretched(contrast_stretch(plate, cfg.contrast_saturate), cfg);
}

namespace {

std::vector<CharBlock> segment_stretched(const GrayImage& plate, const SegRecConfig& cfg) {
  BinaryImage bin = niblack_binarize(plate, cfg.niblack);
  bin = choose_polarity(bin, cfg.polarity_margin);
  ComponentLabeling cl = connected_components(bin, 8);

  std::vector<CharBlock> blocks;
  const int min_h = static_cast<int>(std::lround(cfg.min_height_frac * plate.height));
  for (int i = 0; i < cl.count; ++i) {
    const Rect& b = cl.boxes[i];
    if (b.h < min_h) continue;
    bool frame = b.x == 0 && b.y == 0 && b.x2() == plate.width && b.y2() == plate.height;
    if (frame) continue;  // the plate border
    if (b.w > plate.width * 3 / 4 && b.h > plate.height * 3 / 4) continue;  // frame remnant
    blocks.push_back({b, cl.pixel_counts[i], CharBlock::Origin::Direct});
  }
  if (blocks.empty()) return blocks;
  std::sort(blocks.begin(), blocks.end(),
            [](const CharBlock& a, const CharBlock& b) { return a.box.x < b.box.x; });

  // split over-wide blocks at the weakest column of their vertical projection
  for (int pass = 0; pass < 4; ++pass) {
    double med = median_width(blocks);
    bool changed = false;
    std::vector<CharBlock> next;
    for (const auto& blk : blocks) {
      if (blk.box.w <= cfg.split_width_ratio * med || blk.box.w < 4) {
        next.push_back(blk);
        continue;
      }
      // column sums of this component's own pixels
      std::vector<int> proj(blk.box.w, 0);
      for (int y = blk.box.y; y < blk.box.y2(); ++y)
        for (int x = blk.box.x; x < blk.box.x2(); ++x)
          if (bin.at(x, y)) ++proj[x - blk.box.x];
      int lo = blk.box.w / 4, hi = 3 * blk.box.w / 4;
      int cut = lo;
      for (int x = lo; x < hi; ++x)
        if (proj[x] < proj[cut]) cut = x;
      CharBlock left{{blk.box.x, blk.box.y, cut, blk.box.h}, 0, CharBlock::Origin::Split};
      CharBlock right{{blk.box.x + cut, blk.box.y, blk.box.w - cut, blk.box.h}, 0,
                      CharBlock::Origin::Split};
      for (int x = 0; x < blk.box.w; ++x)
        (x < cut ? left.pixel_count : right.pixel_count) += proj[x];
      next.push_back(left);
      next.push_back(right);
      changed = true;
    }
    blocks = std::move(next);
    if (!changed) break;
  }

  // merge fragments separated by small gaps when the union stays glyph-sized
  for (int pass = 0; pass < 4; ++pass) {
    double med = median_width(blocks);
    bool changed = false;
    std::vector<CharBlock> next;
    for (const auto& blk : blocks) {
      if (!next.empty()) {
        CharBlock& prev = next.back();
        int gap = blk.box.x - prev.box.x2();
        int joint_w = blk.box.x2() - prev.box.x;
        if (gap >= 0 && gap < cfg.merge_gap_ratio * med && joint_w <= med) {
          int y0 = std::min(prev.box.y, blk.box.y);
          int y1 = std::max(prev.box.y2(), blk.box.y2());
          prev.box = {prev.box.x, y0, joint_w, y1 - y0};
          prev.pixel_count += blk.pixel_count;
          prev.origin = CharBlock::Origin::Merged;
          changed = true;
          continue;
        }
      }
      next.push_back(blk);
    }
    blocks = std::move(next);
    if (!changed) break;
  }

  std::sort(blocks.begin(), blocks.end(),
            [](const CharBlock& a, const CharBlock& b) { return a.box.x < b.box.x; });
  return blocks;
}

}  // namespace

namespace {

CharPrediction classify_common(const Network& net, const GrayImage& crop,
                               int tta_count, Rng& rng, bool with_lbp) {
  Shape3 in = net.input_shape();
  const int n = std::max(1, tta_count);
  std::vector<double> acc(net.class_count(), 0.0);
  for (int t = 0; t < n; ++t) {
    GrayImage patch = crop;
    if (t > 0) {
      // re-crop around the block with a small random offset
      int dx = rng.uniform_int(-std::max(1, crop.width / 12),
                               std::max(1, crop.width / 12));
      int dy = rng.uniform_int(-std::max(1, crop.height / 12),
                               std::max(1, crop.height / 12));
      GrayImage padded = pad(crop, std::abs(dx) + 1, std::abs(dx) + 1,
                             std::abs(dy) + 1, std::abs(dy) + 1, crop.at(0, 0));
      patch = lpdr::crop(padded, {std::abs(dx) + 1 + dx, std::abs(dy) + 1 + dy,
                                  crop.width, crop.height});
    }
    GrayImage resized = resize_bilinear(patch, in.w, in.h);
    Tensor input({1, in.c, in.h, in.w});
    for (std::size_t i = 0; i < resized.pixels.size(); ++i)
      input[i] = resized.pixels[i];
    if (with_lbp) {
      GrayImage lbp = lbp_map(resized);
      for (std::size_t i = 0; i < lbp.pixels.size(); ++i)
        input[resized.pixels.size() + i] = lbp.pixels[i];
    }
    Tensor probs = net.forward(input);
    for (int k = 0; k < net.class_count(); ++k) acc[k] += probs[k];
  }
  CharPrediction pred;
  pred.probs.resize(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k)
    pred.probs[k] = static_cast<float>(acc[k] / n);
  pred.cls = 0;
  for (std::size_t k = 1; k < pred.probs.size(); ++k)
    if (pred.probs[k] > pred.probs[pred.cls]) pred.cls = static_cast<int>(k);
  pred.confidence = pred.probs[pred.cls];
  return pred;
}

}  // namespace

CharPrediction classify_char(const Network& net, const GrayImage& crop, int tta_count,
                             Rng& rng) {
  return classify_common(net, crop, tta_count, rng, false);
}

CharPrediction classify_char_lbp(const Network& net_lbp, const GrayImage& crop,
                                 int tta_count, Rng& rng) {
  if (net_lbp.input_shape().c != 2)
    throw std::invalid_argument("classify_char_lbp: net must take 2 channels");
  return classify_common(net_lbp, crop, tta_count, rng, true);
}

CharPrediction ensemble(const CharPrediction& a, const CharPrediction& b) {
  if (a.probs.size() != b.probs.size())
    throw std::invalid_argument("ensemble: class count mismatch");
  CharPrediction out;
  out.probs.resize(a.probs.size());
  for (std::size_t k = 0; k < a.probs.size(); ++k)
    out.probs[k] = 0.5f * (a.probs[k] + b.probs[k]);
  out.cls = 0;
  for (std::size_t k = 1; k < out.probs.size(); ++k)
    if (out.probs[k] > out.probs[out.cls]) out.cls = static_cast<int>(k);
  out.confidence = out.probs[out.cls];
  return out;
}

PlateReading read_plate_segmented(const GrayImage& plate, const Network& net,
                                  const Network* net_lbp, const SegRecConfig& cfg) {
  PlateReading reading;
  if (plate.width < cfg.niblack.window || plate.height < cfg.niblack.window) {
    reading.unreadable = true;
    return reading;
  }
  // classifier crops come from the same stretched image the segmentation saw,
  // so readings are invariant to intensity shifts that the stretch removes
  GrayImage stretched = contrast_stretch(plate, cfg.contrast_saturate);
  std::vector<CharBlock> blocks = segment_stretched(stretched, cfg);
  if (blocks.empty()) {
    reading.unreadable = true;
    return reading;
  }

  Rng rng(cfg.seed);
  struct Scored {
    int order;
    CharPrediction pred;
  };
  std::vector<Scored> scored;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    // crop with one pixel of context so strokes are not flush with the edge
    Rect r{blocks[i].box.x - 1, blocks[i].box.y - 1, blocks[i].box.w + 2,
           blocks[i].box.h + 2};
    GrayImage patch = crop(stretched, r);
    Rng block_rng = rng.derive("tta", i);
    CharPrediction pred = classify_char(net, patch, cfg.tta_count, block_rng);
    if (net_lbp) {
      Rng lbp_rng = rng.derive("tta-lbp", i);
      pred = ensemble(pred, classify_char_lbp(*net_lbp, patch, cfg.tta_count, lbp_rng));
    }
    scored.push_back({static_cast<int>(i), pred});
  }

  if (static_cast<int>(scored.size()) > cfg.max_chars) {
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
      return a.pred.confidence > b.pred.confidence;
    });
    scored.resize(cfg.max_chars);
    std::sort(scored.begin(), scored.end(),
              [](const Scored& a, const Scored& b) { return a.order < b.order; });
  }

  for (const auto& s : scored) {
    reading.text.push_back(class_to_char(s.pred.cls));
    reading.confidences.push_back(s.pred.confidence);
  }
  return reading;
}

}  // namespace lpdr
