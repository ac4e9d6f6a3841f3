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

#include "lpdr/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lpdr/eval.hpp"
#include "lpdr/image_ops.hpp"

namespace lpdr {

Rect SaliencyMap::cells_to_original(int row0, int row1, int col0, int col1,
                                    int img_w, int img_h) const {
  // window span on the padded scaled image, then un-pad and un-scale
  double x0 = (stride * col0 - pad) / scale;
  double y0 = (stride * row0 - pad) / scale;
  double x1 = (stride * col1 + window - pad) / scale;
  double y1 = (stride * row1 + window - pad) / scale;
  int xi = std::clamp(static_cast<int>(std::lround(x0)), 0, img_w - 1);
  int yi = std::clamp(static_cast<int>(std::lround(y0)), 0, img_h - 1);
  int xe = std::clamp(static_cast<int>(std::lround(x1)), xi + 1, img_w);
  int ye = std::clamp(static_cast<int>(std::lround(y1)), yi + 1, img_h);
  return {xi, yi, xe - xi, ye - yi};
}

SaliencyMap saliency_map(const Network& fcn37, const GrayImage& padded_scaled,
                         double scale, const DetectorConfig& cfg) {
  SaliencyMap map;
  map.scale = scale;
  map.pad = cfg.pad;
  if (padded_scaled.width < 24 || padded_scaled.height < 24) return map;

  Tensor input({1, 1, padded_scaled.height, padded_scaled.width});
  for (std::size_t i = 0; i < padded_scaled.pixels.size(); ++i)
    input[i] = padded_scaled.pixels[i];
  Tensor probs = fcn37.forward(input);
  const int K = probs.dim(1);
  map.grid_h = probs.dim(2);
  map.grid_w = probs.dim(3);
  map.values.resize(static_cast<std::size_t>(map.grid_h) * map.grid_w);
  const int background = K - 1;
  const std::size_t spatial = static_cast<std::size_t>(map.grid_h) * map.grid_w;
  for (std::size_t i = 0; i < spatial; ++i)
    map.values[i] = 1.0f - probs[static_cast<std::size_t>(background) * spatial + i];
  return map;
}

std::vector<float> row_nms(const std::vector<float>& row, int delta) {
  if (delta < 1) throw std::invalid_argument("row_nms: delta must be >= 1");
  const int n = static_cast<int>(row.size());
  std::vector<float> out(row.size(), 0.0f);
  for (int x = 0; x < n; ++x) {
    bool keep = true;
    for (int x2 = std::max(0, x - delta + 1); x2 < std::min(n, x + delta); ++x2) {
      if (row[x2] > row[x]) {
        keep = false;
        break;
      }
    }
    if (keep) out[x] = row[x];
  }
  return out;
}

std::vector<std::uint8_t> rlsa_link(const std::vector<float>& row, double multiplier) {
  std::vector<std::uint8_t> mask(row.size(), 0);
  std::vector<int> peaks;
  for (int x = 0; x < static_cast<int>(row.size()); ++x)
    if (row[x] > 0.0f) {
      peaks.push_back(x);
      mask[x] = 1;
    }
  if (peaks.size() < 2) return mask;

  double mean = 0.0;
  std::vector<int> gaps;
  for (std::size_t i = 1; i < peaks.size(); ++i) {
    gaps.push_back(peaks[i] - peaks[i - 1]);
    mean += gaps.back();
  }
  mean /= gaps.size();
  double var = 0.0;
  for (int g : gaps) var += (g - mean) * (g - mean);
  double threshold = mean + multiplier * std::sqrt(var / gaps.size());

  for (std::size_t i = 1; i < peaks.size(); ++i)
    if (peaks[i] - peaks[i - 1] < threshold)
      for (int x = peaks[i - 1]; x <= peaks[i]; ++x) mask[x] = 1;
  return mask;
}

std::vector<BBox> propose_boxes(const std::vector<SaliencyMap>& maps,
                                const NmsConfig& nms, int img_w, int img_h) {
  std::vector<BBox> boxes;
  for (const auto& map : maps) {
    if (map.empty()) continue;
    BinaryImage linked(map.grid_w, map.grid_h);
    for (int r = 0; r < map.grid_h; ++r) {
      std::vector<float> row(map.grid_w);
      for (int c = 0; c < map.grid_w; ++c) {
        float v = map.at(c, r);
        row[c] = v >= nms.peak_threshold ? v : 0.0f;  // ignore background noise
      }
      row = row_nms(row, nms.delta);
      auto mask = rlsa_link(row, nms.rlsa_multiplier);
      for (int c = 0; c < map.grid_w; ++c) linked.at(c, r) = mask[c];
    }
    ComponentLabeling cl = connected_components(linked, 8);
    for (int i = 0; i < cl.count; ++i) {
      const Rect& cells = cl.boxes[i];
      Rect box = map.cells_to_original(cells.y, cells.y + cells.h - 1, cells.x,
                                       cells.x + cells.w - 1, img_w, img_h);
      double sum = 0.0;
      int n = 0;
      for (int r = cells.y; r < cells.y + cells.h; ++r)
        for (int c = cells.x; c < cells.x + cells.w; ++c, ++n) sum += map.at(c, r);
      boxes.push_back(BBox::of(box, static_cast<float>(sum / std::max(1, n))));
    }
  }
  return boxes;
}

namespace {

bool passes_geometry(const BBox& b, const DetectorConfig& cfg, int img_h) {
  if (b.h < cfg.min_height) return false;
  if (b.h > cfg.max_height_frac * img_h) return false;
  double aspect = static_cast<double>(b.w) / b.h;
  return aspect >= cfg.min_aspect && aspect <= cfg.max_aspect;
}

std::vector<BBox> overlap_nms(std::vector<BBox> boxes, double threshold) {
  std::stable_sort(boxes.begin(), boxes.end(), [](const BBox& a, const BBox& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  });
  std::vector<BBox> kept;
  for (const auto& b : boxes) {
    bool suppressed = false;
    for (const auto& k : kept)
      if (paper_overlap(k.rect(), b.rect()) > threshold) {
        suppressed = true;
        break;
      }
    if (!suppressed) kept.push_back(b);
  }
  return kept;
}

}  // namespace

std::vector<BBox> filter_and_nms(std::vector<BBox> boxes, const DetectorConfig& cfg,
                                 int /*img_w*/, int img_h) {
  std::vector<BBox> survivors;
  for (const auto& b : boxes)
    if (passes_geometry(b, cfg, img_h)) survivors.push_back(b);
  if (survivors.empty()) return survivors;

  double mean_score = 0.0;
  for (const auto& b : survivors) mean_score += b.score;
  mean_score /= survivors.size();
  std::vector<BBox> scored;
  for (const auto& b : survivors)
    if (b.score >= mean_score) scored.push_back(b);

  return overlap_nms(std::move(scored), cfg.box_nms_overlap);
}

BBox refine_box(const GrayImage& img, const BBox& box, const DetectorConfig& cfg) {
  int ex = static_cast<int>(std::lround(box.w * cfg.enlarge_frac));
  int ey = static_cast<int>(std::lround(box.h * cfg.enlarge_frac));
  Rect enlarged{std::max(0, box.x - ex), std::max(0, box.y - ey), 0, 0};
  enlarged.w = std::min(img.width, box.x + box.w + ex) - enlarged.x;
  enlarged.h = std::min(img.height, box.y + box.h + ey) - enlarged.y;
  if (enlarged.w < 3 || enlarged.h < 3) return BBox::of(enlarged, box.score);
  BBox fallback = BBox::of(enlarged, box.score);

  GrayImage patch = crop(img, enlarged);
  GrayImage edges = sobel_vertical(patch);
  // strong edges only: character strokes saturate the response while
  // background texture stays below the cut
  BinaryImage strong(edges.width, edges.height);
  for (std::size_t i = 0; i < edges.pixels.size(); ++i)
    strong.bits[i] = edges.pixels[i] >= cfg.refine_edge_threshold ? 1 : 0;

  auto rows = project(strong, Axis::Rows);
  long long max_row = *std::max_element(rows.begin(), rows.end());
  if (max_row <= 0) return fallback;
  double row_thr = cfg.row_band_threshold * static_cast<double>(max_row);

  // largest contiguous row band above the threshold
  int best_y0 = -1, best_y1 = -1, cur_y0 = -1;
  for (int y = 0; y <= static_cast<int>(rows.size()); ++y) {
    bool on = y < static_cast<int>(rows.size()) && rows[y] >= row_thr;
    if (on && cur_y0 < 0) cur_y0 = y;
    if (!on && cur_y0 >= 0) {
      if (best_y0 < 0 || y - cur_y0 > best_y1 - best_y0 + 1) {
        best_y0 = cur_y0;
        best_y1 = y - 1;
      }
      cur_y0 = -1;
    }
  }
  if (best_y0 < 0) return fallback;

  // column bounds within the band: qualifying columns bridged across the
  // inter-character gaps, longest linked run wins (background texture past
  // the plate cannot attach across the wider plate padding)
  std::vector<long long> cols(patch.width, 0);
  for (int y = best_y0; y <= best_y1; ++y)
    for (int x = 0; x < patch.width; ++x) cols[x] += strong.at(x, y);
  long long max_col = *std::max_element(cols.begin(), cols.end());
  if (max_col <= 0) return fallback;
  double col_thr = cfg.col_band_threshold * static_cast<double>(max_col);
  const int band_h = best_y1 - best_y0 + 1;
  const int max_gap = std::max(2, band_h / 2);
  int x0 = -1, x1 = -1;
  {
    int run_x0 = -1, run_x1 = -1, last_hit = -1;
    for (int x = 0; x < patch.width; ++x) {
      if (cols[x] < col_thr) continue;
      if (last_hit >= 0 && x - last_hit <= max_gap) {
        run_x1 = x;
      } else {
        if (run_x0 >= 0 && (x0 < 0 || run_x1 - run_x0 > x1 - x0)) {
          x0 = run_x0;
          x1 = run_x1;
        }
        run_x0 = run_x1 = x;
      }
      last_hit = x;
    }
    if (run_x0 >= 0 && (x0 < 0 || run_x1 - run_x0 > x1 - x0)) {
      x0 = run_x0;
      x1 = run_x1;
    }
  }
  if (x0 < 0) return fallback;

  int mx = static_cast<int>(std::lround(band_h * cfg.refine_margin_x));
  int my = static_cast<int>(std::lround(band_h * cfg.refine_margin_y));
  // margins approximate the plate border around the character band; clamp to
  // the enlarged search region
  int rx0 = std::max(0, x0 - mx), ry0 = std::max(0, best_y0 - my);
  int rx1 = std::min(patch.width - 1, x1 + mx);
  int ry1 = std::min(patch.height - 1, best_y1 + my);

  Rect refined{enlarged.x + rx0, enlarged.y + ry0, rx1 - rx0 + 1, ry1 - ry0 + 1};
  return BBox::of(refined, box.score);
}

VerifyResult verify_plate(const Network& plate_net, const GrayImage& img,
                          const BBox& box, const DetectorConfig& cfg, Rng& rng) {
  VerifyResult res;
  if (box.w < 4 || box.h < 2) return res;  // degenerate crop
  Shape3 in = plate_net.input_shape();
  const int n = std::max(1, cfg.jitter_count);
  Tensor batch({n, 1, in.h, in.w});
  for (int j = 0; j < n; ++j) {
    int dx = 0, dy = 0;
    if (j > 0) {  // first prediction is the untranslated crop
      dx = static_cast<int>(std::lround(rng.uniform(-1.0, 1.0) * cfg.jitter_frac * box.w));
      dy = static_cast<int>(std::lround(rng.uniform(-1.0, 1.0) * cfg.jitter_frac * box.h));
    }
    Rect r{box.x + dx, box.y + dy, box.w, box.h};
    r.x = std::clamp(r.x, 0, std::max(0, img.width - 2));
    r.y = std::clamp(r.y, 0, std::max(0, img.height - 2));
    if (r.x + r.w > img.width) r.w = img.width - r.x;
    if (r.y + r.h > img.height) r.h = img.height - r.y;
    if (r.w < 2 || r.h < 2) return res;
    GrayImage patch = resize_bilinear(crop(img, r), in.w, in.h);
    for (std::size_t i = 0; i < patch.pixels.size(); ++i)
      batch[static_cast<std::size_t>(j) * in.count() + i] = patch.pixels[i];
  }
  Tensor probs = plate_net.forward(batch);
  double mean = 0.0;
  for (int j = 0; j < n; ++j) mean += probs[static_cast<std::size_t>(j) * 2 + 1];
  res.score = static_cast<float>(mean / n);
  res.accepted = res.score >= cfg.verify_threshold;
  return res;
}

std::vector<BBox> detect(const GrayImage& img, const Network& fcn37,
                         const Network& plate_net, const DetectorConfig& cfg,
                         std::uint64_t image_id) {
  // neutral padding: equals the training mean, so padded area carries no
  // character evidence
  const Tensor& mean = fcn37.mean_image();
  std::uint8_t fill = 127;
  if (!mean.empty()) {
    double avg = 0;
    for (float v : mean.vec()) avg += v;
    fill = static_cast<std::uint8_t>(std::clamp(avg / mean.size(), 0.0, 255.0));
  }

  std::vector<SaliencyMap> maps;
  for (int k = 0; k < cfg.scale_count; ++k) {
    double s = std::pow(cfg.scale_ratio, k);
    int sw = static_cast<int>(std::lround(img.width * s));
    int sh = static_cast<int>(std::lround(img.height * s));
    if (sw < 24 || sh < 24) break;
    GrayImage scaled = resize_bilinear(img, sw, sh);
    GrayImage padded = pad(scaled, cfg.pad, cfg.pad, cfg.pad, cfg.pad, fill);
    maps.push_back(saliency_map(fcn37, padded, s, cfg));
  }

  std::vector<BBox> boxes = propose_boxes(maps, cfg.nms, img.width, img.height);
  boxes = filter_and_nms(std::move(boxes), cfg, img.width, img.height);

  std::vector<BBox> refined;
  for (const auto& b : boxes) {
    BBox r = refine_box(img, b, cfg);
    if (passes_geometry(r, cfg, img.height)) refined.push_back(r);
  }
  refined = overlap_nms(std::move(refined), cfg.box_nms_overlap);

  Rng rng(cfg.seed);
  Rng img_rng = rng.derive("verify", image_id);
  std::vector<BBox> accepted;
  for (const auto& b : refined) {
    VerifyResult vr = verify_plate(plate_net, img, b, cfg, img_rng);
    if (vr.accepted) accepted.push_back(BBox::of(b.rect(), vr.score));
  }
  return accepted;
}

}  // namespace lpdr
