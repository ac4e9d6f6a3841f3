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

#include "lpdr/eval.hpp"

#include <algorithm>
#include <numeric>

namespace lpdr {

namespace {

long long intersection_area(const Rect& a, const Rect& b) {
  long long w = std::min(a.x2(), b.x2()) - std::max(a.x, b.x);
  long long h = std::min(a.y2(), b.y2()) - std::max(a.y, b.y);
  return w > 0 && h > 0 ? w * h : 0;
}

bool contains(const Rect& outer, const Rect& inner) {
  return outer.x <= inner.x && outer.y <= inner.y && outer.x2() >= inner.x2() &&
         outer.y2() >= inner.y2();
}

}  // namespace

double paper_overlap(const Rect& a, const Rect& b) {
  if (a.w <= 0 || a.h <= 0 || b.w <= 0 || b.h <= 0) return 0.0;
  long long inter = intersection_area(a, b);
  long long ex = std::min(a.x, b.x);
  long long ey = std::min(a.y, b.y);
  long long enclosing = (std::max(a.x2(), b.x2()) - ex) * (std::max(a.y2(), b.y2()) - ey);
  return enclosing > 0 ? static_cast<double>(inter) / static_cast<double>(enclosing) : 0.0;
}

namespace {

double standard_iou(const Rect& a, const Rect& b) {
  long long inter = intersection_area(a, b);
  long long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace

MatchResult match_detections(const std::vector<BBox>& detections,
                             const std::vector<Rect>& truths,
                             const OverlapCriterion& criterion) {
  MatchResult res;
  res.matching.assign(detections.size(), -1);
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });

  std::vector<bool> taken(truths.size(), false);
  for (std::size_t oi : order) {
    const Rect det = detections[oi].rect();
    int best = -1;
    double best_ov = criterion.threshold;
    for (std::size_t t = 0; t < truths.size(); ++t) {
      if (taken[t]) continue;
      if (!contains(det, truths[t])) continue;
      double ov = criterion.mode == OverlapMode::PaperOverlap
                      ? paper_overlap(det, truths[t])
                      : standard_iou(det, truths[t]);
      if (ov > best_ov) {
        best_ov = ov;
        best = static_cast<int>(t);
      }
    }
    if (best >= 0) {
      taken[best] = true;
      res.matching[oi] = best;
      ++res.tp;
    } else {
      ++res.fp;
    }
  }
  res.fn = static_cast<int>(truths.size()) - res.tp;
  return res;
}

int aligned_matches(const std::string& a, const std::string& b) {
  const std::size_t n = a.size(), m = b.size();
  // dp over edit distance; matches recovered by preferring diagonal moves
  std::vector<std::vector<int>> dist(n + 1, std::vector<int>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) dist[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) dist[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      dist[i][j] = std::min({dist[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1),
                             dist[i - 1][j] + 1, dist[i][j - 1] + 1});
  int matches = 0;
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (dist[i][j] == dist[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)) {
      if (a[i - 1] == b[j - 1]) ++matches;
      --i;
      --j;
    } else if (dist[i][j] == dist[i - 1][j] + 1) {
      --i;
    } else {
      --j;
    }
  }
  return matches;
}

RecognitionMetrics recognition_metrics(const std::vector<std::string>& readings,
                                       const std::vector<std::string>& truths) {
  RecognitionMetrics rm;
  rm.plates_total = static_cast<int>(truths.size());
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const std::string read = i < readings.size() ? readings[i] : std::string();
    if (!truths[i].empty() && read == truths[i]) ++rm.plates_correct;
    rm.chars_total += static_cast<long long>(truths[i].size());
    rm.chars_correct += aligned_matches(read, truths[i]);
  }
  rm.plate_accuracy = rm.plates_total ? static_cast<double>(rm.plates_correct) / rm.plates_total : 0.0;
  rm.char_accuracy = rm.chars_total ? static_cast<double>(rm.chars_correct) / rm.chars_total : 0.0;
  return rm;
}

}  // namespace lpdr
