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

namespace lpdr {

// Intersection area over the area of the minimum box enclosing both
// rectangles. This is the matching measure the detector is scored with; it is
// not intersection-over-union even though it plays the same role.
double paper_overlap(const Rect& a, const Rect& b);

enum class OverlapMode { PaperOverlap, StandardIoU };

struct OverlapCriterion {
  double threshold = 0.5;
  OverlapMode mode = OverlapMode::PaperOverlap;
};

struct MatchResult {
  int tp = 0, fp = 0, fn = 0;
  // matching[i] = index of the truth matched by detection i, or -1
  std::vector<int> matching;
};

// Greedy one-to-one matching by descending detection score. A pair matches
// iff the truth box is fully inside the detection box and the overlap exceeds
// the threshold.
MatchResult match_detections(const std::vector<BBox>& detections,
                             const std::vector<Rect>& truths,
                             const OverlapCriterion& criterion);

struct RecognitionMetrics {
  double plate_accuracy = 0.0;
  double char_accuracy = 0.0;
  int plates_correct = 0;
  int plates_total = 0;
  long long chars_correct = 0;
  long long chars_total = 0;
};

// readings[i] pairs with truths[i]; an empty/missing reading for an unmatched
// truth plate contributes 0 correct plates and 0/|label| characters.
// Character accuracy aligns each pair with a minimal edit script and counts
// matched positions.
RecognitionMetrics recognition_metrics(const std::vector<std::string>& readings,
                                       const std::vector<std::string>& truths);

// Aligned equal positions under a minimal (Levenshtein) edit script.
int aligned_matches(const std::string& a, const std::string& b);

}  // namespace lpdr
