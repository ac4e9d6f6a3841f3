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

#include "lpdr/tensor.hpp"

namespace lpdr {

// Label indices exclude the blank; the blank is the last class of the
// probability rows (index K-1; 36 for the 37-class plate alphabet).
using LabelString = std::vector<int>;

// The collapse operator B: merge adjacent equal labels, then delete blanks.
LabelString ctc_collapse(const std::vector<int>& path, int blank);

// Shortest path length that can emit `target` (|z| plus one separating blank
// per adjacent repeat).
int ctc_min_length(const LabelString& target);

struct CtcResult {
  double loss = 0.0;     // -ln P(target | probs)
  Tensor grad_logits;    // [L x K], gradient w.r.t. pre-softmax activations
};

// Forward-backward over the blank-augmented target, all in log space so the
// L=71 sequences of the plate reader cannot underflow. probs is [L x K] of
// per-step softmax outputs. Throws when the target is not admissible for L.
CtcResult ctc_loss(const Tensor& probs, const LabelString& target,
                   bool want_grad = true);

// Same computation on a raw double [L*K] buffer; the precision-preserving
// entry point for the double-sided gradient checks.
double ctc_loss_d(const std::vector<double>& probs, int L, int K,
                  const LabelString& target, std::vector<double>* grad_logits);

struct CtcDecodeResult {
  LabelString labels;
  double score = 0.0;      // product of the per-step maxima
  std::vector<int> path;   // the argmax path before collapsing
};

// Best-path decoding: per-step argmax then collapse. Exact probability ties
// go to the blank first, then to the lowest class index, so a maximally
// uncertain step decodes to nothing.
CtcDecodeResult ctc_best_path(const Tensor& probs);

}  // namespace lpdr
