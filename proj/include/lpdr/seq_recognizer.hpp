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

#include "lpdr/ctc.hpp"
#include "lpdr/image.hpp"
#include "lpdr/model_io.hpp"
#include "lpdr/network.hpp"
#include "lpdr/rng.hpp"
#include "lpdr/seg_recognizer.hpp"

namespace lpdr {

struct SeqRecConfig {
  int pad_lr = 10;     // pixels added left and right before resizing
  int target_h = 24;   // resized plate height (the CNN input height)
  int target_w = 94;   // resized plate width; 94-24+1 = 71 windows
  int pca_dim = 256;
  std::uint64_t seed = 1;
};

// Sliding-window feature sequence: every 24x24 window (step 1) of the padded,
// resized plate runs through the recognition CNN; the pooled conv-4 block
// (4096) and the first fc output (1000) concatenate into 5096 dims, then the
// optional PCA projects to pca_dim. Rows of the result are x_1..x_L.
Tensor extract_feature_sequence(const Network& net9, const GrayImage& plate,
                                const PcaModel* pca, const SeqRecConfig& cfg);

// Top principal directions of the rows of `features` [N x D], z-scored
// output. Rank deficits below out_dim are zero-padded with a warning flag in
// kept_rank.
PcaModel fit_pca(const Tensor& features, int out_dim);

Tensor apply_pca(const PcaModel& pca, const Tensor& features);

BlstmParams blstm_init(int input_dim, int hidden, int classes, Rng& rng);

// Per-step 37-class distributions [L x K] from the bidirectional recurrence
// over seq [L x D]; both directions start from zero states.
Tensor blstm_forward(const BlstmParams& net, const Tensor& seq);

// Loss-only double-precision forward used by the finite-difference gradient
// checks; evaluates the CTC objective on the softmax outputs.
double blstm_ctc_loss_double(const BlstmParams& net, const Tensor& seq,
                             const LabelString& target);

// CTC loss and full BPTT gradients for one (sequence, target) pair,
// accumulated into `grads` (same tensor shapes as the parameters).
double blstm_backward(const BlstmParams& net, const Tensor& seq,
                      const LabelString& target, BlstmParams& grads);

// Double instantiation of the same backward derivation, for the
// finite-difference checks.
struct BlstmDoubleGrads {
  double loss = 0.0;
  std::vector<double> wx_f, wh_f, b_f, wx_b, wh_b, b_b, w_out, b_out;
};

BlstmDoubleGrads blstm_backward_double(const BlstmParams& net, const Tensor& seq,
                                       const LabelString& target);

struct BlstmTrainConfig {
  float learning_rate = 0.02f;
  float momentum = 0.9f;
  float grad_clip = 5.0f;  // global L2 norm
  int batch_size = 8;
  int epochs = 40;
  float decay_factor = 0.5f;
  int patience = 5;
  std::uint64_t seed = 1;
};

struct SeqSample {
  Tensor features;  // [L x D]
  LabelString label;
};

// SGD with momentum on the CTC objective. Inadmissible samples (label longer
// than the sequence can emit) abort with a diagnostic naming the sample.
TrainResult blstm_train(BlstmParams& net, const std::vector<SeqSample>& train,
                        const std::vector<SeqSample>& val,
                        const BlstmTrainConfig& cfg,
                        std::vector<std::string>* log = nullptr);

// Exact-match decode rate via best-path decoding.
double blstm_exact_match(const BlstmParams& net, const std::vector<SeqSample>& data);

// Segmentation-free reading of a plate crop.
PlateReading read_plate_sequence(const GrayImage& plate, const Network& net9,
                                 const PcaModel& pca, const BlstmParams& blstm,
                                 const SeqRecConfig& cfg);

}  // namespace lpdr
