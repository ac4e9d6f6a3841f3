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

#include <optional>
#include <string>
#include <vector>

#include "lpdr/nn_kernels.hpp"
#include "lpdr/rng.hpp"
#include "lpdr/tensor.hpp"

namespace lpdr {

struct LayerParams {
  Tensor w;  // conv: [F,C,kh,kw]; fc: [out,in]
  Tensor b;  // [F] / [out]
};

// Everything the backward pass needs from a forward pass.
struct ForwardTrace {
  std::vector<Tensor> acts;  // acts[0] = normalized input; acts[i+1] = layer i output
  std::vector<std::vector<int>> pool_argmax;     // per layer (empty unless pool)
  std::vector<std::vector<float>> dropout_mask;  // per layer (empty unless dropout)
  bool train_mode = false;
};

struct Gradients {
  std::vector<LayerParams> layers;  // same shapes as Network weights
};

// Feed-forward CNN/MLP: an ordered layer chain with weights, an input shape
// and a mean image subtracted before the first layer. Immutable once trained;
// concurrent read-only forward passes are safe.
class Network {
 public:
  Network() = default;
  Network(Shape3 input_shape, std::vector<LayerSpec> layers);

  // Glorot-uniform weights, zero biases.
  void init_weights(Rng& rng);

  // Pixel inputs are mapped to (x - mean)/255 before the first layer; the
  // mean image is stored in pixel scale. An empty mean means zero.
  void set_mean_image(Tensor mean) { mean_image_ = std::move(mean); }
  const Tensor& mean_image() const { return mean_image_; }

  // input: [N,C,H,W] in pixel scale (0..255 floats). Returns softmax output
  // [N,K,h',w'] (h'=w'=1 for classifier use; a spatial grid when the net is
  // fully convolutional). Dropout is active only in train mode; `rng` may be
  // null otherwise. If `trace` is given all activations are retained.
  Tensor forward(const Tensor& input, bool train_mode = false, Rng* rng = nullptr,
                 ForwardTrace* trace = nullptr) const;

  // dLogits: gradient of the loss w.r.t. the pre-softmax logits (the input of
  // the final softmax layer), shape equal to the logits activation. Requires
  // a trace captured in train mode.
  Gradients backward(const ForwardTrace& trace, const Tensor& dlogits) const;

  Gradients zero_gradients() const;

  // Spatial-preserving clone for dense sliding-window evaluation: every fully
  // connected layer is re-expressed as a convolution over the feature grid
  // (the first one with the kernel equal to its input block, later ones 1x1),
  // sharing this network's weight values. Running it over a larger image
  // evaluates all windows of the original input size at the net's cumulative
  // stride in one pass.
  Network to_fully_convolutional() const;

  std::size_t parameter_count() const;

  const std::vector<LayerSpec>& layers() const { return layers_; }
  const std::vector<LayerParams>& params() const { return params_; }
  std::vector<LayerParams>& params() { return params_; }
  Shape3 input_shape() const { return input_shape_; }
  const std::vector<Shape3>& shapes() const { return shapes_; }  // shapes[i] = input of layer i; back() = output
  int class_count() const { return class_count_; }

  // Index of the logits activation in a trace (input of final softmax).
  int logits_index() const { return static_cast<int>(layers_.size()) - 1; }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<LayerParams> params_;
  std::vector<Shape3> shapes_;
  Shape3 input_shape_{};
  int class_count_ = 0;
  Tensor mean_image_;
};

// Mean cross-entropy over the batch, computed from logits via log-sum-exp.
float cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels);

// d(mean CE)/d(logits) = (softmax(logits) - onehot)/N.
Tensor ce_softmax_grad(const Tensor& probs, const std::vector<int>& labels);

int argmax_class(const Tensor& probs, int sample);

struct SgdConfig {
  float learning_rate = 0.01f;
  float decay_factor = 0.5f;  // lr multiplier when validation stalls
  int patience = 3;           // epochs without improvement before decay
  float momentum = 0.9f;
  int batch_size = 64;
  int epochs = 10;
  std::uint64_t seed = 1;
};

struct Dataset {
  Tensor inputs;            // [N,C,H,W], pixel scale
  std::vector<int> labels;  // class ids, size N
};

struct EpochStats {
  float train_loss = 0.0f;
  float val_loss = 0.0f;
  float val_accuracy = 0.0f;
  float learning_rate = 0.0f;
};

struct TrainResult {
  std::vector<EpochStats> history;
};

// SGD with momentum and stall-based learning-rate decay. Deterministic for a
// fixed config: shuffling, dropout and the update order all derive from
// cfg.seed. Aborts with a diagnostic on an empty dataset or non-finite loss.
// `log` (optional) receives one line per epoch.
TrainResult sgd_train(Network& net, const Dataset& train, const Dataset& val,
                      const SgdConfig& cfg,
                      std::vector<std::string>* log = nullptr);

struct LayerGradReport {
  int layer = 0;
  std::string kind;
  float max_rel_error = 0.0f;
  int checked = 0;
  int skipped = 0;  // points where the FD itself is unreliable (kinks)
  bool pass = false;
};

// Compares analytic gradients against central finite differences (eps) of a
// double-precision re-evaluation of the loss. Nondifferentiable points (a
// relu/pool kink inside the probe interval, detected by a half-step
// consistency test) are excluded. max_checks_per_layer = 0 checks everything.
std::vector<LayerGradReport> gradient_check(const Network& net, const Tensor& input,
                                            const std::vector<int>& labels,
                                            float tolerance, float eps = 1e-3f,
                                            int max_checks_per_layer = 0,
                                            std::uint64_t seed = 7);

}  // namespace lpdr
