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

#include "lpdr/network.hpp"

namespace lpdr {

// Bidirectional LSTM parameters. Gate order inside the stacked [4H x *]
// matrices is (input, forget, cell candidate, output).
struct BlstmParams {
  int input_dim = 0;
  int hidden = 0;
  int classes = 0;
  Tensor wx_f, wh_f, b_f;  // forward direction:  [4H x D], [4H x H], [4H]
  Tensor wx_b, wh_b, b_b;  // backward direction
  Tensor w_out, b_out;     // [K x 2H] over (h_fwd, h_bwd), [K]

  std::size_t parameter_count() const {
    return wx_f.size() + wh_f.size() + b_f.size() + wx_b.size() + wh_b.size() +
           b_b.size() + w_out.size() + b_out.size();
  }
};

// PCA with per-dimension output normalization: z = scale .* (P (x - mean)).
// projection rows are the principal components ([out_dim x in_dim]).
struct PcaModel {
  Tensor mean;        // [in_dim]
  Tensor projection;  // [out_dim x in_dim]
  Tensor scale;       // [out_dim]
  int kept_rank = 0;  // rows beyond this are zero padding (rank-deficient fit)

  int in_dim() const { return projection.empty() ? 0 : projection.dim(1); }
  int out_dim() const { return projection.empty() ? 0 : projection.dim(0); }
};

// One model container: magic "LPDR", version, record list, trailing mean
// image. CNN layers, BLSTM and PCA are record types in the same file format;
// float payloads are little-endian f32 and round-trip bit-exactly.
struct ModelBundle {
  std::optional<Network> net;
  std::optional<BlstmParams> blstm;
  std::optional<PcaModel> pca;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    if (net) n += net->parameter_count();
    if (blstm) n += blstm->parameter_count();
    if (pca) n += pca->mean.size() + pca->projection.size() + pca->scale.size();
    return n;
  }
};

void save_model(const std::string& path, const ModelBundle& bundle);
ModelBundle load_model(const std::string& path);

}  // namespace lpdr
