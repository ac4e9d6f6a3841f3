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

#include "lpdr/network.hpp"

namespace lpdr {

// 37-way character/non-character saliency net (10 digits + 26 letters +
// background). Cumulative pooling stride 8, which fixes the dense saliency
// grid stride.
inline Network make_char_saliency_net() {
  using L = LayerSpec;
  return Network({1, 24, 24},
                 {L::conv(120, 5), L::relu(), L::maxpool(4, 4), L::conv(384, 2),
                  L::relu(), L::maxpool(2, 2), L::fc(512), L::relu(),
                  L::dropout(0.5f), L::fc(37), L::softmax()});
}

// Deep 36-way character recognizer; `channels` = 2 adds the LBP plane.
inline Network make_char_recognition_net(int channels = 1) {
  using L = LayerSpec;
  return Network({channels, 24, 24},
                 {L::conv(64, 3, 1, 1),  L::relu(), L::maxpool(3, 1),
                  L::conv(128, 3, 1, 1), L::relu(), L::maxpool(3, 2),
                  L::conv(256, 3, 1, 1), L::relu(),
                  L::conv(256, 3, 1, 1), L::relu(), L::maxpool(3, 2),
                  L::conv(512, 3, 1, 1), L::relu(),
                  L::conv(512, 3, 1, 1), L::relu(), L::maxpool(3, 1),
                  L::fc(1000), L::relu(), L::dropout(0.5f),
                  L::fc(1000), L::relu(), L::dropout(0.5f),
                  L::fc(36), L::softmax()});
}

// Binary plate verifier on 30x100 crops.
inline Network make_plate_verifier_net() {
  using L = LayerSpec;
  return Network({1, 30, 100},
                 {L::conv(96, 5), L::relu(), L::maxpool(2, 2), L::conv(256, 5),
                  L::relu(), L::maxpool(3, 3), L::fc(500), L::relu(),
                  L::dropout(0.5f), L::fc(2), L::softmax()});
}

// Trace indices of the two feature taps of the recognition net: the pooled
// block after the fourth convolution and the affine output of the first
// fully connected layer.
struct FeatureTaps {
  int conv_block_act = 0;  // index into ForwardTrace::acts
  int fc_act = 0;
};

inline FeatureTaps find_feature_taps(const Network& net) {
  FeatureTaps taps;
  int convs = 0;
  int fourth_conv = -1, first_fc = -1, pool_after = -1;
  const auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::Conv && ++convs == 4)
      fourth_conv = static_cast<int>(i);
    if (fourth_conv >= 0 && pool_after < 0 && layers[i].kind == LayerKind::MaxPool &&
        static_cast<int>(i) > fourth_conv)
      pool_after = static_cast<int>(i);
    if (first_fc < 0 && layers[i].kind == LayerKind::FullyConnected)
      first_fc = static_cast<int>(i);
  }
  if (fourth_conv < 0 || pool_after < 0 || first_fc < 0)
    throw std::invalid_argument("network lacks the expected feature tap layers");
  taps.conv_block_act = pool_after + 1;
  taps.fc_act = first_fc + 1;
  return taps;
}

}  // namespace lpdr
