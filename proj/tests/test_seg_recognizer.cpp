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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lpdr/architectures.hpp"
#include "lpdr/data_synth.hpp"
#include "lpdr/seg_recognizer.hpp"

using namespace lpdr;

namespace {

// small stand-in for the 9-layer recognizer: right input shape, cheap to run
Network tiny_char_net(int channels, std::uint64_t seed) {
  Network net({channels, 24, 24},
              {LayerSpec::conv(8, 5, 2, 0), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
               LayerSpec::fc(36), LayerSpec::softmax()});
  Rng rng(seed);
  net.init_weights(rng);
  return net;
}

}  // namespace

TEST_CASE("segment_plate") {
  SegRecConfig cfg;
  SUBCASE("clean six-character plate gives six aligned blocks") {
    AugmentConfig a;
    a.seed = 71;
    PlateSample plate = synth_plate("AB1234", a, {24, false, 0});
    auto blocks = segment_plate(plate.image, cfg);
    REQUIRE(blocks.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(std::abs(blocks[i].box.x - plate.char_boxes[i].x) <= 2);
      CHECK(std::abs(blocks[i].box.x2() - plate.char_boxes[i].x2()) <= 2);
      CHECK(std::abs(blocks[i].box.y - plate.char_boxes[i].y) <= 2);
      CHECK(std::abs(blocks[i].box.y2() - plate.char_boxes[i].y2()) <= 2);
    }
    // strictly ordered by left edge
    for (std::size_t i = 1; i < blocks.size(); ++i)
      CHECK(blocks[i].box.x > blocks[i - 1].box.x);
  }
  SUBCASE("touching glyphs are split back apart") {
    // four separated H glyphs establish the median width; a fifth and sixth
    // are fused by negative tracking plus an explicit bridge
    BinaryImage h = render_glyph(char_to_class('H'), 0, 24);
    GrayImage plate(6 * h.width + 7 * 6, 40, 220);
    auto stamp = [&](int x0) {
      for (int y = 0; y < h.height; ++y)
        for (int x = 0; x < h.width; ++x)
          if (h.at(x, y)) plate.at(x0 + x, 8 + y) = 30;
    };
    int x = 6;
    for (int g = 0; g < 4; ++g, x += h.width + 6) stamp(x);
    int fused_x = x;
    stamp(fused_x);
    stamp(fused_x + h.width - 1);  // -1 px tracking joins them
    auto blocks = segment_plate(plate, cfg);
    CHECK(blocks.size() == 6);
  }
  SUBCASE("blank plate segments to nothing") {
    GrayImage plate(120, 40, 200);
    CHECK(segment_plate(plate, cfg).empty());
  }
  SUBCASE("subtitle plates segment badly (the failure the sequence path avoids)") {
    int clean_ok = 0, subtitle_ok = 0;
    for (std::uint64_t seed = 80; seed < 90; ++seed) {
      AugmentConfig a;
      a.seed = seed;
      PlateSample clean = synth_plate("HK4721", a, {24, false, 0});
      PlateOptions sub_opts;
      sub_opts.char_height = 24;
      sub_opts.subtitle = true;
      sub_opts.style = 0;
      PlateSample corrupted = synth_plate("HK4721", a, sub_opts);
      if (segment_plate(clean.image, cfg).size() == 6) ++clean_ok;
      if (segment_plate(corrupted.image, cfg).size() == 6) ++subtitle_ok;
    }
    CHECK(clean_ok >= 9);
    CHECK(subtitle_ok < clean_ok);
  }
}

TEST_CASE("classify_char") {
  Network net = tiny_char_net(1, 91);
  AugmentConfig a;
  a.seed = 92;
  GrayImage crop = synth_char(7, a);

  SUBCASE("tta of one equals a single forward pass") {
    Rng rng(93);
    CharPrediction pred = classify_char(net, crop, 1, rng);
    Tensor input({1, 1, 24, 24});
    for (int i = 0; i < 576; ++i) input[i] = crop.pixels[i];
    Tensor probs = net.forward(input);
    for (int k = 0; k < 36; ++k)
      CHECK(pred.probs[k] == doctest::Approx(probs[k]).epsilon(1e-7));
  }
  SUBCASE("averaged probabilities still sum to one") {
    Rng rng(94);
    CharPrediction pred = classify_char(net, crop, 5, rng);
    double sum = 0;
    for (float p : pred.probs) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(pred.cls >= 0);
    CHECK(pred.cls < 36);
    CHECK(pred.confidence == pred.probs[pred.cls]);
  }
}

TEST_CASE("classify_char_lbp takes the two-channel input") {
  Network net2 = tiny_char_net(2, 95);
  CHECK(net2.input_shape().c == 2);
  AugmentConfig a;
  a.seed = 96;
  GrayImage crop = synth_char(11, a);
  Rng rng(97);
  CharPrediction pred = classify_char_lbp(net2, crop, 3, rng);
  double sum = 0;
  for (float p : pred.probs) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));

  Network net1 = tiny_char_net(1, 95);
  Rng rng2(97);
  CHECK_THROWS(classify_char_lbp(net1, crop, 3, rng2));
}

TEST_CASE("ensemble") {
  SUBCASE("identical inputs pass through") {
    CharPrediction a;
    a.probs = {0.2f, 0.5f, 0.3f};
    a.cls = 1;
    a.confidence = 0.5f;
    CharPrediction out = ensemble(a, a);
    CHECK(out.probs == a.probs);
    CHECK(out.cls == 1);
  }
  SUBCASE("mean of two distributions") {
    CharPrediction a, b;
    a.probs = {0.6f, 0.4f};
    b.probs = {0.2f, 0.8f};
    CharPrediction out = ensemble(a, b);
    CHECK(out.probs[0] == doctest::Approx(0.4));
    CHECK(out.probs[1] == doctest::Approx(0.6));
    CHECK(out.cls == 1);
    double sum = out.probs[0] + out.probs[1];
    CHECK(sum == doctest::Approx(1.0));
  }
  SUBCASE("class-count mismatch rejected") {
    CharPrediction a, b;
    a.probs = {0.5f, 0.5f};
    b.probs = {1.0f};
    CHECK_THROWS(ensemble(a, b));
  }
}

TEST_CASE("read_plate_segmented") {
  Network net = tiny_char_net(1, 98);
  SegRecConfig cfg;
  AugmentConfig a;
  a.seed = 99;
  PlateSample plate = synth_plate("AB1234", a, {24, false, 0});

  SUBCASE("reads one character per block up to the cap") {
    PlateReading r = read_plate_segmented(plate.image, net, nullptr, cfg);
    CHECK(!r.unreadable);
    CHECK(r.text.size() == 6);
    CHECK(r.confidences.size() == 6);
  }
  SUBCASE("the N cap bounds the output length") {
    SegRecConfig capped = cfg;
    capped.max_chars = 4;
    PlateReading r = read_plate_segmented(plate.image, net, nullptr, capped);
    CHECK(r.text.size() == 4);
  }
  SUBCASE("empty plates are flagged unreadable") {
    GrayImage blank(100, 40, 180);
    PlateReading r = read_plate_segmented(blank, net, nullptr, cfg);
    CHECK(r.unreadable);
    CHECK(r.text.empty());
  }
  SUBCASE("reading is invariant to an intensity shift the stretch removes") {
    GrayImage shifted = plate.image;
    for (auto& p : shifted.pixels)
      p = static_cast<std::uint8_t>(std::min(255, p + 15));
    PlateReading r1 = read_plate_segmented(plate.image, net, nullptr, cfg);
    PlateReading r2 = read_plate_segmented(shifted, net, nullptr, cfg);
    CHECK(r1.text == r2.text);
    CHECK(r1.confidences == r2.confidences);
  }
  SUBCASE("ensemble path runs with both nets") {
    Network net2 = tiny_char_net(2, 101);
    PlateReading r = read_plate_segmented(plate.image, net, &net2, cfg);
    CHECK(r.text.size() == 6);
  }
}
