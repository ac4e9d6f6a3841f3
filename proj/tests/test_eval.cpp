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

#include "lpdr/eval.hpp"
#include "lpdr/rng.hpp"

using namespace lpdr;

TEST_CASE("paper_overlap hand cases") {
  CHECK(paper_overlap({3, 4, 10, 10}, {3, 4, 10, 10}) == doctest::Approx(1.0));
  // half-offset: intersection 50, enclosing 15x10
  CHECK(paper_overlap({0, 0, 10, 10}, {5, 0, 10, 10}) == doctest::Approx(1.0 / 3.0));
  CHECK(paper_overlap({0, 0, 10, 10}, {20, 20, 5, 5}) == 0.0);
}

TEST_CASE("paper_overlap properties") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    Rect a{rng.uniform_int(0, 40), rng.uniform_int(0, 40), rng.uniform_int(1, 30),
           rng.uniform_int(1, 30)};
    Rect b{rng.uniform_int(0, 40), rng.uniform_int(0, 40), rng.uniform_int(1, 30),
           rng.uniform_int(1, 30)};
    double ab = paper_overlap(a, b);
    CHECK(ab == paper_overlap(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK((ab == 1.0) == (a == b));
  }
  SUBCASE("nested boxes reduce to the area ratio") {
    for (int trial = 0; trial < 50; ++trial) {
      Rect outer{rng.uniform_int(0, 10), rng.uniform_int(0, 10),
                 rng.uniform_int(4, 20), rng.uniform_int(4, 20)};
      Rect inner{outer.x + rng.uniform_int(0, 2), outer.y + rng.uniform_int(0, 2),
                 outer.w / 2, outer.h / 2};
      CHECK(paper_overlap(outer, inner) ==
            doctest::Approx(static_cast<double>(inner.area()) / outer.area()));
    }
  }
}

TEST_CASE("match_detections") {
  OverlapCriterion crit;
  SUBCASE("exact detection is a true positive") {
    auto res = match_detections({{5, 5, 20, 10, 0.9f}}, {Rect{5, 5, 20, 10}}, crit);
    CHECK(res.tp == 1);
    CHECK(res.fp == 0);
    CHECK(res.fn == 0);
    CHECK(res.matching[0] == 0);
  }
  SUBCASE("clipping the truth plate violates encompassment") {
    // detection misses 10% of the plate on the left
    auto res = match_detections({{7, 5, 18, 10, 0.9f}}, {Rect{5, 5, 20, 10}}, crit);
    CHECK(res.tp == 0);
    CHECK(res.fp == 1);
    CHECK(res.fn == 1);
  }
  SUBCASE("two detections on one truth: one TP, one FP") {
    auto res = match_detections({{5, 5, 20, 10, 0.8f}, {4, 4, 22, 12, 0.9f}},
                                {Rect{5, 5, 20, 10}}, crit);
    CHECK(res.tp == 1);
    CHECK(res.fp == 1);
    CHECK(res.fn == 0);
    // higher score matched first
    CHECK(res.matching[1] == 0);
    CHECK(res.matching[0] == -1);
  }
  SUBCASE("low overlap fails even when contained") {
    // truth tiny inside a huge detection: contained but overlap far below 0.5
    auto res = match_detections({{0, 0, 100, 100, 0.9f}}, {Rect{40, 40, 10, 10}}, crit);
    CHECK(res.tp == 0);
  }
  SUBCASE("counts reconcile") {
    Rng rng(2);
    std::vector<BBox> dets;
    std::vector<Rect> truths;
    for (int i = 0; i < 12; ++i)
      dets.push_back({rng.uniform_int(0, 50), rng.uniform_int(0, 50),
                      rng.uniform_int(5, 30), rng.uniform_int(5, 30),
                      static_cast<float>(rng.uniform())});
    for (int i = 0; i < 7; ++i)
      truths.push_back({rng.uniform_int(0, 50), rng.uniform_int(0, 50),
                        rng.uniform_int(5, 30), rng.uniform_int(5, 30)});
    auto res = match_detections(dets, truths, crit);
    CHECK(res.tp + res.fp == static_cast<int>(dets.size()));
    CHECK(res.tp + res.fn == static_cast<int>(truths.size()));
  }
}

TEST_CASE("recognition_metrics") {
  SUBCASE("all exact") {
    auto m = recognition_metrics({"AB1234", "XY99"}, {"AB1234", "XY99"});
    CHECK(m.plate_accuracy == doctest::Approx(1.0));
    CHECK(m.char_accuracy == doctest::Approx(1.0));
  }
  SUBCASE("one wrong character") {
    auto m = recognition_metrics({"AB1239"}, {"AB1234"});
    CHECK(m.plate_accuracy == doctest::Approx(0.0));
    CHECK(m.chars_correct == 5);
    CHECK(m.chars_total == 6);
  }
  SUBCASE("unmatched truth counts zero credit") {
    auto m = recognition_metrics({""}, {"AB1234"});
    CHECK(m.plates_correct == 0);
    CHECK(m.chars_correct == 0);
    CHECK(m.chars_total == 6);
  }
  SUBCASE("length mismatches align by minimal edit script") {
    // a dropped character still credits the rest
    auto m = recognition_metrics({"AB234"}, {"AB1234"});
    CHECK(m.chars_correct == 5);
    // an inserted character likewise
    auto m2 = recognition_metrics({"AB12345"}, {"AB1234"});
    CHECK(m2.chars_correct == 6);
  }
}

TEST_CASE("aligned_matches basics") {
  CHECK(aligned_matches("", "") == 0);
  CHECK(aligned_matches("ABC", "") == 0);
  CHECK(aligned_matches("ABC", "ABC") == 3);
  CHECK(aligned_matches("AXC", "ABC") == 2);
  CHECK(aligned_matches("AC", "ABC") == 2);
  CHECK(aligned_matches("CBA", "ABC") == 1);
}
