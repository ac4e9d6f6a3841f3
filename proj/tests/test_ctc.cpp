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

#include "lpdr/ctc.hpp"
#include "lpdr/rng.hpp"
#include "oracles.hpp"

using namespace lpdr;

namespace {

// random per-step distributions, [L x K]
Tensor random_probs(int L, int K, Rng& rng) {
  Tensor t({L, K});
  for (int l = 0; l < L; ++l) {
    double sum = 0;
    for (int k = 0; k < K; ++k) {
      double v = 0.05 + rng.uniform();
      t.at2(l, k) = static_cast<float>(v);
      sum += v;
    }
    for (int k = 0; k < K; ++k) t.at2(l, k) = static_cast<float>(t.at2(l, k) / sum);
  }
  return t;
}

}  // namespace

TEST_CASE("collapse operator reproduces the worked examples") {
  // alphabet {a=0, b=1}, blank=2 rendered as '-'
  const int blank = 2;
  // B(a-a-b-) = B(-aa--abb) = "aab"
  CHECK(ctc_collapse({0, blank, 0, blank, 1, blank}, blank) == LabelString{0, 0, 1});
  CHECK(ctc_collapse({blank, 0, 0, blank, blank, 0, 1, 1}, blank) ==
        LabelString{0, 0, 1});
  CHECK(ctc_collapse({blank, blank, blank}, blank) == LabelString{});
  // the blank between equal labels is what keeps them distinct
  CHECK(ctc_collapse({1, blank, 1}, blank) == LabelString{1, 1});
  CHECK(ctc_collapse({1, 1, 1}, blank) == LabelString{1});
  SUBCASE("idempotent when re-applied to its own output") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<int> path(rng.uniform_int(1, 12));
      for (auto& p : path) p = rng.uniform_int(0, blank);
      LabelString once = ctc_collapse(path, blank);
      // a collapsed string has no blanks; re-collapsing merges adjacent
      // repeats, so embed with separating blanks first
      std::vector<int> embedded;
      for (int v : once) {
        embedded.push_back(v);
        embedded.push_back(blank);
      }
      CHECK(ctc_collapse(embedded, blank) == once);
    }
  }
}

TEST_CASE("ctc_loss hand case: L=2, uniform over {a, blank}, target a") {
  Tensor probs({2, 2});
  probs.fill(0.5f);
  CtcResult res = ctc_loss(probs, {0});
  // paths: aa, a-, -a collapse to "a"; probability 3/4
  CHECK(std::exp(-res.loss) == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(res.loss == doctest::Approx(-std::log(0.75)).epsilon(1e-9));
}

TEST_CASE("ctc_loss of the empty target is the all-blank path") {
  Rng rng(2);
  Tensor probs = random_probs(5, 3, rng);
  CtcResult res = ctc_loss(probs, {});
  double expected = 0;
  for (int t = 0; t < 5; ++t) expected += std::log(static_cast<double>(probs.at2(t, 2)));
  CHECK(res.loss == doctest::Approx(-expected).epsilon(1e-9));
}

TEST_CASE("ctc_loss equals exhaustive path enumeration (property)") {
  Rng rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    int L = rng.uniform_int(1, 6);
    int K = rng.uniform_int(2, 4);  // alphabet up to 3 + blank
    Tensor probs = random_probs(L, K, rng);
    LabelString target;
    int tlen = rng.uniform_int(0, 3);
    for (int i = 0; i < tlen; ++i) target.push_back(rng.uniform_int(0, K - 2));
    if (ctc_min_length(target) > L) {
      CHECK_THROWS(ctc_loss(probs, target));
      continue;
    }
    double ref = oracle::ctc_brute_force(probs, target, K - 1);
    CtcResult res = ctc_loss(probs, target);
    CHECK(std::abs(std::exp(-res.loss) - ref) <= 1e-10);
  }
}

TEST_CASE("summing P(z) over all short targets reaches 1 (completeness)") {
  Rng rng(4);
  const int L = 4, K = 3;  // alphabet {0,1}, blank 2
  Tensor probs = random_probs(L, K, rng);
  double total = 0.0;
  // enumerate every label string of length <= L over the 2-letter alphabet
  for (int len = 0; len <= L; ++len) {
    for (int mask = 0; mask < (1 << len); ++mask) {
      LabelString z;
      for (int i = 0; i < len; ++i) z.push_back((mask >> i) & 1);
      if (ctc_min_length(z) > L) continue;
      total += std::exp(-ctc_loss(probs, z, false).loss);
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("ctc gradients match finite differences of the loss over logits") {
  Rng rng(5);
  const int L = 6, K = 4;
  std::vector<double> logits(L * K);
  for (auto& v : logits) v = rng.uniform(-1.5, 1.5);
  LabelString target = {0, 2, 0};

  auto probs_of = [&](const std::vector<double>& lg) {
    Tensor p({L, K});
    for (int t = 0; t < L; ++t) {
      double mx = -1e30;
      for (int k = 0; k < K; ++k) mx = std::max(mx, lg[t * K + k]);
      double sum = 0;
      for (int k = 0; k < K; ++k) sum += std::exp(lg[t * K + k] - mx);
      for (int k = 0; k < K; ++k)
        p.at2(t, k) = static_cast<float>(std::exp(lg[t * K + k] - mx) / sum);
    }
    return p;
  };
  // the FD side differentiates an all-double function: double softmax feeding
  // the exhaustive path-sum oracle, so FD noise stays near machine precision
  auto loss_double = [&](const std::vector<double>& lg) {
    std::vector<double> pd(L * K);
    for (int t = 0; t < L; ++t) {
      double mx = -1e30;
      for (int k = 0; k < K; ++k) mx = std::max(mx, lg[t * K + k]);
      double sum = 0;
      for (int k = 0; k < K; ++k) sum += std::exp(lg[t * K + k] - mx);
      for (int k = 0; k < K; ++k) pd[t * K + k] = std::exp(lg[t * K + k] - mx) / sum;
    }
    return -std::log(oracle::ctc_brute_force(pd, L, K, target, K - 1));
  };

  CtcResult base = ctc_loss(probs_of(logits), target);
  const double eps = 1e-3;
  for (int t = 0; t < L; ++t) {
    for (int k = 0; k < K; ++k) {
      std::vector<double> lp = logits, lm = logits;
      lp[t * K + k] += eps;
      lm[t * K + k] -= eps;
      double fd = (loss_double(lp) - loss_double(lm)) / (2 * eps);
      double a = base.grad_logits.at2(t, k);
      double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-2});
      CHECK(rel <= 1e-3);
    }
  }
}

TEST_CASE("inadmissible targets are rejected with a diagnostic") {
  Tensor probs({3, 3});
  probs.fill(1.0f / 3.0f);
  // "00" needs a separating blank: minimum length 3 > 2
  Tensor probs2({2, 3});
  probs2.fill(1.0f / 3.0f);
  CHECK_THROWS_WITH_AS(ctc_loss(probs2, {0, 0}, false),
                       doctest::Contains("does not fit"), std::invalid_argument);
  CHECK_THROWS(ctc_loss(probs, {0, 0, 1, 1}, false));
  CHECK_NOTHROW(ctc_loss(probs, {0, 0}, false));
  CHECK_NOTHROW(ctc_loss(probs, {0, 1, 0}, false));
  CHECK_THROWS(ctc_loss(probs, {0, 5}, false));  // label outside the alphabet
}

TEST_CASE("best-path decoding") {
  SUBCASE("argmax path (blank, a, a, blank, b) reads ab") {
    // classes: a=0, b=1, blank=2
    Tensor probs({5, 3});
    auto set = [&](int t, int k) {
      probs.at2(t, 0) = probs.at2(t, 1) = probs.at2(t, 2) = 0.1f;
      probs.at2(t, k) = 0.8f;
    };
    set(0, 2);
    set(1, 0);
    set(2, 0);
    set(3, 2);
    set(4, 1);
    CtcDecodeResult res = ctc_best_path(probs);
    CHECK(res.labels == LabelString{0, 1});
    CHECK(res.score == doctest::Approx(std::pow(0.8, 5)).epsilon(1e-6));
  }
  SUBCASE("uniform distributions decode to the empty string") {
    Tensor probs({4, 37});
    probs.fill(1.0f / 37.0f);
    CtcDecodeResult res = ctc_best_path(probs);
    CHECK(res.labels.empty());
  }
  SUBCASE("one-hot paths round-trip through their own collapse") {
    Rng rng(6);
    for (int trial = 0; trial < 30; ++trial) {
      int L = rng.uniform_int(1, 9), K = rng.uniform_int(2, 5);
      std::vector<int> path(L);
      Tensor probs({L, K});
      for (int t = 0; t < L; ++t) {
        path[t] = rng.uniform_int(0, K - 1);
        probs.at2(t, path[t]) = 1.0f;
      }
      CtcDecodeResult res = ctc_best_path(probs);
      CHECK(res.path == path);
      CHECK(res.labels == ctc_collapse(path, K - 1));
      CHECK(res.score == doctest::Approx(1.0));
    }
  }
  SUBCASE("score equals the product of per-step maxima (property)") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      int L = rng.uniform_int(1, 10), K = rng.uniform_int(2, 6);
      Tensor probs = random_probs(L, K, rng);
      CtcDecodeResult res = ctc_best_path(probs);
      double expect = 1.0;
      for (int t = 0; t < L; ++t) {
        float mx = 0;
        for (int k = 0; k < K; ++k) mx = std::max(mx, probs.at2(t, k));
        expect *= mx;
      }
      CHECK(res.score == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}
