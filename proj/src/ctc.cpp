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

#include "lpdr/ctc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lpdr {

namespace {

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace

LabelString ctc_collapse(const std::vector<int>& path, int blank) {
  LabelString out;
  int prev = -1;
  for (int p : path) {
    if (p != prev && p != blank) out.push_back(p);
    prev = p;
  }
  return out;
}

int ctc_min_length(const LabelString& target) {
  int repeats = 0;
  for (std::size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++repeats;
  return static_cast<int>(target.size()) + repeats;
}

double ctc_loss_d(const std::vector<double>& probs, int L, int K,
                  const LabelString& target, std::vector<double>* grad_logits) {
  const int blank = K - 1;
  for (int c : target)
    if (c < 0 || c >= blank)
      throw std::invalid_argument("ctc_loss: label " + std::to_string(c) +
                                  " outside the " + std::to_string(blank) +
                                  "-character alphabet");
  if (ctc_min_length(target) > L)
    throw std::invalid_argument(
        "ctc_loss: target of length " + std::to_string(target.size()) + " (" +
        std::to_string(ctc_min_length(target)) + " with repeats) does not fit " +
        std::to_string(L) + " steps");

  const int S = 2 * static_cast<int>(target.size()) + 1;
  auto ext = [&](int s) { return s % 2 == 0 ? blank : target[s / 2]; };

  std::vector<double> lp(static_cast<std::size_t>(L) * K);
  for (std::size_t i = 0; i < lp.size(); ++i)
    lp[i] = std::log(std::max(probs[i], 1e-300));
  auto logp = [&](int t, int k) { return lp[static_cast<std::size_t>(t) * K + k]; };

  // alpha includes the emission at t, beta excludes it, so that
  // alpha[t][s] + beta[t][s] is the full log-probability mass through (t,s).
  std::vector<double> alpha(static_cast<std::size_t>(L) * S, kLogZero);
  std::vector<double> beta(grad_logits ? alpha.size() : 0, kLogZero);
  auto A = [&](int t, int s) -> double& { return alpha[static_cast<std::size_t>(t) * S + s]; };

  A(0, 0) = logp(0, blank);
  if (S > 1) A(0, 1) = logp(0, ext(1));
  for (int t = 1; t < L; ++t) {
    for (int s = 0; s < S; ++s) {
      double v = A(t - 1, s);
      if (s > 0) v = log_add(v, A(t - 1, s - 1));
      if (s > 1 && ext(s) != blank && ext(s) != ext(s - 2))
        v = log_add(v, A(t - 1, s - 2));
      if (v != kLogZero) A(t, s) = v + logp(t, ext(s));
    }
  }
  double log_p = A(L - 1, S - 1);
  if (S > 1) log_p = log_add(log_p, A(L - 1, S - 2));
  if (!grad_logits) return -log_p;

  auto B = [&](int t, int s) -> double& { return beta[static_cast<std::size_t>(t) * S + s]; };
  B(L - 1, S - 1) = 0.0;
  if (S > 1) B(L - 1, S - 2) = 0.0;
  for (int t = L - 2; t >= 0; --t) {
    for (int s = S - 1; s >= 0; --s) {
      double v = B(t + 1, s) == kLogZero ? kLogZero
                                         : B(t + 1, s) + logp(t + 1, ext(s));
      if (s + 1 < S && B(t + 1, s + 1) != kLogZero)
        v = log_add(v, B(t + 1, s + 1) + logp(t + 1, ext(s + 1)));
      if (s + 2 < S && ext(s + 2) != blank && ext(s + 2) != ext(s) &&
          B(t + 1, s + 2) != kLogZero)
        v = log_add(v, B(t + 1, s + 2) + logp(t + 1, ext(s + 2)));
      B(t, s) = v;
    }
  }

  // d(-ln P)/d(logit[t][k]) = p[t][k] - gamma[t][k]
  grad_logits->assign(static_cast<std::size_t>(L) * K, 0.0);
  for (int t = 0; t < L; ++t) {
    std::vector<double> gamma(K, kLogZero);
    for (int s = 0; s < S; ++s) {
      double m = A(t, s) == kLogZero || B(t, s) == kLogZero ? kLogZero
                                                            : A(t, s) + B(t, s);
      if (m != kLogZero) gamma[ext(s)] = log_add(gamma[ext(s)], m);
    }
    for (int k = 0; k < K; ++k) {
      double g = gamma[k] == kLogZero ? 0.0 : std::exp(gamma[k] - log_p);
      (*grad_logits)[static_cast<std::size_t>(t) * K + k] =
          probs[static_cast<std::size_t>(t) * K + k] - g;
    }
  }
  return -log_p;
}

CtcResult ctc_loss(const Tensor& probs, const LabelString& target, bool want_grad) {
  if (probs.rank() != 2) throw std::invalid_argument("ctc_loss: probs must be [L x K]");
  const int L = probs.dim(0);
  const int K = probs.dim(1);
  std::vector<double> pd(probs.vec().begin(), probs.vec().end());
  CtcResult res;
  if (!want_grad) {
    res.loss = ctc_loss_d(pd, L, K, target, nullptr);
    return res;
  }
  std::vector<double> grad;
  res.loss = ctc_loss_d(pd, L, K, target, &grad);
  res.grad_logits = Tensor({L, K});
  for (std::size_t i = 0; i < grad.size(); ++i)
    res.grad_logits[i] = static_cast<float>(grad[i]);
  return res;
}

CtcDecodeResult ctc_best_path(const Tensor& probs) {
  if (probs.rank() != 2) throw std::invalid_argument("ctc_best_path: probs must be [L x K]");
  const int L = probs.dim(0);
  const int K = probs.dim(1);
  const int blank = K - 1;
  CtcDecodeResult res;
  res.score = 1.0;
  res.path.resize(L);
  for (int t = 0; t < L; ++t) {
    int best = blank;  // blank wins exact ties, then lower class index
    float bv = probs.at2(t, blank);
    for (int k = 0; k < blank; ++k) {
      if (probs.at2(t, k) > bv) {
        bv = probs.at2(t, k);
        best = k;
      }
    }
    res.path[t] = best;
    res.score *= static_cast<double>(bv);
  }
  res.labels = ctc_collapse(res.path, blank);
  return res;
}

}  // namespace lpdr
