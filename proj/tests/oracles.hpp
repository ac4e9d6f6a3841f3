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
//
// Independent reference implementations used only by tests. Everything here
// is written the slow, obvious way and must stay decoupled from the library
// code paths it checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "lpdr/image.hpp"
#include "lpdr/tensor.hpp"

namespace oracle {

// Direct nested-loop convolution, single sample. x:[C,H,W], w:[F,C,kh,kw].
inline lpdr::Tensor conv2d_naive(const lpdr::Tensor& x, const lpdr::Tensor& w,
                                 const std::vector<float>& bias, int stride, int pad) {
  int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  int F = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  int oh = (H + 2 * pad - kh) / stride + 1;
  int ow = (W + 2 * pad - kw) / stride + 1;
  lpdr::Tensor y({F, oh, ow});
  for (int f = 0; f < F; ++f)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        float acc = bias[f];
        for (int c = 0; c < C; ++c)
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
              int iy = oy * stride + ky - pad;
              int ix = ox * stride + kx - pad;
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              acc += w[((static_cast<std::size_t>(f) * C + c) * kh + ky) * kw + kx] *
                     x[(static_cast<std::size_t>(c) * H + iy) * W + ix];
            }
        y[(static_cast<std::size_t>(f) * oh + oy) * ow + ox] = acc;
      }
  return y;
}

// Brute-force max over each window. x:[C,H,W].
inline lpdr::Tensor maxpool_naive(const lpdr::Tensor& x, int win, int stride) {
  int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  int oh = (H - win) / stride + 1, ow = (W - win) / stride + 1;
  lpdr::Tensor y({C, oh, ow});
  for (int c = 0; c < C; ++c)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        float best = -1e30f;
        for (int ky = 0; ky < win; ++ky)
          for (int kx = 0; kx < win; ++kx)
            best = std::max(best, x[(static_cast<std::size_t>(c) * H + oy * stride + ky) * W +
                                    ox * stride + kx]);
        y[(static_cast<std::size_t>(c) * oh + oy) * ow + ox] = best;
      }
  return y;
}

inline std::vector<float> matvec_naive(const std::vector<float>& w, int out_n,
                                       int in_n, const std::vector<float>& x,
                                       const std::vector<float>& b) {
  std::vector<float> y(out_n);
  for (int o = 0; o < out_n; ++o) {
    float acc = b[o];
    for (int i = 0; i < in_n; ++i) acc += w[static_cast<std::size_t>(o) * in_n + i] * x[i];
    y[o] = acc;
  }
  return y;
}

// Recursive flood fill labeling; the reference partition for CCA.
inline std::vector<int> flood_fill_labels(const lpdr::BinaryImage& bin,
                                          int connectivity, int* count_out) {
  std::vector<int> labels(bin.bits.size(), 0);
  int count = 0;
  std::vector<std::pair<int, int>> stack;
  for (int sy = 0; sy < bin.height; ++sy) {
    for (int sx = 0; sx < bin.width; ++sx) {
      if (!bin.at(sx, sy) || labels[static_cast<std::size_t>(sy) * bin.width + sx]) continue;
      ++count;
      stack.push_back({sx, sy});
      labels[static_cast<std::size_t>(sy) * bin.width + sx] = count;
      while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (connectivity == 4 && dx != 0 && dy != 0) continue;
            int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= bin.width || ny >= bin.height) continue;
            std::size_t i = static_cast<std::size_t>(ny) * bin.width + nx;
            if (bin.at(nx, ny) && !labels[i]) {
              labels[i] = count;
              stack.push_back({nx, ny});
            }
          }
      }
    }
  }
  *count_out = count;
  return labels;
}

// Niblack with the same published formula but naive per-window loops; kept
// textually independent of the library implementation.
inline lpdr::BinaryImage niblack_naive(const lpdr::GrayImage& img, int window,
                                       double k, int filt) {
  auto refl = [](int i, int n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
    return i;
  };
  int r = window / 2;
  std::vector<double> fg(img.pixels.size()), bg(img.pixels.size());
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      std::uint64_t s = 0, s2 = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          std::uint64_t v = img.at(refl(x + dx, img.width), refl(y + dy, img.height));
          s += v;
          s2 += v * v;
        }
      int n = window * window;
      double mean = double(s) / n;
      double var = (double(s2) - double(s) * s / n) / n;
      double sd = std::sqrt(std::max(0.0, var));
      fg[static_cast<std::size_t>(y) * img.width + x] = mean + k * sd;
      bg[static_cast<std::size_t>(y) * img.width + x] = mean - k * sd;
    }
  int fr = filt / 2;
  lpdr::BinaryImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double fmax = -1e300, bmin = 1e300;
      for (int dy = -fr; dy <= fr; ++dy)
        for (int dx = -fr; dx <= fr; ++dx) {
          std::size_t i = static_cast<std::size_t>(refl(y + dy, img.height)) * img.width +
                          refl(x + dx, img.width);
          fmax = std::max(fmax, fg[i]);
          bmin = std::min(bmin, bg[i]);
        }
      out.at(x, y) = img.at(x, y) > 0.5 * (fmax + bmin) ? 1 : 0;
    }
  return out;
}

// Brute-force Eq.-1 row NMS straight from the definition.
inline std::vector<float> row_nms_naive(const std::vector<float>& row, int delta) {
  std::vector<float> out(row.size(), 0.0f);
  for (std::size_t x = 0; x < row.size(); ++x) {
    bool keep = true;
    for (std::size_t x2 = 0; x2 < row.size(); ++x2) {
      if (std::abs(static_cast<int>(x2) - static_cast<int>(x)) < delta &&
          row[x2] > row[x]) {
        keep = false;
        break;
      }
    }
    if (keep) out[x] = row[x];
  }
  return out;
}

// Exhaustive CTC: sum the probability of every length-L path whose collapse
// equals the target. Only usable for tiny L and alphabets.
inline double ctc_brute_force(const std::vector<double>& probs, int L, int K,
                              const std::vector<int>& target, int blank) {
  double total = 0.0;
  std::vector<int> path(L, 0);
  std::function<void(int, double)> rec = [&](int t, double p) {
    if (t == L) {
      std::vector<int> collapsed;
      int prev = -1;
      for (int v : path) {
        if (v != prev && v != blank) collapsed.push_back(v);
        prev = v;
      }
      if (collapsed == target) total += p;
      return;
    }
    for (int k = 0; k < K; ++k) {
      path[t] = k;
      rec(t + 1, p * probs[static_cast<std::size_t>(t) * K + k]);
    }
  };
  rec(0, 1.0);
  return total;
}

inline double ctc_brute_force(const lpdr::Tensor& probs, const std::vector<int>& target,
                              int blank) {
  std::vector<double> p(probs.vec().begin(), probs.vec().end());
  return ctc_brute_force(p, probs.dim(0), probs.dim(1), target, blank);
}

// Jacobi rotation eigensolver for small symmetric matrices; reference for the
// PCA fit. Returns eigenvalues descending with matching columns in V.
inline void jacobi_eigen(std::vector<double> a, int n, std::vector<double>& eigvals,
                         std::vector<double>& eigvecs) {
  std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;
  auto A = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * n + c]; };
  auto V = [&](int r, int c) -> double& { return v[static_cast<std::size_t>(r) * n + c]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
    if (off < 1e-22) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(A(p, q)) < 1e-300) continue;
        double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int i = 0; i < n; ++i) {
          double aip = A(i, p), aiq = A(i, q);
          A(i, p) = c * aip - s * aiq;
          A(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          double api = A(p, i), aqi = A(q, i);
          A(p, i) = c * api - s * aqi;
          A(q, i) = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          double vip = V(i, p), viq = V(i, q);
          V(i, p) = c * vip - s * viq;
          V(i, q) = s * vip + c * viq;
        }
      }
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return A(x, x) > A(y, y); });
  eigvals.resize(n);
  eigvecs.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int j = 0; j < n; ++j) {
    eigvals[j] = A(order[j], order[j]);
    for (int i = 0; i < n; ++i)
      eigvecs[static_cast<std::size_t>(i) * n + j] = V(i, order[j]);
  }
}

}  // namespace oracle
