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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lpdr/gemm.hpp"

namespace lpdr {

struct Shape3 {
  int c = 0, h = 0, w = 0;
  int count() const { return c * h * w; }
  bool operator==(const Shape3&) const = default;
};

enum class LayerKind : std::uint8_t {
  Conv = 0,
  MaxPool = 1,
  Relu = 2,
  FullyConnected = 3,
  Dropout = 4,
  Softmax = 5,
};

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int out_channels = 0;          // conv filters / fc neurons
  int kernel_h = 0, kernel_w = 0;  // conv kernel or pool window
  int stride = 1;
  int pad = 0;
  float drop_prob = 0.0f;

  static LayerSpec conv(int filters, int k, int stride = 1, int pad = 0) {
    return {LayerKind::Conv, filters, k, k, stride, pad, 0.0f};
  }
  static LayerSpec maxpool(int window, int stride) {
    return {LayerKind::MaxPool, 0, window, window, stride, 0, 0.0f};
  }
  static LayerSpec relu() { return {LayerKind::Relu}; }
  static LayerSpec fc(int neurons) {
    return {LayerKind::FullyConnected, neurons};
  }
  static LayerSpec dropout(float p) {
    return {LayerKind::Dropout, 0, 0, 0, 1, 0, p};
  }
  static LayerSpec softmax() { return {LayerKind::Softmax}; }
};

// floor((in + 2p - k) / s) + 1
inline int conv_out_extent(int in, int k, int s, int p) {
  return (in + 2 * p - k) / s + 1;
}

// Output shape of a layer; throws on shapes that do not compose.
Shape3 layer_output_shape(const LayerSpec& spec, const Shape3& in);

// ---------------------------------------------------------------------------
// Per-sample kernels. x is a [C,H,W] row-major buffer. Templated on the
// scalar type: float in production, double inside the finite-difference
// gradient checker so that FD noise stays far below the comparison tolerance.

// col layout: [C*kh*kw rows][oh*ow cols]
template <typename T>
void im2col(const T* x, const Shape3& in, int kh, int kw, int stride, int pad,
            T* col, int oh, int ow) {
  const int ospatial = oh * ow;
  for (int c = 0; c < in.c; ++c) {
    const T* plane = x + static_cast<std::size_t>(c) * in.h * in.w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        T* row = col + (static_cast<std::size_t>(c) * kh * kw + ky * kw + kx) * ospatial;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride + ky - pad;
          T* dst = row + static_cast<std::size_t>(oy) * ow;
          if (iy < 0 || iy >= in.h) {
            std::fill(dst, dst + ow, T(0));
            continue;
          }
          const T* srow = plane + static_cast<std::size_t>(iy) * in.w;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * stride + kx - pad;
            dst[ox] = (ix >= 0 && ix < in.w) ? srow[ix] : T(0);
          }
        }
      }
    }
  }
}

// Inverse of im2col: scatter-add columns back into the image.
template <typename T>
void col2im_acc(const T* col, const Shape3& in, int kh, int kw, int stride,
                int pad, T* x, int oh, int ow) {
  const int ospatial = oh * ow;
  for (int c = 0; c < in.c; ++c) {
    T* plane = x + static_cast<std::size_t>(c) * in.h * in.w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const T* row = col + (static_cast<std::size_t>(c) * kh * kw + ky * kw + kx) * ospatial;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= in.h) continue;
          T* srow = plane + static_cast<std::size_t>(iy) * in.w;
          const T* src = row + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < in.w) srow[ix] += src[ox];
          }
        }
      }
    }
  }
}

// y[F,oh,ow] = w[F,C,kh,kw] * x + b. colbuf is scratch, resized as needed.
template <typename T>
void conv_forward_sample(const T* x, const Shape3& in, const T* w, const T* b,
                         const LayerSpec& s, T* y, const Shape3& out,
                         std::vector<T>& colbuf) {
  const int K = in.c * s.kernel_h * s.kernel_w;
  const int ospatial = out.h * out.w;
  colbuf.resize(static_cast<std::size_t>(K) * ospatial);
  im2col(x, in, s.kernel_h, s.kernel_w, s.stride, s.pad, colbuf.data(), out.h, out.w);
  for (int f = 0; f < out.c; ++f)
    std::fill(y + static_cast<std::size_t>(f) * ospatial,
              y + static_cast<std::size_t>(f + 1) * ospatial, b[f]);
  gemm_acc(out.c, ospatial, K, w, colbuf.data(), y);
}

template <typename T>
void maxpool_forward_sample(const T* x, const Shape3& in, const LayerSpec& s,
                            T* y, const Shape3& out, int* argmax) {
  const int ospatial = out.h * out.w;
  for (int c = 0; c < in.c; ++c) {
    const T* plane = x + static_cast<std::size_t>(c) * in.h * in.w;
    for (int oy = 0; oy < out.h; ++oy) {
      for (int ox = 0; ox < out.w; ++ox) {
        int y0 = oy * s.stride, x0 = ox * s.stride;
        int best = y0 * in.w + x0;
        T bv = plane[best];
        for (int ky = 0; ky < s.kernel_h; ++ky) {
          for (int kx = 0; kx < s.kernel_w; ++kx) {
            int idx = (y0 + ky) * in.w + (x0 + kx);
            if (plane[idx] > bv) {  // first max wins ties
              bv = plane[idx];
              best = idx;
            }
          }
        }
        std::size_t o = static_cast<std::size_t>(c) * ospatial + oy * out.w + ox;
        y[o] = bv;
        if (argmax) argmax[o] = c * in.h * in.w + best;
      }
    }
  }
}

template <typename T>
void relu_forward(const T* x, std::size_t n, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void fc_forward_sample(const T* x, int in_n, const T* w, const T* b, int out_n,
                       T* y) {
  for (int i = 0; i < out_n; ++i) y[i] = b[i];
  gemm_bt_acc(1, out_n, in_n, x, w, y);
}

// Channel-wise softmax at every spatial location; x,y layout [K][spatial].
// Max-subtraction keeps it stable for any finite logits.
template <typename T>
void softmax_channel(const T* x, int K, int spatial, T* y) {
  for (int p = 0; p < spatial; ++p) {
    T mx = x[p];
    for (int k = 1; k < K; ++k)
      mx = std::max(mx, x[static_cast<std::size_t>(k) * spatial + p]);
    T sum = 0;
    for (int k = 0; k < K; ++k) {
      T e = std::exp(x[static_cast<std::size_t>(k) * spatial + p] - mx);
      y[static_cast<std::size_t>(k) * spatial + p] = e;
      sum += e;
    }
    T inv = T(1) / sum;
    for (int k = 0; k < K; ++k) y[static_cast<std::size_t>(k) * spatial + p] *= inv;
  }
}

}  // namespace lpdr
