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

#include <cstddef>

namespace lpdr {

// C[M x N] += A[M x K] * B[K x N], all row-major. Rank-1 update formulation:
// the inner loop has no cross-iteration dependency, so it vectorizes without
// relaxed float semantics and the summation order is fixed (k ascending),
// which keeps results bit-reproducible for any M,N,K.
// Templated so the gradient checker can evaluate the same network in double.
template <typename T>
void gemm_acc(int M, int N, int K, const T* A, const T* B, T* C) {
  int m = 0;
  for (; m + 4 <= M; m += 4) {
    const T* a0 = A + static_cast<std::size_t>(m + 0) * K;
    const T* a1 = A + static_cast<std::size_t>(m + 1) * K;
    const T* a2 = A + static_cast<std::size_t>(m + 2) * K;
    const T* a3 = A + static_cast<std::size_t>(m + 3) * K;
    T* c0 = C + static_cast<std::size_t>(m + 0) * N;
    T* c1 = C + static_cast<std::size_t>(m + 1) * N;
    T* c2 = C + static_cast<std::size_t>(m + 2) * N;
    T* c3 = C + static_cast<std::size_t>(m + 3) * N;
    for (int k = 0; k < K; ++k) {
      const T* b = B + static_cast<std::size_t>(k) * N;
      T w0 = a0[k], w1 = a1[k], w2 = a2[k], w3 = a3[k];
      for (int n = 0; n < N; ++n) {
        c0[n] += w0 * b[n];
        c1[n] += w1 * b[n];
        c2[n] += w2 * b[n];
        c3[n] += w3 * b[n];
      }
    }
  }
  for (; m < M; ++m) {
    const T* a = A + static_cast<std::size_t>(m) * K;
    T* c = C + static_cast<std::size_t>(m) * N;
    for (int k = 0; k < K; ++k) {
      const T* b = B + static_cast<std::size_t>(k) * N;
      T w = a[k];
      for (int n = 0; n < N; ++n) c[n] += w * b[n];
    }
  }
}

// C[M x N] += A^T[K x M] * B[K x N]; A is stored K x M row-major.
// Used for input gradients (W^T * dY) without materializing the transpose.
template <typename T>
void gemm_at_acc(int M, int N, int K, const T* A, const T* B, T* C) {
  for (int k = 0; k < K; ++k) {
    const T* arow = A + static_cast<std::size_t>(k) * M;
    const T* b = B + static_cast<std::size_t>(k) * N;
    for (int m = 0; m < M; ++m) {
      T w = arow[m];
      T* c = C + static_cast<std::size_t>(m) * N;
      for (int n = 0; n < N; ++n) c[n] += w * b[n];
    }
  }
}

// C[M x N] += A[M x K] * B^T[N x K]; B is stored N x K row-major.
// Used for weight gradients (dY * X^T) where both operands are row-major.
template <typename T>
void gemm_bt_acc(int M, int N, int K, const T* A, const T* B, T* C) {
  for (int m = 0; m < M; ++m) {
    const T* a = A + static_cast<std::size_t>(m) * K;
    T* c = C + static_cast<std::size_t>(m) * N;
    for (int n = 0; n < N; ++n) {
      const T* b = B + static_cast<std::size_t>(n) * K;
      T acc0 = 0, acc1 = 0, acc2 = 0, acc3 = 0;
      int k = 0;
      for (; k + 4 <= K; k += 4) {
        acc0 += a[k + 0] * b[k + 0];
        acc1 += a[k + 1] * b[k + 1];
        acc2 += a[k + 2] * b[k + 2];
        acc3 += a[k + 3] * b[k + 3];
      }
      T acc = ((acc0 + acc1) + (acc2 + acc3));
      for (; k < K; ++k) acc += a[k] * b[k];
      c[n] += acc;
    }
  }
}

}  // namespace lpdr
