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

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpdr {

// Dense n-dimensional float32 array, row-major. Carries images-as-batches,
// weights, activations and gradients. Batched image tensors use the
// [N, C, H, W] convention throughout.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> dims) : dims_(std::move(dims)) {
    data_.assign(element_count(dims_), 0.0f);
  }
  Tensor(std::vector<int> dims, std::vector<float> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    if (element_count(dims_) != data_.size())
      throw std::invalid_argument("Tensor: dims do not match payload size");
  }

  static std::size_t element_count(const std::vector<int>& dims) {
    std::size_t n = 1;
    for (int d : dims) {
      if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
      n *= static_cast<std::size_t>(d);
    }
    return dims.empty() ? 0 : n;
  }

  const std::vector<int>& dims() const { return dims_; }
  int dim(int i) const { return dims_.at(static_cast<std::size_t>(i)); }
  int rank() const { return static_cast<int>(dims_.size()); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::vector<float>& vec() { return data_; }
  const std::vector<float>& vec() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // Element access for rank-4 [n][c][y][x] and rank-2 [r][c] tensors.
  float& at4(int n, int c, int y, int x) {
    return data_[((static_cast<std::size_t>(n) * dims_[1] + c) * dims_[2] + y) * dims_[3] + x];
  }
  float at4(int n, int c, int y, int x) const {
    return data_[((static_cast<std::size_t>(n) * dims_[1] + c) * dims_[2] + y) * dims_[3] + x];
  }
  float& at2(int r, int c) { return data_[static_cast<std::size_t>(r) * dims_[1] + c]; }
  float at2(int r, int c) const { return data_[static_cast<std::size_t>(r) * dims_[1] + c]; }

  void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor& o) const { return dims_ == o.dims_; }

  bool all_finite() const {
    for (float v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(dims_[i]);
    }
    return s + "]";
  }

 private:
  std::vector<int> dims_;
  std::vector<float> data_;
};

}  // namespace lpdr
