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

#include "lpdr/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lpdr {

namespace {

inline std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, v)));
}

// symmetric reflection with edge repeat: -1 -> 0, n -> n-1
inline int reflect(int i, int n) {
  if (i < 0) i = -i - 1;
  if (i >= n) i = 2 * n - i - 1;
  return i;
}

}  // namespace

GrayImage contrast_stretch(const GrayImage& img, double saturate_fraction) {
  if (saturate_fraction < 0.0 || saturate_fraction >= 0.5)
    throw std::invalid_argument("contrast_stretch: fraction must be in [0, 0.5)");
  std::size_t hist[256] = {};
  for (auto p : img.pixels) ++hist[p];
  const std::size_t total = img.pixels.size();
  const std::size_t k = static_cast<std::size_t>(saturate_fraction * total);

  int lo = 0, hi = 255;
  std::size_t acc = 0;
  for (int v = 0; v < 256; ++v) {
    acc += hist[v];
    if (acc > k) {
      lo = v;
      break;
    }
  }
  acc = 0;
  for (int v = 255; v >= 0; --v) {
    acc += hist[v];
    if (acc > k) {
      hi = v;
      break;
    }
  }
  if (hi <= lo) return img;  // degenerate range

  GrayImage out(img.width, img.height);
  const double scale = 255.0 / (hi - lo);
  for (std::size_t i = 0; i < total; ++i)
    out.pixels[i] = clamp_u8(std::round((img.pixels[i] - lo) * scale));
  return out;
}

GrayImage sobel_vertical(const GrayImage& img) {
  if (img.width < 3 || img.height < 3)
    throw std::invalid_argument("sobel_vertical: image must be at least 3x3");
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    int ym = reflect(y - 1, img.height), yp = reflect(y + 1, img.height);
    for (int x = 0; x < img.width; ++x) {
      int xm = reflect(x - 1, img.width), xp = reflect(x + 1, img.width);
      int gx = -img.at(xm, ym) + img.at(xp, ym) - 2 * img.at(xm, y) +
               2 * img.at(xp, y) - img.at(xm, yp) + img.at(xp, yp);
      out.at(x, y) = static_cast<std::uint8_t>(std::min(255, std::abs(gx)));
    }
  }
  return out;
}

namespace {

template <typename Img>
std::vector<long long> project_impl(const Img& img, Axis axis) {
  std::vector<long long> sums(axis == Axis::Rows ? img.height : img.width, 0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      sums[axis == Axis::Rows ? y : x] += img.at(x, y);
  return sums;
}

}  // namespace

std::vector<long long> project(const GrayImage& img, Axis axis) {
  return project_impl(img, axis);
}
std::vector<long long> project(const BinaryImage& img, Axis axis) {
  return project_impl(img, axis);
}

BinaryImage niblack_binarize(const GrayImage& img, const NiblackConfig& cfg) {
  const int w = cfg.window;
  if (w < 3 || w % 2 == 0 || w > std::min(img.width, img.height))
    throw std::invalid_argument("niblack_binarize: bad window");
  const int r = w / 2;
  const int n = w * w;

  // threshold surfaces from exact integer window sums
  std::vector<double> fg_est(img.pixels.size()), bg_est(img.pixels.size());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      std::uint64_t s = 0, s2 = 0;
      for (int dy = -r; dy <= r; ++dy) {
        int yy = reflect(y + dy, img.height);
        for (int dx = -r; dx <= r; ++dx) {
          std::uint64_t v = img.at(reflect(x + dx, img.width), yy);
          s += v;
          s2 += v * v;
        }
      }
      double mean = static_cast<double>(s) / n;
      double var = (static_cast<double>(s2) - static_cast<double>(s) * s / n) / n;
      double sd = std::sqrt(std::max(0.0, var));
      std::size_t i = static_cast<std::size_t>(y) * img.width + x;
      fg_est[i] = mean + cfg.k * sd;
      bg_est[i] = mean - cfg.k * sd;
    }
  }

  const int fr = cfg.filter_window / 2;
  BinaryImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double fg = -1e300, bg = 1e300;
      for (int dy = -fr; dy <= fr; ++dy) {
        int yy = reflect(y + dy, img.height);
        for (int dx = -fr; dx <= fr; ++dx) {
          int xx = reflect(x + dx, img.width);
          std::size_t i = static_cast<std::size_t>(yy) * img.width + xx;
          fg = std::max(fg, fg_est[i]);
          bg = std::min(bg, bg_est[i]);
        }
      }
      double threshold = 0.5 * (fg + bg);
      out.at(x, y) = img.at(x, y) > threshold ? 1 : 0;
    }
  }
  return out;
}

BinaryImage choose_polarity(const BinaryImage& bin, double margin) {
  long long white = 0;
  for (auto b : bin.bits) white += b;
  long long black = static_cast<long long>(bin.bits.size()) - white;
  if (static_cast<double>(white) > margin * static_cast<double>(black)) {
    BinaryImage inv(bin.width, bin.height);
    for (std::size_t i = 0; i < bin.bits.size(); ++i) inv.bits[i] = bin.bits[i] ? 0 : 1;
    return inv;
  }
  return bin;
}

namespace {

struct UnionFind {
  std::vector<std::int32_t> parent;
  std::int32_t add() {
    parent.push_back(static_cast<std::int32_t>(parent.size()));
    return parent.back();
  }
  std::int32_t find(std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

ComponentLabeling connected_components(const BinaryImage& bin, int connectivity) {
  if (connectivity != 4 && connectivity != 8)
    throw std::invalid_argument("connected_components: connectivity must be 4 or 8");
  ComponentLabeling cl;
  cl.width = bin.width;
  cl.height = bin.height;
  cl.labels.assign(bin.bits.size(), 0);
  if (bin.bits.empty()) return cl;

  UnionFind uf;
  uf.add();  // provisional label 0 = background
  auto lab = [&](int x, int y) -> std::int32_t& {
    return cl.labels[static_cast<std::size_t>(y) * bin.width + x];
  };

  for (int y = 0; y < bin.height; ++y) {
    for (int x = 0; x < bin.width; ++x) {
      if (!bin.at(x, y)) continue;
      std::int32_t left = x > 0 ? lab(x - 1, y) : 0;
      std::int32_t up = y > 0 ? lab(x, y - 1) : 0;
      std::int32_t ul = (connectivity == 8 && x > 0 && y > 0) ? lab(x - 1, y - 1) : 0;
      std::int32_t ur = (connectivity == 8 && y > 0 && x + 1 < bin.width) ? lab(x + 1, y - 1) : 0;
      std::int32_t l = 0;
      for (std::int32_t nb : {left, up, ul, ur}) {
        if (!nb) continue;
        if (!l)
          l = nb;
        else
          uf.unite(l, nb);
      }
      if (!l) l = uf.add();
      lab(x, y) = l;
    }
  }

  // compact to 1..count in raster order of first occurrence
  std::vector<std::int32_t> remap(uf.parent.size(), 0);
  for (auto& l : cl.labels) {
    if (!l) continue;
    std::int32_t root = uf.find(l);
    if (!remap[root]) {
      remap[root] = ++cl.count;
      cl.boxes.push_back({cl.width, cl.height, 0, 0});
      cl.pixel_counts.push_back(0);
    }
    l = remap[root];
  }
  // tight boxes + pixel counts
  for (int y = 0; y < bin.height; ++y) {
    for (int x = 0; x < bin.width; ++x) {
      std::int32_t l = lab(x, y);
      if (!l) continue;
      Rect& b = cl.boxes[l - 1];
      b.x = std::min(b.x, x);
      b.y = std::min(b.y, y);
      b.w = std::max(b.w, x - b.x + 1);
      b.h = std::max(b.h, y - b.y + 1);
      ++cl.pixel_counts[l - 1];
    }
  }
  return cl;
}

GrayImage lbp_map(const GrayImage& img) {
  if (img.width < 3 || img.height < 3)
    throw std::invalid_argument("lbp_map: image must be at least 3x3");
  // clockwise from the top-left, bit b = (1 << b)
  static const int off[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {1, 0},
                                {1, 1},   {0, 1},  {-1, 1}, {-1, 0}};
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      std::uint8_t center = img.at(x, y);
      int code = 0;
      for (int b = 0; b < 8; ++b) {
        int nx = reflect(x + off[b][0], img.width);
        int ny = reflect(y + off[b][1], img.height);
        if (img.at(nx, ny) >= center) code |= 1 << b;
      }
      out.at(x, y) = static_cast<std::uint8_t>(code);
    }
  }
  return out;
}

GrayImage rotate_image(const GrayImage& img, double degrees, std::uint8_t fill) {
  const double a = degrees * M_PI / 180.0;
  const double ca = std::cos(a), sa = std::sin(a);
  const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
  GrayImage out(img.width, img.height, fill);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      // inverse map: rotate destination by -a around the center
      double dx = x - cx, dy = y - cy;
      double sx = ca * dx + sa * dy + cx;
      double sy = -sa * dx + ca * dy + cy;
      int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      if (x0 < -1 || y0 < -1 || x0 >= img.width || y0 >= img.height) continue;
      double fx = sx - x0, fy = sy - y0;
      auto sample = [&](int xx, int yy) -> double {
        if (xx < 0 || yy < 0 || xx >= img.width || yy >= img.height) return fill;
        return img.at(xx, yy);
      };
      double v = sample(x0, y0) * (1 - fx) * (1 - fy) +
                 sample(x0 + 1, y0) * fx * (1 - fy) +
                 sample(x0, y0 + 1) * (1 - fx) * fy +
                 sample(x0 + 1, y0 + 1) * fx * fy;
      out.at(x, y) = clamp_u8(std::round(v));
    }
  }
  return out;
}

DeskewResult hough_deskew(const GrayImage& img, double angle_range) {
  if (angle_range < 0.0 || angle_range > 45.0)
    throw std::invalid_argument("hough_deskew: angle range must be within [0, 45]");

  // gradient-magnitude edge points
  std::vector<std::pair<int, int>> points;
  long long grad_sum = 0;
  std::vector<int> mag(img.pixels.size(), 0);
  for (int y = 1; y + 1 < img.height; ++y) {
    for (int x = 1; x + 1 < img.width; ++x) {
      int gx = -img.at(x - 1, y - 1) + img.at(x + 1, y - 1) - 2 * img.at(x - 1, y) +
               2 * img.at(x + 1, y) - img.at(x - 1, y + 1) + img.at(x + 1, y + 1);
      int gy = -img.at(x - 1, y - 1) - 2 * img.at(x, y - 1) - img.at(x + 1, y - 1) +
               img.at(x - 1, y + 1) + 2 * img.at(x, y + 1) + img.at(x + 1, y + 1);
      int m = std::abs(gx) + std::abs(gy);
      mag[static_cast<std::size_t>(y) * img.width + x] = m;
      grad_sum += m;
    }
  }
  const double mean_mag =
      static_cast<double>(grad_sum) / std::max(1, (img.width - 2) * (img.height - 2));
  const int edge_thr = std::max(64, static_cast<int>(3.0 * mean_mag));
  for (int y = 1; y + 1 < img.height; ++y)
    for (int x = 1; x + 1 < img.width; ++x)
      if (mag[static_cast<std::size_t>(y) * img.width + x] > edge_thr)
        points.emplace_back(x, y);

  const double step = 0.25;
  const int nangles = static_cast<int>(2.0 * angle_range / step) + 1;
  const int diag = static_cast<int>(std::ceil(std::hypot(img.width, img.height)));
  const int nrho = 2 * diag + 1;
  std::vector<int> acc(static_cast<std::size_t>(nangles) * nrho, 0);

  for (auto [x, y] : points) {
    for (int ai = 0; ai < nangles; ++ai) {
      // line inclination t; normal direction is t + 90 degrees
      double t = (-angle_range + ai * step) * M_PI / 180.0;
      double rho = -x * std::sin(t) + y * std::cos(t);
      int ri = static_cast<int>(std::lround(rho)) + diag;
      if (ri >= 0 && ri < nrho) ++acc[static_cast<std::size_t>(ai) * nrho + ri];
    }
  }

  int best = 0, best_ai = -1;
  for (int ai = 0; ai < nangles; ++ai)
    for (int ri = 0; ri < nrho; ++ri) {
      int v = acc[static_cast<std::size_t>(ai) * nrho + ri];
      if (v > best) {
        best = v;
        best_ai = ai;
      }
    }

  const int min_votes = std::max(8, img.width / 4);
  if (best_ai < 0 || best < min_votes) return {img, 0.0};

  double angle = -angle_range + best_ai * step;
  // mean intensity keeps the revealed corners unobtrusive
  long long sum = std::accumulate(img.pixels.begin(), img.pixels.end(), 0LL);
  auto fill = static_cast<std::uint8_t>(sum / static_cast<long long>(img.pixels.size()));
  return {rotate_image(img, -angle, fill), angle};
}

GrayImage resize_bilinear(const GrayImage& img, int new_w, int new_h) {
  if (new_w <= 0 || new_h <= 0)
    throw std::invalid_argument("resize_bilinear: bad target size");
  if (new_w == img.width && new_h == img.height) return img;
  GrayImage out(new_w, new_h);
  const double sx = static_cast<double>(img.width) / new_w;
  const double sy = static_cast<double>(img.height) / new_h;
  for (int y = 0; y < new_h; ++y) {
    double fsy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fsy));
    double fy = fsy - y0;
    int ya = std::clamp(y0, 0, img.height - 1);
    int yb = std::clamp(y0 + 1, 0, img.height - 1);
    for (int x = 0; x < new_w; ++x) {
      double fsx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fsx));
      double fx = fsx - x0;
      int xa = std::clamp(x0, 0, img.width - 1);
      int xb = std::clamp(x0 + 1, 0, img.width - 1);
      double v = img.at(xa, ya) * (1 - fx) * (1 - fy) + img.at(xb, ya) * fx * (1 - fy) +
                 img.at(xa, yb) * (1 - fx) * fy + img.at(xb, yb) * fx * fy;
      out.at(x, y) = clamp_u8(std::round(v));
    }
  }
  return out;
}

GrayImage pad(const GrayImage& img, int left, int right, int top, int bottom,
              std::uint8_t fill) {
  if (left < 0 || right < 0 || top < 0 || bottom < 0)
    throw std::invalid_argument("pad: negative amounts");
  GrayImage out(img.width + left + right, img.height + top + bottom, fill);
  for (int y = 0; y < img.height; ++y)
    std::copy_n(&img.pixels[static_cast<std::size_t>(y) * img.width], img.width,
                &out.pixels[static_cast<std::size_t>(y + top) * out.width + left]);
  return out;
}

GrayImage crop(const GrayImage& img, const Rect& r) {
  int x0 = std::max(0, r.x), y0 = std::max(0, r.y);
  int x1 = std::min(img.width, r.x + r.w), y1 = std::min(img.height, r.y + r.h);
  if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("crop: empty region");
  GrayImage out(x1 - x0, y1 - y0);
  for (int y = y0; y < y1; ++y)
    std::copy_n(&img.pixels[static_cast<std::size_t>(y) * img.width + x0], x1 - x0,
                &out.pixels[static_cast<std::size_t>(y - y0) * out.width]);
  return out;
}

}  // namespace lpdr
