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

#include "lpdr/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "lpdr/image_ops.hpp"

namespace lpdr {

char class_to_char(int cls) {
  if (cls < 0 || cls >= kAlphabetSize) throw std::invalid_argument("bad class");
  return cls < 10 ? static_cast<char>('0' + cls) : static_cast<char>('A' + cls - 10);
}

int char_to_class(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'Z') return 10 + c - 'A';
  return -1;
}

std::string labels_to_string(const std::vector<int>& labels) {
  std::string s;
  for (int l : labels) s.push_back(class_to_char(l));
  return s;
}

std::vector<int> string_to_labels(const std::string& s) {
  std::vector<int> out;
  for (char c : s) {
    int cls = char_to_class(c);
    if (cls < 0) throw std::invalid_argument(std::string("invalid plate character '") + c + "'");
    out.push_back(cls);
  }
  return out;
}

namespace {

// 5x7 glyph masks. Lookalike pairs are deliberately disambiguated: 0 carries
// a slash (vs O), 1 has a flag and base (vs serifed I), B has square corners
// (vs 8), 5/S and 2/Z differ in their corners.
const char* const kGlyphs[kAlphabetSize][7] = {
    {" ### ", "#   #", "#  ##", "# # #", "##  #", "#   #", " ### "},  // 0
    {"  #  ", " ##  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "},  // 1
    {" ### ", "#   #", "    #", "   # ", "  #  ", " #   ", "#####"},  // 2
    {" ### ", "#   #", "    #", "  ## ", "    #", "#   #", " ### "},  // 3
    {"   # ", "  ## ", " # # ", "#  # ", "#####", "   # ", "   # "},  // 4
    {"#####", "#    ", "#    ", "#### ", "    #", "#   #", " ### "},  // 5
    {" ### ", "#    ", "#    ", "#### ", "#   #", "#   #", " ### "},  // 6
    {"#####", "    #", "   # ", "  #  ", "  #  ", "  #  ", "  #  "},  // 7
    {" ### ", "#   #", "#   #", " ### ", "#   #", "#   #", " ### "},  // 8
    {" ### ", "#   #", "#   #", " ####", "    #", "    #", " ### "},  // 9
    {" ### ", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"},  // A
    {"#### ", "#   #", "#   #", "#### ", "#   #", "#   #", "#### "},  // B
    {" ####", "#    ", "#    ", "#    ", "#    ", "#    ", " ####"},  // C
    {"#### ", "#   #", "#   #", "#   #", "#   #", "#   #", "#### "},  // D
    {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#####"},  // E
    {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#    "},  // F
    {" ####", "#    ", "#    ", "#  ##", "#   #", "#   #", " ### "},  // G
    {"#   #", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"},  // H
    {" ### ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "},  // I
    {"  ###", "   # ", "   # ", "   # ", "   # ", "#  # ", " ##  "},  // J
    {"#   #", "#  # ", "# #  ", "##   ", "# #  ", "#  # ", "#   #"},  // K
    {"#    ", "#    ", "#    ", "#    ", "#    ", "#    ", "#####"},  // L
    {"#   #", "## ##", "# # #", "# # #", "#   #", "#   #", "#   #"},  // M
    {"#   #", "##  #", "##  #", "# # #", "#  ##", "#  ##", "#   #"},  // N
    {" ### ", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "},  // O
    {"#### ", "#   #", "#   #", "#### ", "#    ", "#    ", "#    "},  // P
    {" ### ", "#   #", "#   #", "#   #", "# # #", "#  # ", " ## #"},  // Q
    {"#### ", "#   #", "#   #", "#### ", "# #  ", "#  # ", "#   #"},  // R
    {" ####", "#    ", "#    ", " ### ", "    #", "    #", "#### "},  // S
    {"#####", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  "},  // T
    {"#   #", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "},  // U
    {"#   #", "#   #", "#   #", "#   #", " # # ", " # # ", "  #  "},  // V
    {"#   #", "#   #", "#   #", "# # #", "# # #", "## ##", "#   #"},  // W
    {"#   #", "#   #", " # # ", "  #  ", " # # ", "#   #", "#   #"},  // X
    {"#   #", "#   #", " # # ", "  #  ", "  #  ", "  #  ", "  #  "},  // Y
    {"#####", "    #", "   # ", "  #  ", " #   ", "#    ", "#####"},  // Z
};

constexpr int kGlyphW = 5, kGlyphH = 7;
constexpr int kStyles = 3;  // 0 plain, 1 bold, 2 condensed

BinaryImage dilate3(const BinaryImage& in) {
  BinaryImage out(in.width, in.height);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      bool on = false;
      for (int dy = -1; dy <= 1 && !on; ++dy)
        for (int dx = -1; dx <= 1 && !on; ++dx) {
          int nx = x + dx, ny = y + dy;
          if (nx >= 0 && ny >= 0 && nx < in.width && ny < in.height && in.at(nx, ny))
            on = true;
        }
      out.at(x, y) = on ? 1 : 0;
    }
  return out;
}

}  // namespace

int glyph_style_count() { return kStyles; }

BinaryImage render_glyph(int cls, int style, int height) {
  if (cls < 0 || cls >= kAlphabetSize) throw std::invalid_argument("bad glyph class");
  if (style < 0 || style >= kStyles) throw std::invalid_argument("bad glyph style");
  if (height < kGlyphH) height = kGlyphH;
  const double aspect = style == 2 ? 0.52 : 0.72;  // width / height
  int width = std::max(3, static_cast<int>(std::lround(height * aspect)));
  BinaryImage out(width, height);
  for (int y = 0; y < height; ++y) {
    int gy = std::min(kGlyphH - 1, y * kGlyphH / height);
    for (int x = 0; x < width; ++x) {
      int gx = std::min(kGlyphW - 1, x * kGlyphW / width);
      out.at(x, y) = kGlyphs[cls][gy][gx] == '#' ? 1 : 0;
    }
  }
  if (style == 1) out = dilate3(out);
  return out;
}

namespace {

void add_noise_and_lighting(GrayImage& img, double noise_sigma, double lighting_amp,
                            Rng& rng) {
  double ax = 0, ay = 0;
  if (lighting_amp > 0) {
    ax = rng.uniform(-lighting_amp, lighting_amp);
    ay = rng.uniform(-lighting_amp, lighting_amp);
  }
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double v = img.at(x, y);
      if (lighting_amp > 0)
        v += ax * (static_cast<double>(x) / img.width - 0.5) +
             ay * (static_cast<double>(y) / img.height - 0.5);
      if (noise_sigma > 0) v += rng.gaussian() * noise_sigma;
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
}

// dst -> src affine about a center, plus the forward map for box tracking
struct Affine {
  double a = 1, b = 0, c = 0, d = 1, tx = 0, ty = 0, cx = 0, cy = 0;

  static Affine inverse_of(double rot_deg, double shear, double dx, double dy,
                           double cx, double cy) {
    // forward linear part F = R(rot) * Shear(shear)
    double t = rot_deg * M_PI / 180.0;
    double ca = std::cos(t), sa = std::sin(t);
    double f00 = ca, f01 = ca * shear - sa;
    double f10 = sa, f11 = sa * shear + ca;
    double det = f00 * f11 - f01 * f10;
    Affine inv;
    inv.a = f11 / det;
    inv.b = -f01 / det;
    inv.c = -f10 / det;
    inv.d = f00 / det;
    inv.tx = -dx;
    inv.ty = -dy;
    inv.cx = cx;
    inv.cy = cy;
    return inv;
  }

  void src_of(double x, double y, double* sx, double* sy) const {
    double px = x + tx - cx, py = y + ty - cy;
    *sx = a * px + b * py + cx;
    *sy = c * px + d * py + cy;
  }

  void dst_of(double sx, double sy, double* x, double* y) const {
    double px = sx - cx, py = sy - cy;
    double det = a * d - b * c;
    double fx = (d * px - b * py) / det;
    double fy = (-c * px + a * py) / det;
    *x = fx + cx - tx;
    *y = fy + cy - ty;
  }
};

GrayImage warp(const GrayImage& src, const Affine& m, std::uint8_t fill) {
  GrayImage out(src.width, src.height, fill);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      double sx, sy;
      m.src_of(x, y, &sx, &sy);
      int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      if (x0 < -1 || y0 < -1 || x0 >= src.width || y0 >= src.height) continue;
      double fx = sx - x0, fy = sy - y0;
      auto at = [&](int xx, int yy) -> double {
        if (xx < 0 || yy < 0 || xx >= src.width || yy >= src.height) return fill;
        return src.at(xx, yy);
      };
      double v = at(x0, y0) * (1 - fx) * (1 - fy) + at(x0 + 1, y0) * fx * (1 - fy) +
                 at(x0, y0 + 1) * (1 - fx) * fy + at(x0 + 1, y0 + 1) * fx * fy;
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
    }
  return out;
}

Rect map_box(const Rect& r, const Affine& m, int img_w, int img_h) {
  double xs[4] = {double(r.x), double(r.x2()), double(r.x), double(r.x2())};
  double ys[4] = {double(r.y), double(r.y), double(r.y2()), double(r.y2())};
  double minx = 1e9, miny = 1e9, maxx = -1e9, maxy = -1e9;
  for (int i = 0; i < 4; ++i) {
    double dx, dy;
    m.dst_of(xs[i], ys[i], &dx, &dy);
    minx = std::min(minx, dx);
    maxx = std::max(maxx, dx);
    miny = std::min(miny, dy);
    maxy = std::max(maxy, dy);
  }
  int x0 = std::clamp(static_cast<int>(std::floor(minx)), 0, img_w - 1);
  int y0 = std::clamp(static_cast<int>(std::floor(miny)), 0, img_h - 1);
  int x1 = std::clamp(static_cast<int>(std::ceil(maxx)), x0 + 1, img_w);
  int y1 = std::clamp(static_cast<int>(std::ceil(maxy)), y0 + 1, img_h);
  return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace

GrayImage synth_char(int cls, const AugmentConfig& cfg) {
  if (cls < 0 || cls >= kAlphabetSize) throw std::invalid_argument("synth_char: bad class");
  Rng rng(cfg.seed);
  Rng look = rng.derive("look");
  const int size = 24;
  int style = static_cast<int>(look.uniform_int(kStyles));
  int bg = look.uniform_int(150, 235);
  int fg = look.uniform_int(15, 75);
  if (look.uniform() < 0.25) std::swap(bg, fg);  // light-on-dark plates exist
  int glyph_h = look.uniform_int(16, 20);
  BinaryImage mask = render_glyph(cls, style, glyph_h);

  GrayImage img(size, size, static_cast<std::uint8_t>(bg));
  int ox = (size - mask.width) / 2, oy = (size - mask.height) / 2;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y)) img.at(ox + x, oy + y) = static_cast<std::uint8_t>(fg);

  Rng aug = rng.derive("aug");
  double rot = cfg.rotate_deg > 0 ? aug.uniform(-cfg.rotate_deg, cfg.rotate_deg) : 0;
  double sh = cfg.shear > 0 ? aug.uniform(-cfg.shear, cfg.shear) : 0;
  double dx = cfg.translate_px > 0 ? aug.uniform(-cfg.translate_px, cfg.translate_px) : 0;
  double dy = cfg.translate_px > 0 ? aug.uniform(-cfg.translate_px, cfg.translate_px) : 0;
  if (rot != 0 || sh != 0 || dx != 0 || dy != 0) {
    Affine m = Affine::inverse_of(rot, sh, dx, dy, (size - 1) / 2.0, (size - 1) / 2.0);
    img = warp(img, m, static_cast<std::uint8_t>(bg));
  }
  add_noise_and_lighting(img, cfg.noise_sigma, cfg.lighting_amp, aug);
  return img;
}

GrayImage synth_negative(NegativeKind kind, int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  GrayImage img(w, h);
  switch (kind) {
    case NegativeKind::Texture: {
      // smoothed random field: coarse random grid, bilinear upsample, noise
      int gw = std::max(2, w / 12), gh = std::max(2, h / 12);
      GrayImage grid(gw, gh);
      for (auto& p : grid.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(40, 215));
      img = resize_bilinear(grid, w, h);
      for (auto& p : img.pixels)
        p = static_cast<std::uint8_t>(std::clamp(p + rng.gaussian() * 6.0, 0.0, 255.0));
      break;
    }
    case NegativeKind::Stripes: {
      bool vertical = rng.uniform() < 0.5;
      int period = rng.uniform_int(6, 18);
      int duty = std::max(2, period / 2);
      int bright = rng.uniform_int(140, 220), dark = rng.uniform_int(30, 110);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          int t = (vertical ? x : y) % period;
          img.at(x, y) = static_cast<std::uint8_t>(t < duty ? bright : dark);
        }
      add_noise_and_lighting(img, 4.0, 25.0, rng);
      break;
    }
    case NegativeKind::Bricks: {
      int bw = rng.uniform_int(18, 34), bh = rng.uniform_int(8, 14);
      int mortar = std::max(1, bh / 5);
      int brick = rng.uniform_int(90, 170), gap = rng.uniform_int(180, 230);
      for (int y = 0; y < h; ++y) {
        int row = y / bh;
        int shift = (row % 2) * bw / 2;
        for (int x = 0; x < w; ++x) {
          bool in_mortar = (y % bh) >= bh - mortar || ((x + shift) % bw) >= bw - mortar;
          img.at(x, y) = static_cast<std::uint8_t>(in_mortar ? gap : brick);
        }
      }
      add_noise_and_lighting(img, 5.0, 20.0, rng);
      break;
    }
    case NegativeKind::GeneralText: {
      // text line that is not a license plate: no border, looser layout
      int bg = rng.uniform_int(160, 230), fg = rng.uniform_int(20, 80);
      img = GrayImage(w, h, static_cast<std::uint8_t>(bg));
      int gh = std::max(kGlyphH, h / 2);
      int x = rng.uniform_int(0, std::max(1, w / 8));
      while (x < w - gh) {
        if (rng.uniform() < 0.18) {  // word gap
          x += gh;
          continue;
        }
        int cls = static_cast<int>(rng.uniform_int(kAlphabetSize));
        BinaryImage mask = render_glyph(cls, static_cast<int>(rng.uniform_int(kStyles)), gh);
        int oy = (h - mask.height) / 2 + rng.uniform_int(-h / 8, h / 8);
        for (int yy = 0; yy < mask.height; ++yy)
          for (int xx = 0; xx < mask.width; ++xx) {
            int px = x + xx, py = oy + yy;
            if (px >= 0 && py >= 0 && px < w && py < h && mask.at(xx, yy))
              img.at(px, py) = static_cast<std::uint8_t>(fg);
          }
        x += mask.width + std::max(1, gh / 6);
      }
      add_noise_and_lighting(img, 4.0, 20.0, rng);
      break;
    }
  }
  return img;
}

PlateSample synth_plate(const std::string& label, const AugmentConfig& cfg,
                        const PlateOptions& opts) {
  if (label.size() < 4 || label.size() > 8)
    throw std::invalid_argument("synth_plate: label must have 4..8 characters");
  std::vector<int> classes = string_to_labels(label);  // validates alphabet

  Rng rng(cfg.seed);
  Rng look = rng.derive("plate-look");
  const int ch = opts.char_height;
  int style = opts.style >= 0 ? opts.style : static_cast<int>(look.uniform_int(kStyles));
  int border = std::max(1, ch / 10);
  int pad_v = std::max(2, static_cast<int>(std::lround(ch * 0.22)));
  int pad_h = std::max(3, static_cast<int>(std::lround(ch * 0.40)));
  int spacing = std::max(1, static_cast<int>(std::lround(ch * 0.20)));
  int bg = look.uniform_int(185, 235);
  int fg = look.uniform_int(15, 60);

  std::vector<BinaryImage> masks;
  int text_w = 0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    masks.push_back(render_glyph(classes[i], style, ch));
    text_w += masks.back().width;
    if (i + 1 < classes.size()) text_w += spacing;
  }
  int W = text_w + 2 * (pad_h + border);
  int H = ch + 2 * (pad_v + border);

  PlateSample out;
  out.label = label;
  out.subtitle = opts.subtitle;
  out.image = GrayImage(W, H, static_cast<std::uint8_t>(bg));
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      if (x < border || y < border || x >= W - border || y >= H - border)
        out.image.at(x, y) = static_cast<std::uint8_t>(fg + 10);

  int x = pad_h + border;
  int ty = pad_v + border;
  for (const auto& mask : masks) {
    // truth boxes are the tight ink extent, not the glyph cell
    int ix0 = mask.width, iy0 = mask.height, ix1 = -1, iy1 = -1;
    for (int yy = 0; yy < mask.height; ++yy)
      for (int xx = 0; xx < mask.width; ++xx)
        if (mask.at(xx, yy)) {
          out.image.at(x + xx, ty + yy) = static_cast<std::uint8_t>(fg);
          ix0 = std::min(ix0, xx);
          iy0 = std::min(iy0, yy);
          ix1 = std::max(ix1, xx);
          iy1 = std::max(iy1, yy);
        }
    out.char_boxes.push_back({x + ix0, ty + iy0, ix1 - ix0 + 1, iy1 - iy0 + 1});
    x += mask.width + spacing;
  }

  if (opts.subtitle) {
    // thin text strip tucked under the characters; usually touches them,
    // which is what breaks connected-component segmentation
    int sub_h = std::max(kGlyphH, static_cast<int>(std::lround(ch * 0.34)));
    int sub_y = ty + ch - (look.uniform() < 0.7 ? 1 : -1);
    int sx = pad_h + border + look.uniform_int(0, std::max(1, text_w / 3));
    int sub_len = look.uniform_int(4, 8);
    for (int i = 0; i < sub_len && sx + sub_h < W - border; ++i) {
      int cls = static_cast<int>(look.uniform_int(kAlphabetSize));
      BinaryImage m = render_glyph(cls, 0, sub_h);
      for (int yy = 0; yy < m.height; ++yy)
        for (int xx = 0; xx < m.width; ++xx) {
          int px = sx + xx, py = sub_y + yy;
          if (px >= border && py >= border && px < W - border && py < H - border &&
              m.at(xx, yy))
            out.image.at(px, py) = static_cast<std::uint8_t>(fg + 8);
        }
      sx += m.width + 1;
    }
  }

  Rng aug = rng.derive("plate-aug");
  double rot = cfg.rotate_deg > 0 ? aug.uniform(-cfg.rotate_deg, cfg.rotate_deg) : 0;
  double sh = cfg.shear > 0 ? aug.uniform(-cfg.shear, cfg.shear) : 0;
  double dx = cfg.translate_px > 0 ? aug.uniform(-cfg.translate_px, cfg.translate_px) : 0;
  double dy = cfg.translate_px > 0 ? aug.uniform(-cfg.translate_px, cfg.translate_px) : 0;
  if (rot != 0 || sh != 0 || dx != 0 || dy != 0) {
    Affine m = Affine::inverse_of(rot, sh, dx, dy, (W - 1) / 2.0, (H - 1) / 2.0);
    out.image = warp(out.image, m, static_cast<std::uint8_t>(bg));
    for (auto& b : out.char_boxes) b = map_box(b, m, W, H);
  }
  add_noise_and_lighting(out.image, cfg.noise_sigma, cfg.lighting_amp, aug);
  return out;
}

std::string random_label(Rng& rng, int min_len, int max_len) {
  int n = rng.uniform_int(min_len, max_len);
  std::string s;
  for (int i = 0; i < n; ++i)
    s.push_back(class_to_char(static_cast<int>(rng.uniform_int(kAlphabetSize))));
  return s;
}

SceneTruth synth_scene(int plate_count, const AugmentConfig& cfg,
                       const SceneOptions& opts) {
  if (plate_count < 0) throw std::invalid_argument("synth_scene: negative plate count");
  Rng rng(cfg.seed);
  SceneTruth scene;

  // background: smooth texture base with a few rectangular regions of other
  // negative kinds
  Rng bg_rng = rng.derive("background");
  scene.image = synth_negative(NegativeKind::Texture, opts.width, opts.height, bg_rng.u64());
  int regions = bg_rng.uniform_int(3, 6);
  for (int r = 0; r < regions; ++r) {
    NegativeKind kind = static_cast<NegativeKind>(bg_rng.uniform_int(3));
    int rw = bg_rng.uniform_int(opts.width / 4, opts.width / 2);
    int rh = bg_rng.uniform_int(opts.height / 4, opts.height / 2);
    int rx = bg_rng.uniform_int(0, opts.width - rw);
    int ry = bg_rng.uniform_int(0, opts.height - rh);
    GrayImage patch = synth_negative(kind, rw, rh, bg_rng.u64());
    for (int y = 0; y < rh; ++y)
      for (int x = 0; x < rw; ++x) scene.image.at(rx + x, ry + y) = patch.at(x, y);
  }

  Rng place_rng = rng.derive("placement");
  int attempts = 0;
  while (static_cast<int>(scene.plates.size()) < plate_count && attempts < 200) {
    ++attempts;
    int ch = place_rng.uniform_int(opts.min_char_height, opts.max_char_height);
    std::string label = random_label(place_rng, opts.min_label_len, opts.max_label_len);
    AugmentConfig pcfg;
    pcfg.seed = place_rng.u64();
    pcfg.noise_sigma = cfg.noise_sigma;
    pcfg.lighting_amp = cfg.lighting_amp;
    pcfg.rotate_deg = std::min(cfg.rotate_deg, 2.0);
    pcfg.shear = std::min(cfg.shear, 0.05);
    PlateOptions popts;
    popts.char_height = ch;
    popts.subtitle = place_rng.uniform() < opts.subtitle_prob;
    PlateSample plate = synth_plate(label, pcfg, popts);
    if (plate.image.width + 8 >= opts.width || plate.image.height + 8 >= opts.height)
      continue;
    int px = place_rng.uniform_int(4, opts.width - plate.image.width - 4);
    int py = place_rng.uniform_int(4, opts.height - plate.image.height - 4);
    Rect box{px, py, plate.image.width, plate.image.height};
    bool clash = false;
    for (const auto& placed : scene.plates) {
      Rect inflated{placed.box.x - 12, placed.box.y - 12, placed.box.w + 24,
                    placed.box.h + 24};
      if (std::max(inflated.x, box.x) < std::min(inflated.x2(), box.x2()) &&
          std::max(inflated.y, box.y) < std::min(inflated.y2(), box.y2())) {
        clash = true;
        break;
      }
    }
    if (clash) continue;
    for (int y = 0; y < plate.image.height; ++y)
      for (int x = 0; x < plate.image.width; ++x)
        scene.image.at(px + x, py + y) = plate.image.at(x, y);
    PlacedPlate placed;
    placed.box = box;
    placed.label = plate.label;
    placed.subtitle = plate.subtitle;
    for (const auto& cb : plate.char_boxes)
      placed.char_boxes.push_back({cb.x + px, cb.y + py, cb.w, cb.h});
    scene.plates.push_back(std::move(placed));
  }
  return scene;
}

BootstrapResult bootstrap_negatives(Network& net, const std::vector<GrayImage>& pool,
                                    const Dataset& base_train, const SgdConfig& cfg,
                                    int rounds, int background_label, double threshold) {
  if (pool.empty()) throw std::invalid_argument("bootstrap_negatives: empty pool");
  BootstrapResult result;
  Dataset train = base_train;
  const Shape3 in = net.input_shape();
  const std::size_t plane = static_cast<std::size_t>(in.count());

  auto score_pool = [&]() {
    std::vector<int> hard;
    const int B = 64;
    for (std::size_t b = 0; b < pool.size(); b += B) {
      std::size_t e = std::min(pool.size(), b + static_cast<std::size_t>(B));
      Tensor batch({static_cast<int>(e - b), in.c, in.h, in.w});
      for (std::size_t i = b; i < e; ++i)
        for (std::size_t p = 0; p < plane; ++p)
          batch[(i - b) * plane + p] = pool[i].pixels[p];
      Tensor probs = net.forward(batch);
      for (std::size_t i = b; i < e; ++i) {
        float char_prob = 1.0f - probs[(i - b) * net.class_count() + background_label];
        if (char_prob > threshold) hard.push_back(static_cast<int>(i));
      }
    }
    return hard;
  };

  for (int round = 0; round < rounds; ++round) {
    std::vector<int> hard = score_pool();
    result.fp_rates.push_back(static_cast<double>(hard.size()) / pool.size());
    if (hard.empty()) break;
    const auto& d = train.inputs.dims();
    Tensor grown({d[0] + static_cast<int>(hard.size()), d[1], d[2], d[3]});
    std::memcpy(grown.data(), train.inputs.data(), train.inputs.size() * sizeof(float));
    for (std::size_t i = 0; i < hard.size(); ++i) {
      for (std::size_t p = 0; p < plane; ++p)
        grown[(d[0] + i) * plane + p] = pool[hard[i]].pixels[p];
      train.labels.push_back(background_label);
    }
    train.inputs = std::move(grown);
    result.hard_indices.insert(result.hard_indices.end(), hard.begin(), hard.end());
    SgdConfig round_cfg = cfg;
    round_cfg.seed = cfg.seed + 1000 + round;
    sgd_train(net, train, {}, round_cfg);
  }
  return result;
}

}  // namespace lpdr
