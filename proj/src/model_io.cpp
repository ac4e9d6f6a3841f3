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

#include "lpdr/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace lpdr {

namespace {

constexpr char kMagic[4] = {'L', 'P', 'D', 'R'};
constexpr std::uint16_t kVersion = 1;

// Record kinds 0..5 mirror LayerKind; BLSTM and PCA extend the container.
constexpr std::uint8_t kRecBlstm = 16;
constexpr std::uint8_t kRecPca = 17;

void put_u8(std::ostream& os, std::uint8_t v) { os.put(static_cast<char>(v)); }
void put_u16(std::ostream& os, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  os.write(b, 2);
}
void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}
void put_f32(std::ostream& os, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32(os, u);
}

std::uint8_t get_u8(std::istream& is) {
  int c = is.get();
  if (c < 0) throw std::runtime_error("model file truncated");
  return static_cast<std::uint8_t>(c);
}
std::uint16_t get_u16(std::istream& is) {
  std::uint16_t v = get_u8(is);
  return static_cast<std::uint16_t>(v | (get_u8(is) << 8));
}
std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(get_u8(is)) << (8 * i);
  return v;
}
float get_f32(std::istream& is) {
  std::uint32_t u = get_u32(is);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  put_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (int d : t.dims()) put_u32(os, static_cast<std::uint32_t>(d));
  // bulk little-endian write; x86 is little-endian, fall back elsewhere
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * 4));
  } else {
    for (float v : t.vec()) put_f32(os, v);
  }
}

Tensor read_tensor(std::istream& is) {
  std::uint32_t nd = get_u32(is);
  if (nd > 8) throw std::runtime_error("model file corrupt: tensor rank");
  std::vector<int> dims(nd);
  for (auto& d : dims) d = static_cast<int>(get_u32(is));
  if (nd == 0) return Tensor();
  Tensor t(dims);
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * 4));
    if (!is) throw std::runtime_error("model file truncated");
  } else {
    for (auto& v : t.vec()) v = get_f32(is);
  }
  return t;
}

}  // namespace

void save_model(const std::string& path, const ModelBundle& bundle) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write model file: " + path);
  os.write(kMagic, 4);
  put_u16(os, kVersion);

  Shape3 in = bundle.net ? bundle.net->input_shape() : Shape3{0, 0, 0};
  put_u32(os, static_cast<std::uint32_t>(in.c));
  put_u32(os, static_cast<std::uint32_t>(in.h));
  put_u32(os, static_cast<std::uint32_t>(in.w));

  std::uint32_t count = 0;
  if (bundle.net) count += static_cast<std::uint32_t>(bundle.net->layers().size());
  if (bundle.blstm) ++count;
  if (bundle.pca) ++count;
  put_u32(os, count);

  if (bundle.net) {
    const auto& layers = bundle.net->layers();
    const auto& params = bundle.net->params();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& s = layers[i];
      put_u8(os, static_cast<std::uint8_t>(s.kind));
      switch (s.kind) {
        case LayerKind::Conv:
          put_u32(os, static_cast<std::uint32_t>(s.out_channels));
          put_u32(os, static_cast<std::uint32_t>(s.kernel_h));
          put_u32(os, static_cast<std::uint32_t>(s.kernel_w));
          put_u32(os, static_cast<std::uint32_t>(s.stride));
          put_u32(os, static_cast<std::uint32_t>(s.pad));
          write_tensor(os, params[i].w);
          write_tensor(os, params[i].b);
          break;
        case LayerKind::MaxPool:
          put_u32(os, static_cast<std::uint32_t>(s.kernel_h));
          put_u32(os, static_cast<std::uint32_t>(s.kernel_w));
          put_u32(os, static_cast<std::uint32_t>(s.stride));
          break;
        case LayerKind::FullyConnected:
          put_u32(os, static_cast<std::uint32_t>(s.out_channels));
          write_tensor(os, params[i].w);
          write_tensor(os, params[i].b);
          break;
        case LayerKind::Dropout:
          put_f32(os, s.drop_prob);
          break;
        case LayerKind::Relu:
        case LayerKind::Softmax:
          break;
      }
    }
  }
  if (bundle.blstm) {
    const auto& b = *bundle.blstm;
    put_u8(os, kRecBlstm);
    put_u32(os, static_cast<std::uint32_t>(b.input_dim));
    put_u32(os, static_cast<std::uint32_t>(b.hidden));
    put_u32(os, static_cast<std::uint32_t>(b.classes));
    for (const Tensor* t : {&b.wx_f, &b.wh_f, &b.b_f, &b.wx_b, &b.wh_b, &b.b_b,
                            &b.w_out, &b.b_out})
      write_tensor(os, *t);
  }
  if (bundle.pca) {
    const auto& p = *bundle.pca;
    put_u8(os, kRecPca);
    put_u32(os, static_cast<std::uint32_t>(p.kept_rank));
    write_tensor(os, p.mean);
    write_tensor(os, p.projection);
    write_tensor(os, p.scale);
  }

  write_tensor(os, bundle.net ? bundle.net->mean_image() : Tensor());
  if (!os) throw std::runtime_error("model write failed: " + path);
}

ModelBundle load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open model file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not an LPDR model file: " + path);
  std::uint16_t ver = get_u16(is);
  if (ver != kVersion)
    throw std::runtime_error("unsupported model version " + std::to_string(ver));

  Shape3 in;
  in.c = static_cast<int>(get_u32(is));
  in.h = static_cast<int>(get_u32(is));
  in.w = static_cast<int>(get_u32(is));
  std::uint32_t count = get_u32(is);

  ModelBundle bundle;
  std::vector<LayerSpec> specs;
  std::vector<LayerParams> params;
  for (std::uint32_t r = 0; r < count; ++r) {
    std::uint8_t kind = get_u8(is);
    if (kind == kRecBlstm) {
      BlstmParams b;
      b.input_dim = static_cast<int>(get_u32(is));
      b.hidden = static_cast<int>(get_u32(is));
      b.classes = static_cast<int>(get_u32(is));
      for (Tensor* t : {&b.wx_f, &b.wh_f, &b.b_f, &b.wx_b, &b.wh_b, &b.b_b,
                        &b.w_out, &b.b_out})
        *t = read_tensor(is);
      bundle.blstm = std::move(b);
      continue;
    }
    if (kind == kRecPca) {
      PcaModel p;
      p.kept_rank = static_cast<int>(get_u32(is));
      p.mean = read_tensor(is);
      p.projection = read_tensor(is);
      p.scale = read_tensor(is);
      bundle.pca = std::move(p);
      continue;
    }
    LayerSpec s;
    LayerParams p;
    s.kind = static_cast<LayerKind>(kind);
    switch (s.kind) {
      case LayerKind::Conv:
        s.out_channels = static_cast<int>(get_u32(is));
        s.kernel_h = static_cast<int>(get_u32(is));
        s.kernel_w = static_cast<int>(get_u32(is));
        s.stride = static_cast<int>(get_u32(is));
        s.pad = static_cast<int>(get_u32(is));
        p.w = read_tensor(is);
        p.b = read_tensor(is);
        break;
      case LayerKind::MaxPool:
        s.kernel_h = static_cast<int>(get_u32(is));
        s.kernel_w = static_cast<int>(get_u32(is));
        s.stride = static_cast<int>(get_u32(is));
        break;
      case LayerKind::FullyConnected:
        s.out_channels = static_cast<int>(get_u32(is));
        p.w = read_tensor(is);
        p.b = read_tensor(is);
        break;
      case LayerKind::Dropout:
        s.drop_prob = get_f32(is);
        break;
      case LayerKind::Relu:
      case LayerKind::Softmax:
        break;
      default:
        throw std::runtime_error("model file corrupt: unknown record kind " +
                                 std::to_string(kind));
    }
    specs.push_back(s);
    params.push_back(std::move(p));
  }

  Tensor mean = read_tensor(is);
  if (!specs.empty()) {
    Network net({in.c, in.h, in.w}, specs);
    // construction allocated zero weights of the right shapes; verify and adopt
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params[i].w.empty() &&
          params[i].w.dims() != net.params()[i].w.dims())
        throw std::runtime_error("model file corrupt: weight shape mismatch");
    }
    net.params() = std::move(params);
    net.set_mean_image(std::move(mean));
    bundle.net = std::move(net);
  }
  return bundle;
}

}  // namespace lpdr
