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

#include "lpdr/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

namespace lpdr {

namespace {

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Relu: return "relu";
    case LayerKind::FullyConnected: return "fc";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Softmax: return "softmax";
  }
  return "?";
}

[[noreturn]] void shape_error(const std::string& what) {
  throw std::invalid_argument("shape error: " + what);
}

}  // namespace

Shape3 layer_output_shape(const LayerSpec& spec, const Shape3& in) {
  switch (spec.kind) {
    case LayerKind::Conv: {
      int oh = conv_out_extent(in.h, spec.kernel_h, spec.stride, spec.pad);
      int ow = conv_out_extent(in.w, spec.kernel_w, spec.stride, spec.pad);
      if (oh < 1 || ow < 1)
        shape_error("conv " + std::to_string(spec.kernel_h) + "x" +
                    std::to_string(spec.kernel_w) + " does not fit input " +
                    std::to_string(in.h) + "x" + std::to_string(in.w));
      return {spec.out_channels, oh, ow};
    }
    case LayerKind::MaxPool: {
      if (spec.kernel_h > in.h || spec.kernel_w > in.w)
        shape_error("pool window larger than input");
      int oh = (in.h - spec.kernel_h) / spec.stride + 1;
      int ow = (in.w - spec.kernel_w) / spec.stride + 1;
      return {in.c, oh, ow};
    }
    case LayerKind::FullyConnected:
      return {spec.out_channels, 1, 1};
    case LayerKind::Relu:
    case LayerKind::Dropout:
    case LayerKind::Softmax:
      return in;
  }
  shape_error("unknown layer kind");
}

Network::Network(Shape3 input_shape, std::vector<LayerSpec> layers)
    : layers_(std::move(layers)), input_shape_(input_shape) {
  if (input_shape_.c < 1 || input_shape_.h < 1 || input_shape_.w < 1)
    shape_error("bad input shape");
  shapes_.push_back(input_shape_);
  for (const auto& spec : layers_) {
    if (spec.kind == LayerKind::Dropout &&
        (spec.drop_prob < 0.0f || spec.drop_prob >= 1.0f))
      throw std::invalid_argument("dropout probability must be in [0,1)");
    if ((spec.kind == LayerKind::Conv || spec.kind == LayerKind::MaxPool) &&
        spec.stride < 1)
      throw std::invalid_argument("stride must be positive");
    Shape3 in = shapes_.back();
    shapes_.push_back(layer_output_shape(spec, in));
    LayerParams p;
    if (spec.kind == LayerKind::Conv) {
      p.w = Tensor({spec.out_channels, in.c, spec.kernel_h, spec.kernel_w});
      p.b = Tensor({spec.out_channels});
    } else if (spec.kind == LayerKind::FullyConnected) {
      p.w = Tensor({spec.out_channels, in.count()});
      p.b = Tensor({spec.out_channels});
    }
    params_.push_back(std::move(p));
  }
  class_count_ = shapes_.back().c;
}

void Network::init_weights(Rng& rng) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& spec = layers_[i];
    auto& p = params_[i];
    if (p.w.empty()) continue;
    float fan_in, fan_out;
    if (spec.kind == LayerKind::Conv) {
      fan_in = static_cast<float>(shapes_[i].c * spec.kernel_h * spec.kernel_w);
      fan_out = static_cast<float>(spec.out_channels * spec.kernel_h * spec.kernel_w);
    } else {
      fan_in = static_cast<float>(shapes_[i].count());
      fan_out = static_cast<float>(spec.out_channels);
    }
    float a = std::sqrt(6.0f / (fan_in + fan_out));
    for (auto& v : p.w.vec()) v = static_cast<float>(rng.uniform(-a, a));
    p.b.fill(0.0f);
  }
}

namespace {

// Subtract the mean in pixel scale, then scale to roughly unit range. When
// the input plane is larger than the stored mean (dense sliding-window use)
// the scalar average of the mean image is used instead, which is identical
// for the constant mean images the detector nets carry.
void normalize_input(const Tensor& input, const Tensor& mean, Tensor& out) {
  out = input;
  const float inv = 1.0f / 255.0f;
  if (mean.empty()) {
    for (auto& v : out.vec()) v *= inv;
    return;
  }
  const std::size_t plane = input.size() / static_cast<std::size_t>(input.dim(0));
  if (mean.size() == plane) {
    for (int n = 0; n < input.dim(0); ++n) {
      float* dst = out.data() + static_cast<std::size_t>(n) * plane;
      const float* m = mean.data();
      for (std::size_t i = 0; i < plane; ++i) dst[i] = (dst[i] - m[i]) * inv;
    }
  } else {
    double avg = 0.0;
    for (float v : mean.vec()) avg += v;
    float mu = static_cast<float>(avg / mean.size());
    for (auto& v : out.vec()) v = (v - mu) * inv;
  }
}

}  // namespace

Tensor Network::forward(const Tensor& input, bool train_mode, Rng* rng,
                        ForwardTrace* trace) const {
  if (input.rank() != 4)
    shape_error("network input must be [N,C,H,W], got " + input.shape_str());
  if (input.dim(1) != input_shape_.c)
    shape_error("input has " + std::to_string(input.dim(1)) +
                " channels, network expects " + std::to_string(input_shape_.c));
  if (train_mode && !rng)
    throw std::invalid_argument("train-mode forward needs an rng for dropout");

  const int N = input.dim(0);
  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;
  tr.acts.clear();
  tr.pool_argmax.assign(layers_.size(), {});
  tr.dropout_mask.assign(layers_.size(), {});
  tr.train_mode = train_mode;

  Tensor cur;
  normalize_input(input, mean_image_, cur);
  tr.acts.push_back(std::move(cur));

  std::vector<float> colbuf;
  Shape3 shape{input.dim(1), input.dim(2), input.dim(3)};
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& spec = layers_[li];
    const auto& p = params_[li];
    Shape3 oshape = layer_output_shape(spec, shape);
    const Tensor& x = tr.acts.back();
    Tensor y({N, oshape.c, oshape.h, oshape.w});
    const std::size_t in_count = static_cast<std::size_t>(shape.count());
    const std::size_t out_count = static_cast<std::size_t>(oshape.count());
    switch (spec.kind) {
      case LayerKind::Conv:
        for (int n = 0; n < N; ++n)
          conv_forward_sample(x.data() + n * in_count, shape, p.w.data(),
                              p.b.data(), spec, y.data() + n * out_count,
                              oshape, colbuf);
        break;
      case LayerKind::MaxPool: {
        auto& amax = tr.pool_argmax[li];
        amax.resize(static_cast<std::size_t>(N) * out_count);
        for (int n = 0; n < N; ++n)
          maxpool_forward_sample(x.data() + n * in_count, shape, spec,
                                 y.data() + n * out_count, oshape,
                                 amax.data() + n * out_count);
        break;
      }
      case LayerKind::Relu:
        relu_forward(x.data(), x.size(), y.data());
        break;
      case LayerKind::FullyConnected: {
        if (static_cast<std::size_t>(p.w.dim(1)) != in_count)
          shape_error("fc expects input of " + std::to_string(p.w.dim(1)) +
                      " values, got " + std::to_string(in_count));
        for (int n = 0; n < N; ++n)
          fc_forward_sample(x.data() + n * in_count, static_cast<int>(in_count),
                            p.w.data(), p.b.data(), spec.out_channels,
                            y.data() + n * out_count);
        break;
      }
      case LayerKind::Dropout: {
        if (train_mode) {
          auto& mask = tr.dropout_mask[li];
          mask.resize(x.size());
          const float keep = 1.0f - spec.drop_prob;
          const float scale = 1.0f / keep;
          for (std::size_t i = 0; i < x.size(); ++i) {
            mask[i] = (rng->uniform() < keep) ? scale : 0.0f;
            y[i] = x[i] * mask[i];
          }
        } else {
          y.vec() = x.vec();
        }
        break;
      }
      case LayerKind::Softmax:
        for (int n = 0; n < N; ++n)
          softmax_channel(x.data() + n * in_count, oshape.c, oshape.h * oshape.w,
                          y.data() + n * out_count);
        break;
    }
    tr.acts.push_back(std::move(y));
    shape = oshape;
  }
  return tr.acts.back();
}

Gradients Network::zero_gradients() const {
  Gradients g;
  g.layers.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].w.empty()) {
      g.layers[i].w = Tensor(params_[i].w.dims());
      g.layers[i].b = Tensor(params_[i].b.dims());
    }
  }
  return g;
}

Gradients Network::backward(const ForwardTrace& trace, const Tensor& dlogits) const {
  if (trace.acts.size() != layers_.size() + 1)
    throw std::invalid_argument("backward called without a complete forward trace");
  if (layers_.empty() || layers_.back().kind != LayerKind::Softmax)
    throw std::invalid_argument("backward expects a softmax-terminated network");

  Gradients grads = zero_gradients();
  const int N = trace.acts[0].dim(0);
  Tensor g = dlogits;  // gradient w.r.t. output of layer i (starting below softmax)
  std::vector<float> colbuf, dcolbuf;

  for (int li = static_cast<int>(layers_.size()) - 2; li >= 0; --li) {
    const auto& spec = layers_[li];
    const auto& p = params_[li];
    const Tensor& x = trace.acts[li];
    Shape3 in{x.dim(1), x.dim(2), x.dim(3)};
    const Tensor& y = trace.acts[li + 1];
    Shape3 out{y.dim(1), y.dim(2), y.dim(3)};
    const std::size_t in_count = static_cast<std::size_t>(in.count());
    const std::size_t out_count = static_cast<std::size_t>(out.count());
    Tensor gin({N, in.c, in.h, in.w});

    switch (spec.kind) {
      case LayerKind::Conv: {
        const int K = in.c * spec.kernel_h * spec.kernel_w;
        const int osp = out.h * out.w;
        colbuf.resize(static_cast<std::size_t>(K) * osp);
        dcolbuf.resize(static_cast<std::size_t>(K) * osp);
        auto& gw = grads.layers[li].w;
        auto& gb = grads.layers[li].b;
        for (int n = 0; n < N; ++n) {
          const float* xs = x.data() + n * in_count;
          const float* dys = g.data() + n * out_count;
          for (int f = 0; f < out.c; ++f) {
            const float* row = dys + static_cast<std::size_t>(f) * osp;
            float s0 = 0;
            for (int i = 0; i < osp; ++i) s0 += row[i];
            gb[f] += s0;
          }
          im2col(xs, in, spec.kernel_h, spec.kernel_w, spec.stride, spec.pad,
                 colbuf.data(), out.h, out.w);
          gemm_bt_acc(out.c, K, osp, dys, colbuf.data(), gw.data());
          std::fill(dcolbuf.begin(), dcolbuf.end(), 0.0f);
          gemm_at_acc(K, osp, out.c, p.w.data(), dys, dcolbuf.data());
          col2im_acc(dcolbuf.data(), in, spec.kernel_h, spec.kernel_w,
                     spec.stride, spec.pad, gin.data() + n * in_count, out.h,
                     out.w);
        }
        break;
      }
      case LayerKind::MaxPool: {
        const auto& amax = trace.pool_argmax[li];
        for (int n = 0; n < N; ++n) {
          float* dst = gin.data() + n * in_count;
          const float* src = g.data() + n * out_count;
          const int* am = amax.data() + n * out_count;
          for (std::size_t o = 0; o < out_count; ++o) dst[am[o]] += src[o];
        }
        break;
      }
      case LayerKind::Relu:
        for (std::size_t i = 0; i < x.size(); ++i)
          gin[i] = x[i] > 0.0f ? g[i] : 0.0f;
        break;
      case LayerKind::FullyConnected: {
        auto& gw = grads.layers[li].w;
        auto& gb = grads.layers[li].b;
        const int in_n = static_cast<int>(in_count);
        for (int n = 0; n < N; ++n) {
          const float* xs = x.data() + n * in_count;
          const float* dys = g.data() + n * out_count;
          for (int o = 0; o < spec.out_channels; ++o) gb[o] += dys[o];
          gemm_acc(spec.out_channels, in_n, 1, dys, xs, gw.data());
          gemm_at_acc(in_n, 1, spec.out_channels, p.w.data(), dys,
                      gin.data() + n * in_count);
        }
        break;
      }
      case LayerKind::Dropout: {
        if (trace.train_mode) {
          const auto& mask = trace.dropout_mask[li];
          for (std::size_t i = 0; i < x.size(); ++i) gin[i] = g[i] * mask[i];
        } else {
          gin.vec() = g.vec();
        }
        break;
      }
      case LayerKind::Softmax:
        throw std::invalid_argument("softmax must be the terminal layer");
    }
    g = std::move(gin);
  }
  return grads;
}

Network Network::to_fully_convolutional() const {
  std::vector<LayerSpec> specs;
  std::vector<LayerParams> prms;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    LayerSpec s = layers_[i];
    LayerParams p = params_[i];
    if (s.kind == LayerKind::FullyConnected) {
      Shape3 in = shapes_[i];
      s.kind = LayerKind::Conv;
      s.kernel_h = in.h;
      s.kernel_w = in.w;
      s.stride = 1;
      s.pad = 0;
      // fc weight [out, c*h*w] and conv kernel [out, c, h, w] share layout
      p.w = Tensor({s.out_channels, in.c, in.h, in.w}, std::move(p.w.vec()));
    }
    specs.push_back(s);
    prms.push_back(std::move(p));
  }
  Network net(input_shape_, std::move(specs));
  net.params_ = std::move(prms);
  net.mean_image_ = mean_image_;
  return net;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.w.size() + p.b.size();
  return n;
}

float cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels) {
  const int N = logits.dim(0);
  const int K = logits.dim(1);
  if (static_cast<std::size_t>(N) != labels.size())
    throw std::invalid_argument("labels/batch size mismatch");
  double total = 0.0;
  for (int n = 0; n < N; ++n) {
    const float* z = logits.data() + static_cast<std::size_t>(n) * K;
    float mx = z[0];
    for (int k = 1; k < K; ++k) mx = std::max(mx, z[k]);
    double sum = 0.0;
    for (int k = 0; k < K; ++k) sum += std::exp(static_cast<double>(z[k]) - mx);
    total += std::log(sum) + mx - z[labels[n]];
  }
  return static_cast<float>(total / N);
}

Tensor ce_softmax_grad(const Tensor& probs, const std::vector<int>& labels) {
  const int N = probs.dim(0);
  const int K = probs.dim(1);
  Tensor g(probs.dims());
  const float inv = 1.0f / static_cast<float>(N);
  for (int n = 0; n < N; ++n) {
    const float* p = probs.data() + static_cast<std::size_t>(n) * K;
    float* gp = g.data() + static_cast<std::size_t>(n) * K;
    for (int k = 0; k < K; ++k) gp[k] = p[k] * inv;
    gp[labels[n]] -= inv;
  }
  return g;
}

int argmax_class(const Tensor& probs, int sample) {
  const int K = probs.dim(1);
  const float* p = probs.data() + static_cast<std::size_t>(sample) * K;
  int best = 0;
  for (int k = 1; k < K; ++k)
    if (p[k] > p[best]) best = k;
  return best;
}

namespace {

Tensor gather_batch(const Dataset& ds, const std::vector<int>& idx, int begin,
                    int end) {
  const auto& d = ds.inputs.dims();
  const std::size_t plane = ds.inputs.size() / d[0];
  Tensor out({end - begin, d[1], d[2], d[3]});
  for (int i = begin; i < end; ++i)
    std::memcpy(out.data() + static_cast<std::size_t>(i - begin) * plane,
                ds.inputs.data() + static_cast<std::size_t>(idx[i]) * plane,
                plane * sizeof(float));
  return out;
}

struct EvalResult {
  float loss = 0.0f;
  float accuracy = 0.0f;
};

EvalResult evaluate(const Network& net, const Dataset& ds, int batch_size) {
  const int N = ds.inputs.dim(0);
  std::vector<int> idx(N);
  for (int i = 0; i < N; ++i) idx[i] = i;
  double loss = 0.0;
  int correct = 0;
  for (int b = 0; b < N; b += batch_size) {
    int e = std::min(N, b + batch_size);
    Tensor batch = gather_batch(ds, idx, b, e);
    std::vector<int> labels(ds.labels.begin() + b, ds.labels.begin() + e);
    ForwardTrace tr;
    Tensor probs = net.forward(batch, false, nullptr, &tr);
    loss += static_cast<double>(
                cross_entropy_loss(tr.acts[net.logits_index()], labels)) *
            (e - b);
    for (int n = 0; n < e - b; ++n)
      if (argmax_class(probs, n) == labels[n]) ++correct;
  }
  return {static_cast<float>(loss / N), static_cast<float>(correct) / N};
}

}  // namespace

TrainResult sgd_train(Network& net, const Dataset& train, const Dataset& val,
                      const SgdConfig& cfg, std::vector<std::string>* log) {
  const int N = train.inputs.empty() ? 0 : train.inputs.dim(0);
  if (N == 0) throw std::invalid_argument("sgd_train: empty dataset");
  if (train.labels.size() != static_cast<std::size_t>(N))
    throw std::invalid_argument("sgd_train: labels do not match inputs");
  for (int l : train.labels)
    if (l < 0 || l >= net.class_count())
      throw std::invalid_argument("sgd_train: label out of range");
  if (cfg.learning_rate < 0.0f)
    throw std::invalid_argument("sgd_train: negative learning rate");

  Rng root(cfg.seed);
  Gradients velocity = net.zero_gradients();
  TrainResult result;
  float lr = cfg.learning_rate;
  float best_val = std::numeric_limits<float>::infinity();
  int stall = 0;
  const bool has_val = !val.labels.empty();

  std::vector<int> order(N);
  for (int i = 0; i < N; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = root.derive("shuffle", static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    int batches = 0;
    for (int b = 0; b < N; b += cfg.batch_size, ++batches) {
      int e = std::min(N, b + cfg.batch_size);
      Tensor batch = gather_batch(train, order, b, e);
      std::vector<int> labels(e - b);
      for (int i = b; i < e; ++i) labels[i - b] = train.labels[order[i]];

      Rng drop_rng = root.derive("dropout",
                                 static_cast<std::uint64_t>(epoch) * 1000003ULL + b);
      ForwardTrace tr;
      Tensor probs = net.forward(batch, true, &drop_rng, &tr);
      float loss = cross_entropy_loss(tr.acts[net.logits_index()], labels);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "sgd_train: non-finite loss at epoch " << epoch << " batch "
            << batches;
        throw std::runtime_error(msg.str());
      }
      epoch_loss += static_cast<double>(loss) * (e - b);

      Tensor dlogits = ce_softmax_grad(probs, labels);
      Gradients g = net.backward(tr, dlogits);
      for (std::size_t li = 0; li < g.layers.size(); ++li) {
        auto& p = net.params()[li];
        if (p.w.empty()) continue;
        auto& vw = velocity.layers[li].w;
        auto& vb = velocity.layers[li].b;
        const auto& gw = g.layers[li].w;
        const auto& gb = g.layers[li].b;
        for (std::size_t i = 0; i < p.w.size(); ++i) {
          vw[i] = cfg.momentum * vw[i] - lr * gw[i];
          p.w[i] += vw[i];
        }
        for (std::size_t i = 0; i < p.b.size(); ++i) {
          vb[i] = cfg.momentum * vb[i] - lr * gb[i];
          p.b[i] += vb[i];
        }
      }
    }

    EpochStats st;
    st.train_loss = static_cast<float>(epoch_loss / N);
    st.learning_rate = lr;
    float sched_loss = st.train_loss;
    if (has_val) {
      EvalResult ev = evaluate(net, val, cfg.batch_size);
      st.val_loss = ev.loss;
      st.val_accuracy = ev.accuracy;
      sched_loss = ev.loss;
    }
    if (sched_loss < best_val - 1e-6f) {
      best_val = sched_loss;
      stall = 0;
    } else if (++stall >= cfg.patience) {
      lr *= cfg.decay_factor;
      stall = 0;
    }
    if (log) {
      std::ostringstream line;
      line << "epoch " << epoch << " lr " << st.learning_rate << " train_loss "
           << st.train_loss;
      if (has_val)
        line << " val_loss " << st.val_loss << " val_acc " << st.val_accuracy;
      log->push_back(line.str());
    }
    result.history.push_back(st);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Gradient check: double-precision finite differences against the float
// analytic backward pass.

namespace {

// Double-precision mirror of Network::forward, loss only. Dropout uses the
// masks recorded by the float trace so both sides differentiate the same
// function.
struct DoubleNet {
  const Network* net;
  std::vector<std::vector<double>> w, b;

  explicit DoubleNet(const Network& n) : net(&n) {
    for (const auto& p : n.params()) {
      w.emplace_back(p.w.vec().begin(), p.w.vec().end());
      b.emplace_back(p.b.vec().begin(), p.b.vec().end());
    }
  }

  double loss(const Tensor& input, const std::vector<int>& labels,
              const ForwardTrace& masks) const {
    const int N = input.dim(0);
    Shape3 shape{input.dim(1), input.dim(2), input.dim(3)};
    std::vector<double> cur(input.size());
    {  // same normalization as the float path, in double
      const Tensor& mean = net->mean_image();
      const double inv = 1.0 / 255.0;
      const std::size_t plane = input.size() / static_cast<std::size_t>(N);
      if (mean.empty()) {
        for (std::size_t i = 0; i < input.size(); ++i) cur[i] = input[i] * inv;
      } else if (mean.size() == plane) {
        for (int n = 0; n < N; ++n)
          for (std::size_t i = 0; i < plane; ++i)
            cur[n * plane + i] = (static_cast<double>(input[n * plane + i]) -
                                  static_cast<double>(mean[i])) *
                                 inv;
      } else {
        double avg = 0.0;
        for (float v : mean.vec()) avg += v;
        avg /= mean.size();
        for (std::size_t i = 0; i < input.size(); ++i)
          cur[i] = (static_cast<double>(input[i]) - avg) * inv;
      }
    }
    std::vector<double> colbuf, next;
    const auto& layers = net->layers();
    for (std::size_t li = 0; li + 1 < layers.size(); ++li) {  // stop before softmax
      const auto& spec = layers[li];
      Shape3 oshape = layer_output_shape(spec, shape);
      const std::size_t in_count = static_cast<std::size_t>(shape.count());
      const std::size_t out_count = static_cast<std::size_t>(oshape.count());
      next.assign(static_cast<std::size_t>(N) * out_count, 0.0);
      switch (spec.kind) {
        case LayerKind::Conv:
          for (int n = 0; n < N; ++n)
            conv_forward_sample(cur.data() + n * in_count, shape, w[li].data(),
                                b[li].data(), spec, next.data() + n * out_count,
                                oshape, colbuf);
          break;
        case LayerKind::MaxPool:
          for (int n = 0; n < N; ++n)
            maxpool_forward_sample<double>(cur.data() + n * in_count, shape,
                                           spec, next.data() + n * out_count,
                                           oshape, nullptr);
          break;
        case LayerKind::Relu:
          relu_forward(cur.data(), cur.size(), next.data());
          break;
        case LayerKind::FullyConnected:
          for (int n = 0; n < N; ++n)
            fc_forward_sample(cur.data() + n * in_count,
                              static_cast<int>(in_count), w[li].data(),
                              b[li].data(), spec.out_channels,
                              next.data() + n * out_count);
          break;
        case LayerKind::Dropout: {
          const auto& mask = masks.dropout_mask[li];
          if (masks.train_mode && !mask.empty()) {
            for (std::size_t i = 0; i < cur.size(); ++i)
              next[i] = cur[i] * static_cast<double>(mask[i]);
          } else {
            next = cur;
          }
          break;
        }
        case LayerKind::Softmax:
          next = cur;
          break;
      }
      cur.swap(next);
      shape = oshape;
    }
    // mean CE from logits
    const int K = shape.c;
    double total = 0.0;
    for (int n = 0; n < N; ++n) {
      const double* z = cur.data() + static_cast<std::size_t>(n) * K;
      double mx = z[0];
      for (int k = 1; k < K; ++k) mx = std::max(mx, z[k]);
      double sum = 0.0;
      for (int k = 0; k < K; ++k) sum += std::exp(z[k] - mx);
      total += std::log(sum) + mx - z[labels[n]];
    }
    return total / N;
  }
};

}  // namespace

std::vector<LayerGradReport> gradient_check(const Network& net, const Tensor& input,
                                            const std::vector<int>& labels,
                                            float tolerance, float eps,
                                            int max_checks_per_layer,
                                            std::uint64_t seed) {
  Rng rng(seed);
  Rng drop_rng = rng.derive("dropout");
  ForwardTrace tr;
  Tensor probs = net.forward(input, true, &drop_rng, &tr);
  Tensor dlogits = ce_softmax_grad(probs, labels);
  Gradients analytic = net.backward(tr, dlogits);

  DoubleNet dn(net);
  const double e = static_cast<double>(eps);

  std::vector<LayerGradReport> reports;
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    if (net.params()[li].w.empty()) continue;
    LayerGradReport rep;
    rep.layer = static_cast<int>(li);
    rep.kind = kind_name(net.layers()[li].kind);

    for (int part = 0; part < 2; ++part) {
      std::vector<double>& wd = part == 0 ? dn.w[li] : dn.b[li];
      const Tensor& ga = part == 0 ? analytic.layers[li].w : analytic.layers[li].b;
      std::vector<std::size_t> picks;
      if (max_checks_per_layer > 0 &&
          wd.size() > static_cast<std::size_t>(max_checks_per_layer)) {
        Rng pick_rng = rng.derive("pick", li * 2 + part);
        for (int i = 0; i < max_checks_per_layer; ++i)
          picks.push_back(pick_rng.uniform_int(static_cast<std::uint64_t>(wd.size())));
      } else {
        picks.resize(wd.size());
        for (std::size_t i = 0; i < wd.size(); ++i) picks[i] = i;
      }
      const double base = dn.loss(input, labels, tr);
      for (std::size_t i : picks) {
        double orig = wd[i];
        wd[i] = orig + e;
        double lp = dn.loss(input, labels, tr);
        wd[i] = orig - e;
        double lm = dn.loss(input, labels, tr);
        wd[i] = orig;
        double fd = (lp - lm) / (2 * e);
        // A relu/pool kink inside the probe interval makes the one-sided
        // estimates disagree by the slope jump; smooth curvature only
        // separates them by O(eps).
        double fd_fwd = (lp - base) / e;
        double fd_bwd = (base - lm) / e;
        if (std::abs(fd_fwd - fd_bwd) >
            0.25 * std::max({std::abs(fd_fwd), std::abs(fd_bwd), 1e-2})) {
          ++rep.skipped;
          continue;
        }
        double a = static_cast<double>(ga[i]);
        double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-2});
        rep.max_rel_error = std::max(rep.max_rel_error, static_cast<float>(rel));
        ++rep.checked;
      }
    }
    rep.pass = rep.max_rel_error <= tolerance && rep.checked > 0;
    reports.push_back(rep);
  }
  return reports;
}

}  // namespace lpdr
