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

#include "lpdr/seq_recognizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpdr/architectures.hpp"
#include "lpdr/data_synth.hpp"
#include "lpdr/image_ops.hpp"

namespace lpdr {

Tensor extract_feature_sequence(const Network& net9, const GrayImage& plate,
                                const PcaModel* pca, const SeqRecConfig& cfg) {
  if (plate.width < 4 || plate.height < 4)
    throw std::invalid_argument("extract_feature_sequence: degenerate plate crop");
  const Tensor& mean = net9.mean_image();
  std::uint8_t fill = 127;
  if (!mean.empty()) {
    double avg = 0;
    for (float v : mean.vec()) avg += v;
    fill = static_cast<std::uint8_t>(std::clamp(avg / mean.size(), 0.0, 255.0));
  }
  GrayImage padded = pad(plate, cfg.pad_lr, cfg.pad_lr, 0, 0, fill);
  GrayImage resized = resize_bilinear(padded, cfg.target_w, cfg.target_h);

  FeatureTaps taps = find_feature_taps(net9);
  const int window = cfg.target_h;  // square windows at the CNN input size
  const int L = cfg.target_w - window + 1;
  const Shape3 in = net9.input_shape();
  if (in.h != window || in.w != window || in.c != 1)
    throw std::invalid_argument("extract_feature_sequence: net input must be 1x24x24");

  int raw_dim = -1;
  Tensor raw;
  const int chunk = 16;  // keeps the forward trace memory bounded
  for (int base = 0; base < L; base += chunk) {
    int n = std::min(chunk, L - base);
    Tensor batch({n, 1, window, window});
    for (int j = 0; j < n; ++j)
      for (int y = 0; y < window; ++y)
        for (int x = 0; x < window; ++x)
          batch[(static_cast<std::size_t>(j) * window + y) * window + x] =
              resized.at(base + j + x, y);
    ForwardTrace tr;
    net9.forward(batch, false, nullptr, &tr);
    const Tensor& block = tr.acts[taps.conv_block_act];
    const Tensor& fc = tr.acts[taps.fc_act];
    const std::size_t block_n = block.size() / n;
    const std::size_t fc_n = fc.size() / n;
    if (raw_dim < 0) {
      raw_dim = static_cast<int>(block_n + fc_n);
      raw = Tensor({L, raw_dim});
    }
    for (int j = 0; j < n; ++j) {
      float* row = raw.data() + static_cast<std::size_t>(base + j) * raw_dim;
      const float* bp = block.data() + static_cast<std::size_t>(j) * block_n;
      const float* fp = fc.data() + static_cast<std::size_t>(j) * fc_n;
      std::copy(bp, bp + block_n, row);
      std::copy(fp, fp + fc_n, row + block_n);
    }
  }
  if (!pca) return raw;
  return apply_pca(*pca, raw);
}

PcaModel fit_pca(const Tensor& features, int out_dim) {
  if (features.rank() != 2) throw std::invalid_argument("fit_pca: features must be [N x D]");
  const int N = features.dim(0);
  const int D = features.dim(1);
  if (N < out_dim)
    throw std::invalid_argument("fit_pca: need at least out_dim samples");

  Eigen::MatrixXf X(N, D);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < D; ++j) X(i, j) = features.at2(i, j);
  Eigen::VectorXf mean = X.colwise().mean();
  X.rowwise() -= mean.transpose();

  PcaModel model;
  model.mean = Tensor({D});
  for (int j = 0; j < D; ++j) model.mean[j] = mean(j);
  model.projection = Tensor({out_dim, D});
  model.scale = Tensor({out_dim});

  Eigen::MatrixXf components(out_dim, D);
  components.setZero();
  Eigen::VectorXf eigvals;

  if (N < D) {
    // Gram trick: eigenvectors of X X^T map onto the principal directions
    Eigen::MatrixXf gram = X * X.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXf> es(gram);
    eigvals = es.eigenvalues();  // ascending
    int kept = 0;
    float lmax = std::max(eigvals(N - 1), 1e-20f);
    for (int k = 0; k < out_dim && k < N; ++k) {
      float lambda = eigvals(N - 1 - k);
      if (lambda <= 1e-6f * lmax) break;
      Eigen::VectorXf u = X.transpose() * es.eigenvectors().col(N - 1 - k);
      components.row(k) = u.normalized().transpose();
      ++kept;
    }
    model.kept_rank = kept;
  } else {
    Eigen::MatrixXf cov = (X.transpose() * X) / static_cast<float>(N);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXf> es(cov);
    eigvals = es.eigenvalues();
    int kept = 0;
    float lmax = std::max(eigvals(D - 1), 1e-20f);
    for (int k = 0; k < out_dim && k < D; ++k) {
      float lambda = eigvals(D - 1 - k);
      if (lambda <= 1e-6f * lmax) break;
      components.row(k) = es.eigenvectors().col(D - 1 - k).transpose();
      ++kept;
    }
    model.kept_rank = kept;
  }

  for (int k = 0; k < out_dim; ++k)
    for (int j = 0; j < D; ++j) model.projection.at2(k, j) = components(k, j);

  // z-score denominators from the projected training data
  Eigen::MatrixXf Z = X * components.transpose();  // N x out_dim
  for (int k = 0; k < out_dim; ++k) {
    float sd = std::sqrt(Z.col(k).squaredNorm() / static_cast<float>(N));
    model.scale[k] = (k < model.kept_rank && sd > 1e-8f) ? 1.0f / sd : 0.0f;
  }
  return model;
}

Tensor apply_pca(const PcaModel& pca, const Tensor& features) {
  const int N = features.dim(0);
  const int D = pca.in_dim();
  const int M = pca.out_dim();
  if (features.dim(1) != D)
    throw std::invalid_argument("apply_pca: dimension mismatch");
  Tensor out({N, M});
  std::vector<float> centered(D);
  for (int i = 0; i < N; ++i) {
    const float* row = features.data() + static_cast<std::size_t>(i) * D;
    for (int j = 0; j < D; ++j) centered[j] = row[j] - pca.mean[j];
    float* dst = out.data() + static_cast<std::size_t>(i) * M;
    for (int k = 0; k < M; ++k) {
      const float* pr = pca.projection.data() + static_cast<std::size_t>(k) * D;
      float acc0 = 0, acc1 = 0, acc2 = 0, acc3 = 0;
      int j = 0;
      for (; j + 4 <= D; j += 4) {
        acc0 += pr[j] * centered[j];
        acc1 += pr[j + 1] * centered[j + 1];
        acc2 += pr[j + 2] * centered[j + 2];
        acc3 += pr[j + 3] * centered[j + 3];
      }
      float acc = (acc0 + acc1) + (acc2 + acc3);
      for (; j < D; ++j) acc += pr[j] * centered[j];
      dst[k] = acc * pca.scale[k];
    }
  }
  return out;
}

BlstmParams blstm_init(int input_dim, int hidden, int classes, Rng& rng) {
  BlstmParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.classes = classes;
  auto uniform_tensor = [&](std::vector<int> dims, float a) {
    Tensor t(std::move(dims));
    for (auto& v : t.vec()) v = static_cast<float>(rng.uniform(-a, a));
    return t;
  };
  float ax = std::sqrt(6.0f / (input_dim + hidden));
  float ah = std::sqrt(6.0f / (hidden + hidden));
  float ao = std::sqrt(6.0f / (2 * hidden + classes));
  p.wx_f = uniform_tensor({4 * hidden, input_dim}, ax);
  p.wh_f = uniform_tensor({4 * hidden, hidden}, ah);
  p.b_f = Tensor({4 * hidden});
  p.wx_b = uniform_tensor({4 * hidden, input_dim}, ax);
  p.wh_b = uniform_tensor({4 * hidden, hidden}, ah);
  p.b_b = Tensor({4 * hidden});
  p.w_out = uniform_tensor({classes, 2 * hidden}, ao);
  p.b_out = Tensor({classes});
  // forget-gate bias starts positive so early training retains memory
  for (int h = 0; h < hidden; ++h) {
    p.b_f[hidden + h] = 1.0f;
    p.b_b[hidden + h] = 1.0f;
  }
  return p;
}

namespace {

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// One direction of the recurrence; caches everything BPTT needs.
template <typename T>
struct LstmTrace {
  std::vector<T> gates;  // [L][4H] post-activation (i, f, g, o)
  std::vector<T> cells;  // [L][H]
  std::vector<T> tanhc;  // [L][H]
  std::vector<T> hidden; // [L][H]
};

template <typename T, typename Get>
void lstm_direction(const Tensor& wx, const Tensor& wh, const Tensor& b, Get at,
                    int D, int H, int L, bool backward, const float* seq,
                    LstmTrace<T>& tr) {
  tr.gates.assign(static_cast<std::size_t>(L) * 4 * H, T(0));
  tr.cells.assign(static_cast<std::size_t>(L) * H, T(0));
  tr.tanhc.assign(static_cast<std::size_t>(L) * H, T(0));
  tr.hidden.assign(static_cast<std::size_t>(L) * H, T(0));
  std::vector<T> h_prev(H, T(0)), c_prev(H, T(0)), z(4 * H);
  for (int step = 0; step < L; ++step) {
    int t = backward ? L - 1 - step : step;
    const float* x = seq + static_cast<std::size_t>(t) * D;
    for (int r = 0; r < 4 * H; ++r) {
      T acc = at(b, r);
      for (int j = 0; j < D; ++j)
        acc += at(wx, static_cast<std::size_t>(r) * D + j) * static_cast<T>(x[j]);
      for (int j = 0; j < H; ++j)
        acc += at(wh, static_cast<std::size_t>(r) * H + j) * h_prev[j];
      z[r] = acc;
    }
    T* g = tr.gates.data() + static_cast<std::size_t>(t) * 4 * H;
    T* c = tr.cells.data() + static_cast<std::size_t>(t) * H;
    T* tc = tr.tanhc.data() + static_cast<std::size_t>(t) * H;
    T* h = tr.hidden.data() + static_cast<std::size_t>(t) * H;
    for (int j = 0; j < H; ++j) {
      T gi = sigmoid(z[j]);
      T gf = sigmoid(z[H + j]);
      T gg = std::tanh(z[2 * H + j]);
      T go = sigmoid(z[3 * H + j]);
      g[j] = gi;
      g[H + j] = gf;
      g[2 * H + j] = gg;
      g[3 * H + j] = go;
      c[j] = gf * c_prev[j] + gi * gg;
      tc[j] = std::tanh(c[j]);
      h[j] = go * tc[j];
    }
    std::copy(h, h + H, h_prev.begin());
    std::copy(c, c + H, c_prev.begin());
  }
}

template <typename T>
struct BlstmTraceT {
  LstmTrace<T> fwd, bwd;
  std::vector<T> logits;  // [L][K]
  std::vector<T> probs;   // [L][K]
};

template <typename T, typename Get>
void blstm_forward_t(const BlstmParams& net, const Tensor& seq, Get at,
                     BlstmTraceT<T>& tr) {
  const int L = seq.dim(0);
  const int D = net.input_dim;
  const int H = net.hidden;
  const int K = net.classes;
  if (seq.dim(1) != D)
    throw std::invalid_argument("blstm_forward: sequence dimension " +
                                std::to_string(seq.dim(1)) + " != net input " +
                                std::to_string(D));
  if (L < 1) throw std::invalid_argument("blstm_forward: empty sequence");

  lstm_direction<T>(net.wx_f, net.wh_f, net.b_f, at, D, H, L, false, seq.data(),
                    tr.fwd);
  lstm_direction<T>(net.wx_b, net.wh_b, net.b_b, at, D, H, L, true, seq.data(),
                    tr.bwd);

  tr.logits.assign(static_cast<std::size_t>(L) * K, T(0));
  tr.probs.assign(static_cast<std::size_t>(L) * K, T(0));
  for (int t = 0; t < L; ++t) {
    const T* hf = tr.fwd.hidden.data() + static_cast<std::size_t>(t) * H;
    const T* hb = tr.bwd.hidden.data() + static_cast<std::size_t>(t) * H;
    T* lg = tr.logits.data() + static_cast<std::size_t>(t) * K;
    for (int k = 0; k < K; ++k) {
      T acc = at(net.b_out, k);
      const std::size_t row = static_cast<std::size_t>(k) * 2 * H;
      for (int j = 0; j < H; ++j) acc += at(net.w_out, row + j) * hf[j];
      for (int j = 0; j < H; ++j) acc += at(net.w_out, row + H + j) * hb[j];
      lg[k] = acc;
    }
    T mx = lg[0];
    for (int k = 1; k < K; ++k) mx = std::max(mx, lg[k]);
    T sum = 0;
    T* pr = tr.probs.data() + static_cast<std::size_t>(t) * K;
    for (int k = 0; k < K; ++k) {
      pr[k] = std::exp(lg[k] - mx);
      sum += pr[k];
    }
    for (int k = 0; k < K; ++k) pr[k] /= sum;
  }
}

float at_f(const Tensor& t, std::size_t i) { return t[i]; }
double at_d(const Tensor& t, std::size_t i) { return static_cast<double>(t[i]); }

}  // namespace

Tensor blstm_forward(const BlstmParams& net, const Tensor& seq) {
  BlstmTraceT<float> tr;
  blstm_forward_t<float>(net, seq, at_f, tr);
  const int L = seq.dim(0), K = net.classes;
  Tensor probs({L, K});
  std::copy(tr.probs.begin(), tr.probs.end(), probs.data());
  return probs;
}

double blstm_ctc_loss_double(const BlstmParams& net, const Tensor& seq,
                             const LabelString& target) {
  BlstmTraceT<double> tr;
  blstm_forward_t<double>(net, seq, at_d, tr);
  return ctc_loss_d(tr.probs, seq.dim(0), net.classes, target, nullptr);
}

namespace {

void zero_like(const BlstmParams& net, BlstmParams& g) {
  g.input_dim = net.input_dim;
  g.hidden = net.hidden;
  g.classes = net.classes;
  g.wx_f = Tensor(net.wx_f.dims());
  g.wh_f = Tensor(net.wh_f.dims());
  g.b_f = Tensor(net.b_f.dims());
  g.wx_b = Tensor(net.wx_b.dims());
  g.wh_b = Tensor(net.wh_b.dims());
  g.b_b = Tensor(net.b_b.dims());
  g.w_out = Tensor(net.w_out.dims());
  g.b_out = Tensor(net.b_out.dims());
}

// BPTT through one direction given per-step dh from the output layer.
// Templated like the forward so the gradient check can instantiate the very
// same derivation in double precision.
template <typename T, typename Get>
void lstm_direction_backward(const Tensor& wh, Get at, int D, int H, int L,
                             bool backward, const float* seq,
                             const LstmTrace<T>& tr, const std::vector<T>& dh_out,
                             std::vector<T>& dwx, std::vector<T>& dwh,
                             std::vector<T>& db) {
  std::vector<T> dh_next(H, T(0)), dc_next(H, T(0)), dz(4 * H);
  for (int step = L - 1; step >= 0; --step) {
    int t = backward ? L - 1 - step : step;
    const T* g = tr.gates.data() + static_cast<std::size_t>(t) * 4 * H;
    const T* tc = tr.tanhc.data() + static_cast<std::size_t>(t) * H;
    const float* x = seq + static_cast<std::size_t>(t) * D;
    int t_prev = backward ? t + 1 : t - 1;
    bool has_prev = step > 0;
    const T* c_prev =
        has_prev ? tr.cells.data() + static_cast<std::size_t>(t_prev) * H : nullptr;
    const T* h_prev =
        has_prev ? tr.hidden.data() + static_cast<std::size_t>(t_prev) * H : nullptr;

    for (int j = 0; j < H; ++j) {
      T dh = dh_out[static_cast<std::size_t>(t) * H + j] + dh_next[j];
      T gi = g[j], gf = g[H + j], gg = g[2 * H + j], go = g[3 * H + j];
      T dgo = dh * tc[j];
      T dc = dh * go * (T(1) - tc[j] * tc[j]) + dc_next[j];
      T dgi = dc * gg;
      T dgg = dc * gi;
      T dgf = has_prev ? dc * c_prev[j] : T(0);
      dc_next[j] = dc * gf;
      dz[j] = dgi * gi * (T(1) - gi);
      dz[H + j] = dgf * gf * (T(1) - gf);
      dz[2 * H + j] = dgg * (T(1) - gg * gg);
      dz[3 * H + j] = dgo * go * (T(1) - go);
    }
    std::fill(dh_next.begin(), dh_next.end(), T(0));
    for (int r = 0; r < 4 * H; ++r) {
      T d = dz[r];
      db[r] += d;
      T* wxrow = dwx.data() + static_cast<std::size_t>(r) * D;
      for (int j = 0; j < D; ++j) wxrow[j] += d * static_cast<T>(x[j]);
      if (has_prev) {
        T* whrow = dwh.data() + static_cast<std::size_t>(r) * H;
        for (int j = 0; j < H; ++j) whrow[j] += d * h_prev[j];
      }
      for (int j = 0; j < H; ++j)
        dh_next[j] += at(wh, static_cast<std::size_t>(r) * H + j) * d;
    }
  }
}

template <typename T>
struct BlstmGradsT {
  std::vector<T> wx_f, wh_f, b_f, wx_b, wh_b, b_b, w_out, b_out;

  explicit BlstmGradsT(const BlstmParams& net)
      : wx_f(net.wx_f.size(), T(0)),
        wh_f(net.wh_f.size(), T(0)),
        b_f(net.b_f.size(), T(0)),
        wx_b(net.wx_b.size(), T(0)),
        wh_b(net.wh_b.size(), T(0)),
        b_b(net.b_b.size(), T(0)),
        w_out(net.w_out.size(), T(0)),
        b_out(net.b_out.size(), T(0)) {}
};

template <typename T, typename Get>
double blstm_backward_t(const BlstmParams& net, const Tensor& seq,
                        const LabelString& target, Get at, BlstmGradsT<T>& grads) {
  const int L = seq.dim(0);
  const int H = net.hidden;
  const int K = net.classes;
  BlstmTraceT<T> tr;
  blstm_forward_t<T>(net, seq, at, tr);

  std::vector<double> probs_d(tr.probs.begin(), tr.probs.end());
  std::vector<double> dlogits_d;
  double loss = ctc_loss_d(probs_d, L, K, target, &dlogits_d);

  // output layer backward + per-step dh for both directions
  std::vector<T> dh_f(static_cast<std::size_t>(L) * H, T(0));
  std::vector<T> dh_b(static_cast<std::size_t>(L) * H, T(0));
  for (int t = 0; t < L; ++t) {
    const T* hf = tr.fwd.hidden.data() + static_cast<std::size_t>(t) * H;
    const T* hb = tr.bwd.hidden.data() + static_cast<std::size_t>(t) * H;
    for (int k = 0; k < K; ++k) {
      T d = static_cast<T>(dlogits_d[static_cast<std::size_t>(t) * K + k]);
      grads.b_out[k] += d;
      T* wrow = grads.w_out.data() + static_cast<std::size_t>(k) * 2 * H;
      const std::size_t nrow = static_cast<std::size_t>(k) * 2 * H;
      for (int j = 0; j < H; ++j) {
        wrow[j] += d * hf[j];
        wrow[H + j] += d * hb[j];
        dh_f[static_cast<std::size_t>(t) * H + j] += at(net.w_out, nrow + j) * d;
        dh_b[static_cast<std::size_t>(t) * H + j] += at(net.w_out, nrow + H + j) * d;
      }
    }
  }

  lstm_direction_backward<T>(net.wh_f, at, net.input_dim, H, L, false, seq.data(),
                             tr.fwd, dh_f, grads.wx_f, grads.wh_f, grads.b_f);
  lstm_direction_backward<T>(net.wh_b, at, net.input_dim, H, L, true, seq.data(),
                             tr.bwd, dh_b, grads.wx_b, grads.wh_b, grads.b_b);
  return loss;
}

}  // namespace

double blstm_backward(const BlstmParams& net, const Tensor& seq,
                      const LabelString& target, BlstmParams& grads) {
  BlstmGradsT<float> g(net);
  double loss = blstm_backward_t<float>(net, seq, target, at_f, g);
  auto add = [](Tensor& dst, const std::vector<float>& src) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
  };
  add(grads.wx_f, g.wx_f);
  add(grads.wh_f, g.wh_f);
  add(grads.b_f, g.b_f);
  add(grads.wx_b, g.wx_b);
  add(grads.wh_b, g.wh_b);
  add(grads.b_b, g.b_b);
  add(grads.w_out, g.w_out);
  add(grads.b_out, g.b_out);
  return loss;
}

BlstmDoubleGrads blstm_backward_double(const BlstmParams& net, const Tensor& seq,
                                       const LabelString& target) {
  BlstmGradsT<double> g(net);
  double loss = blstm_backward_t<double>(net, seq, target, at_d, g);
  BlstmDoubleGrads out;
  out.loss = loss;
  out.wx_f = std::move(g.wx_f);
  out.wh_f = std::move(g.wh_f);
  out.b_f = std::move(g.b_f);
  out.wx_b = std::move(g.wx_b);
  out.wh_b = std::move(g.wh_b);
  out.b_b = std::move(g.b_b);
  out.w_out = std::move(g.w_out);
  out.b_out = std::move(g.b_out);
  return out;
}

TrainResult blstm_train(BlstmParams& net, const std::vector<SeqSample>& train,
                        const std::vector<SeqSample>& val,
                        const BlstmTrainConfig& cfg, std::vector<std::string>* log) {
  if (train.empty()) throw std::invalid_argument("blstm_train: empty dataset");
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (ctc_min_length(train[i].label) > train[i].features.dim(0)) {
      std::ostringstream msg;
      msg << "blstm_train: sample " << i << " has label of length "
          << train[i].label.size() << " (needs " << ctc_min_length(train[i].label)
          << " steps with repeats) but only " << train[i].features.dim(0)
          << " feature steps";
      throw std::invalid_argument(msg.str());
    }
  }

  Rng root(cfg.seed);
  BlstmParams velocity, grads;
  zero_like(net, velocity);
  TrainResult result;
  float lr = cfg.learning_rate;
  float best_val = std::numeric_limits<float>::infinity();
  int stall = 0;

  std::vector<int> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  auto params_of = [](BlstmParams& p) {
    return std::vector<Tensor*>{&p.wx_f, &p.wh_f, &p.b_f, &p.wx_b,
                                &p.wh_b, &p.b_b, &p.w_out, &p.b_out};
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = root.derive("shuffle", static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      std::size_t e = std::min(order.size(), b + cfg.batch_size);
      zero_like(net, grads);
      for (std::size_t i = b; i < e; ++i) {
        const SeqSample& s = train[order[i]];
        epoch_loss += blstm_backward(net, s.features, s.label, grads);
      }
      const float inv = 1.0f / static_cast<float>(e - b);
      auto gs = params_of(grads);
      double norm2 = 0.0;
      for (Tensor* g : gs)
        for (float v : g->vec()) norm2 += static_cast<double>(v) * v * inv * inv;
      float clip_scale = 1.0f;
      if (cfg.grad_clip > 0 && norm2 > cfg.grad_clip * cfg.grad_clip)
        clip_scale = cfg.grad_clip / static_cast<float>(std::sqrt(norm2));

      auto vs = params_of(velocity);
      std::vector<Tensor*> ps = {&net.wx_f, &net.wh_f, &net.b_f, &net.wx_b,
                                 &net.wh_b, &net.b_b, &net.w_out, &net.b_out};
      for (std::size_t pi = 0; pi < ps.size(); ++pi) {
        Tensor& p = *ps[pi];
        Tensor& v = *vs[pi];
        Tensor& g = *gs[pi];
        for (std::size_t j = 0; j < p.size(); ++j) {
          v[j] = cfg.momentum * v[j] - lr * g[j] * inv * clip_scale;
          p[j] += v[j];
        }
      }
    }
    EpochStats st;
    st.train_loss = static_cast<float>(epoch_loss / train.size());
    st.learning_rate = lr;
    if (!std::isfinite(st.train_loss))
      throw std::runtime_error("blstm_train: non-finite loss at epoch " +
                               std::to_string(epoch));
    float sched = st.train_loss;
    if (!val.empty()) {
      double vloss = 0.0;
      for (const auto& s : val)
        vloss += ctc_loss(blstm_forward(net, s.features), s.label, false).loss;
      st.val_loss = static_cast<float>(vloss / val.size());
      st.val_accuracy = static_cast<float>(blstm_exact_match(net, val));
      sched = st.val_loss;
    }
    if (sched < best_val - 1e-6f) {
      best_val = sched;
      stall = 0;
    } else if (++stall >= cfg.patience) {
      lr *= cfg.decay_factor;
      stall = 0;
    }
    if (log) {
      std::ostringstream line;
      line << "epoch " << epoch << " lr " << st.learning_rate << " ctc_loss "
           << st.train_loss;
      if (!val.empty())
        line << " val_loss " << st.val_loss << " val_exact " << st.val_accuracy;
      log->push_back(line.str());
    }
    result.history.push_back(st);
  }
  return result;
}

double blstm_exact_match(const BlstmParams& net, const std::vector<SeqSample>& data) {
  if (data.empty()) return 0.0;
  int correct = 0;
  for (const auto& s : data) {
    CtcDecodeResult dec = ctc_best_path(blstm_forward(net, s.features));
    if (dec.labels == s.label) ++correct;
  }
  return static_cast<double>(correct) / data.size();
}

PlateReading read_plate_sequence(const GrayImage& plate, const Network& net9,
                                 const PcaModel& pca, const BlstmParams& blstm,
                                 const SeqRecConfig& cfg) {
  PlateReading reading;
  Tensor features = extract_feature_sequence(net9, plate, &pca, cfg);
  Tensor probs = blstm_forward(blstm, features);
  CtcDecodeResult dec = ctc_best_path(probs);
  if (dec.labels.empty()) {
    reading.unreadable = true;
    reading.step_probs = std::move(probs);
    return reading;
  }
  reading.text = labels_to_string(dec.labels);
  // per-character confidence: the strongest frame of each emitted run
  const int blank = probs.dim(1) - 1;
  const int L = static_cast<int>(dec.path.size());
  for (int t = 0; t < L;) {
    int p = dec.path[t];
    if (p == blank) {
      ++t;
      continue;
    }
    float best = 0.0f;
    while (t < L && dec.path[t] == p) {
      best = std::max(best, probs.at2(t, p));
      ++t;
    }
    reading.confidences.push_back(best);
  }
  reading.step_probs = std::move(probs);
  return reading;
}

}  // namespace lpdr
