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

#include "lpdr/pipeline.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "lpdr/architectures.hpp"
#include "lpdr/data_synth.hpp"
#include "lpdr/image_ops.hpp"
#include "lpdr/model_io.hpp"

namespace lpdr {

namespace fs = std::filesystem;
using nlohmann::json;

DetectorConfig detector_config_from(const RunConfig& cfg) {
  DetectorConfig d;
  d.scale_count = cfg.get_int("detector.scales");
  d.scale_ratio = cfg.get_double("detector.scale_ratio");
  d.pad = cfg.get_int("detector.pad");
  d.nms.delta = cfg.get_int("detector.nms_delta");
  d.nms.rlsa_multiplier = cfg.get_double("detector.rlsa_multiplier");
  d.nms.peak_threshold = cfg.get_double("detector.peak_threshold");
  d.min_height = cfg.get_int("detector.min_height");
  d.max_height_frac = cfg.get_double("detector.max_height_frac");
  d.min_aspect = cfg.get_double("detector.min_aspect");
  d.max_aspect = cfg.get_double("detector.max_aspect");
  d.box_nms_overlap = cfg.get_double("detector.box_nms_overlap");
  d.refine_edge_threshold = cfg.get_int("detector.refine_edge_threshold");
  d.row_band_threshold = cfg.get_double("detector.row_band_threshold");
  d.col_band_threshold = cfg.get_double("detector.col_band_threshold");
  d.enlarge_frac = cfg.get_double("detector.enlarge_frac");
  d.refine_margin_x = cfg.get_double("detector.refine_margin_x");
  d.refine_margin_y = cfg.get_double("detector.refine_margin_y");
  d.verify_threshold = cfg.get_double("detector.verify_threshold");
  d.jitter_count = cfg.get_int("detector.jitter_count");
  d.jitter_frac = cfg.get_double("detector.jitter_frac");
  d.seed = cfg.get_u64("seed");
  return d;
}

SegRecConfig segrec_config_from(const RunConfig& cfg) {
  SegRecConfig s;
  s.max_chars = cfg.get_int("segrec.max_chars");
  s.polarity_margin = cfg.get_double("segrec.polarity_margin");
  s.split_width_ratio = cfg.get_double("segrec.split_ratio");
  s.merge_gap_ratio = cfg.get_double("segrec.merge_ratio");
  s.tta_count = cfg.get_int("segrec.tta");
  s.contrast_saturate = cfg.get_double("segrec.contrast_saturate");
  s.min_height_frac = cfg.get_double("segrec.min_height_frac");
  s.niblack.window = cfg.get_int("segrec.niblack_window");
  s.niblack.k = cfg.get_double("segrec.niblack_k");
  s.seed = cfg.get_u64("seed");
  return s;
}

SeqRecConfig seqrec_config_from(const RunConfig& cfg) {
  SeqRecConfig s;
  s.pad_lr = cfg.get_int("seqrec.pad_lr");
  s.pca_dim = cfg.get_int("seqrec.pca_dim");
  s.seed = cfg.get_u64("seed");
  return s;
}

namespace {

SgdConfig sgd_config_from(const RunConfig& cfg) {
  SgdConfig s;
  s.learning_rate = static_cast<float>(cfg.get_double("train.lr"));
  s.momentum = static_cast<float>(cfg.get_double("train.momentum"));
  s.epochs = cfg.get_int("train.epochs");
  s.batch_size = cfg.get_int("train.batch");
  s.decay_factor = static_cast<float>(cfg.get_double("train.decay"));
  s.patience = cfg.get_int("train.patience");
  s.seed = cfg.get_u64("seed");
  return s;
}

std::string pad_number(int n, int width) {
  std::string s = std::to_string(n);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// synth

void synth_dataset(const RunConfig& cfg, const std::string& out_dir, std::ostream* log) {
  Rng root(cfg.get_u64("seed"));
  fs::create_directories(out_dir);

  AugmentConfig base;
  base.noise_sigma = cfg.get_double("synth.noise_sigma");
  base.lighting_amp = cfg.get_double("synth.lighting_amp");
  base.rotate_deg = cfg.get_double("synth.rotate_deg");
  base.shear = cfg.get_double("synth.shear");
  base.translate_px = cfg.get_double("synth.translate_px");

  auto open_manifest = [&](const std::string& name) {
    std::ofstream os(fs::path(out_dir) / name);
    if (!os) throw std::runtime_error("cannot write manifest " + name + " in " + out_dir);
    return os;
  };

  {  // characters
    int n = cfg.get_int("synth.chars");
    fs::create_directories(fs::path(out_dir) / "chars");
    std::ofstream manifest = open_manifest("chars.jsonl");
    Rng rng = root.derive("chars");
    for (int i = 0; i < n; ++i) {
      int cls = static_cast<int>(rng.uniform_int(kAlphabetSize));
      AugmentConfig a = base;
      a.seed = rng.u64();
      GrayImage img = synth_char(cls, a);
      std::string rel = "chars/char_" + pad_number(i, 6) + ".pgm";
      write_pgm((fs::path(out_dir) / rel).string(), img);
      manifest << json{{"file", rel}, {"label", std::string(1, class_to_char(cls))}}
               << "\n";
    }
    if (log) *log << "synth: " << n << " characters\n";
  }

  {  // 24x24 negatives for the character net
    int n = cfg.get_int("synth.negatives");
    fs::create_directories(fs::path(out_dir) / "negatives");
    std::ofstream manifest = open_manifest("negatives.jsonl");
    Rng rng = root.derive("negatives");
    for (int i = 0; i < n; ++i) {
      auto kind = static_cast<NegativeKind>(rng.uniform_int(3));
      GrayImage img = synth_negative(kind, 24, 24, rng.u64());
      std::string rel = "negatives/neg_" + pad_number(i, 6) + ".pgm";
      write_pgm((fs::path(out_dir) / rel).string(), img);
      manifest << json{{"file", rel}} << "\n";
    }
    if (log) *log << "synth: " << n << " negatives\n";
  }

  {  // plates
    int n = cfg.get_int("synth.plates");
    fs::create_directories(fs::path(out_dir) / "plates");
    std::ofstream manifest = open_manifest("plates.jsonl");
    Rng rng = root.derive("plates");
    double subtitle_prob = cfg.get_double("synth.subtitle_prob");
    for (int i = 0; i < n; ++i) {
      std::string label = random_label(rng, cfg.get_int("synth.min_label_len"),
                                       cfg.get_int("synth.max_label_len"));
      AugmentConfig a = base;
      a.seed = rng.u64();
      PlateOptions opts;
      opts.char_height = 24;
      opts.subtitle = rng.uniform() < subtitle_prob;
      PlateSample plate = synth_plate(label, a, opts);
      std::string rel = "plates/plate_" + pad_number(i, 6) + ".pgm";
      write_pgm((fs::path(out_dir) / rel).string(), plate.image);
      json boxes = json::array();
      for (const auto& b : plate.char_boxes) boxes.push_back({b.x, b.y, b.w, b.h});
      manifest << json{{"file", rel},
                       {"label", label},
                       {"subtitle", plate.subtitle},
                       {"char_boxes", boxes}}
               << "\n";
    }
    if (log) *log << "synth: " << n << " plates\n";
  }

  {  // 100x30-ish negatives for the verifier (textures and general text)
    int n = cfg.get_int("synth.plate_negatives");
    fs::create_directories(fs::path(out_dir) / "plate_negatives");
    std::ofstream manifest = open_manifest("plate_negatives.jsonl");
    Rng rng = root.derive("plate-negatives");
    for (int i = 0; i < n; ++i) {
      auto kind = static_cast<NegativeKind>(rng.uniform_int(4));
      int w = rng.uniform_int(80, 160), h = rng.uniform_int(24, 48);
      GrayImage img = synth_negative(kind, w, h, rng.u64());
      std::string rel = "plate_negatives/pn_" + pad_number(i, 6) + ".pgm";
      write_pgm((fs::path(out_dir) / rel).string(), img);
      manifest << json{{"file", rel}} << "\n";
    }
    if (log) *log << "synth: " << n << " plate negatives\n";
  }

  {  // scenes with ground truth
    int n = cfg.get_int("synth.scenes");
    fs::create_directories(fs::path(out_dir) / "scenes");
    std::ofstream manifest = open_manifest("scenes.jsonl");
    Rng rng = root.derive("scenes");
    SceneOptions opts;
    opts.width = cfg.get_int("synth.scene_width");
    opts.height = cfg.get_int("synth.scene_height");
    opts.min_char_height = cfg.get_int("synth.min_char_height");
    opts.max_char_height = cfg.get_int("synth.max_char_height");
    opts.subtitle_prob = cfg.get_double("synth.subtitle_prob");
    opts.min_label_len = cfg.get_int("synth.min_label_len");
    opts.max_label_len = cfg.get_int("synth.max_label_len");
    int pmin = cfg.get_int("synth.scene_plates_min");
    int pmax = cfg.get_int("synth.scene_plates_max");
    for (int i = 0; i < n; ++i) {
      int count = rng.uniform_int(pmin, pmax);
      AugmentConfig a = base;
      a.seed = rng.u64();
      SceneTruth scene = synth_scene(count, a, opts);
      std::string rel = "scenes/scene_" + pad_number(i, 6) + ".pgm";
      write_pgm((fs::path(out_dir) / rel).string(), scene.image);
      json plates = json::array();
      for (const auto& p : scene.plates)
        plates.push_back({{"x", p.box.x},
                          {"y", p.box.y},
                          {"w", p.box.w},
                          {"h", p.box.h},
                          {"label", p.label},
                          {"subtitle", p.subtitle}});
      manifest << json{{"image", rel}, {"plates", plates}} << "\n";
    }
    if (log) *log << "synth: " << n << " scenes\n";
  }
}

// ---------------------------------------------------------------------------
// manifests

namespace {

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<json> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& ex) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

}  // namespace

std::vector<SceneRecord> load_scene_manifest(const std::string& path) {
  std::vector<SceneRecord> out;
  for (const auto& j : read_jsonl(path)) {
    SceneRecord rec;
    rec.image = j.at("image").get<std::string>();
    for (const auto& p : j.at("plates")) {
      TruthPlate tp;
      tp.box = {p.at("x").get<int>(), p.at("y").get<int>(), p.at("w").get<int>(),
                p.at("h").get<int>()};
      tp.label = p.at("label").get<std::string>();
      tp.subtitle = p.value("subtitle", false);
      rec.plates.push_back(std::move(tp));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<PlateRecord> load_plate_manifest(const std::string& path) {
  std::vector<PlateRecord> out;
  for (const auto& j : read_jsonl(path))
    out.push_back({j.at("file").get<std::string>(), j.at("label").get<std::string>(),
                   j.value("subtitle", false)});
  return out;
}

std::vector<CharRecord> load_char_manifest(const std::string& path) {
  std::vector<CharRecord> out;
  for (const auto& j : read_jsonl(path)) {
    std::string label = j.at("label").get<std::string>();
    int cls = label.size() == 1 ? char_to_class(label[0]) : -1;
    if (cls < 0) throw std::runtime_error(path + ": bad label '" + label + "'");
    out.push_back({j.at("file").get<std::string>(), cls});
  }
  return out;
}

std::vector<std::string> load_file_manifest(const std::string& path) {
  std::vector<std::string> out;
  for (const auto& j : read_jsonl(path)) out.push_back(j.at("file").get<std::string>());
  return out;
}

// ---------------------------------------------------------------------------
// training

const char* const kTrainTargets[5] = {"char37", "char36", "char36-lbp", "plate2",
                                      "blstm"};

namespace {

void fill_plane(Tensor& t, int sample, int channel, const GrayImage& img) {
  const int plane = img.width * img.height;
  float* dst = t.data() + (static_cast<std::size_t>(sample) * t.dim(1) + channel) * plane;
  for (int i = 0; i < plane; ++i) dst[i] = img.pixels[i];
}

Tensor per_pixel_mean(const Dataset& ds) {
  const auto& d = ds.inputs.dims();
  Tensor mean({d[1], d[2], d[3]});
  std::vector<double> acc(mean.size(), 0.0);
  const std::size_t plane = mean.size();
  for (int n = 0; n < d[0]; ++n)
    for (std::size_t i = 0; i < plane; ++i)
      acc[i] += ds.inputs[static_cast<std::size_t>(n) * plane + i];
  for (std::size_t i = 0; i < plane; ++i)
    mean[i] = static_cast<float>(acc[i] / d[0]);
  return mean;
}

Tensor constant_mean(const Dataset& ds) {
  const auto& d = ds.inputs.dims();
  double acc = 0.0;
  for (float v : ds.inputs.vec()) acc += v;
  Tensor mean({d[1], d[2], d[3]});
  mean.fill(static_cast<float>(acc / ds.inputs.size()));
  return mean;
}

// deterministic train/validation split after a seeded shuffle
void split_dataset(const Dataset& all, double val_frac, std::uint64_t seed,
                   Dataset* train, Dataset* val) {
  const auto& d = all.inputs.dims();
  const int n = d[0];
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  Rng split_rng = rng.derive("split");
  split_rng.shuffle(idx);
  int nval = std::min(n - 1, std::max(1, static_cast<int>(n * val_frac)));
  const std::size_t plane = all.inputs.size() / n;
  auto gather = [&](int begin, int end, Dataset* out) {
    out->inputs = Tensor({end - begin, d[1], d[2], d[3]});
    out->labels.resize(end - begin);
    for (int i = begin; i < end; ++i) {
      std::copy_n(all.inputs.data() + static_cast<std::size_t>(idx[i]) * plane, plane,
                  out->inputs.data() + static_cast<std::size_t>(i - begin) * plane);
      out->labels[i - begin] = all.labels[idx[i]];
    }
  };
  gather(nval, n, train);
  gather(0, nval, val);
}

void log_history(std::ostream* log, const std::vector<std::string>& lines) {
  if (!log) return;
  for (const auto& l : lines) *log << l << "\n";
}

int capped(int available, int cap) {
  return cap > 0 ? std::min(available, cap) : available;
}

void train_char37(const RunConfig& cfg, const std::string& data_dir,
                  const std::string& models_dir, std::ostream* log) {
  auto chars = load_char_manifest((fs::path(data_dir) / "chars.jsonl").string());
  auto negs = load_file_manifest((fs::path(data_dir) / "negatives.jsonl").string());
  int nc = capped(static_cast<int>(chars.size()), cfg.get_int("train.char37.max_chars"));
  int nn = capped(static_cast<int>(negs.size()), cfg.get_int("train.char37.max_negatives"));
  if (nc == 0 || nn == 0) throw std::runtime_error("char37: empty dataset");

  Dataset all;
  all.inputs = Tensor({nc + nn, 1, 24, 24});
  all.labels.reserve(nc + nn);
  for (int i = 0; i < nc; ++i) {
    GrayImage img = read_pgm((fs::path(data_dir) / chars[i].file).string());
    fill_plane(all.inputs, i, 0, img);
    all.labels.push_back(chars[i].label);
  }
  for (int i = 0; i < nn; ++i) {
    GrayImage img = read_pgm((fs::path(data_dir) / negs[i]).string());
    fill_plane(all.inputs, nc + i, 0, img);
    all.labels.push_back(kAlphabetSize);  // background class
  }

  Dataset train, val;
  split_dataset(all, cfg.get_double("train.val_frac"), cfg.get_u64("seed"), &train, &val);
  Network net = make_char_saliency_net();
  Rng wrng(cfg.get_u64("seed"));
  Rng init_rng = wrng.derive("init-char37");
  net.init_weights(init_rng);
  // a constant mean keeps the net usable as a dense fully-convolutional scanner
  net.set_mean_image(constant_mean(train));

  std::vector<std::string> lines;
  sgd_train(net, train, val, sgd_config_from(cfg), &lines);
  log_history(log, lines);

  int rounds = cfg.get_int("train.bootstrap_rounds");
  if (rounds > 0 && static_cast<int>(negs.size()) > nn) {
    std::vector<GrayImage> pool;
    for (std::size_t i = nn; i < negs.size(); ++i)
      pool.push_back(read_pgm((fs::path(data_dir) / negs[i]).string()));
    SgdConfig bcfg = sgd_config_from(cfg);
    bcfg.epochs = cfg.get_int("train.bootstrap_epochs");
    BootstrapResult br =
        bootstrap_negatives(net, pool, train, bcfg, rounds, kAlphabetSize);
    if (log) {
      *log << "bootstrap:";
      for (double r : br.fp_rates) *log << " fp_rate " << r;
      *log << "\n";
    }
  }

  ModelBundle bundle;
  bundle.net = std::move(net);
  fs::create_directories(models_dir);
  save_model((fs::path(models_dir) / "char37.lpdr").string(), bundle);
}

void train_char36(const RunConfig& cfg, const std::string& data_dir,
                  const std::string& models_dir, bool with_lbp, std::ostream* log) {
  auto chars = load_char_manifest((fs::path(data_dir) / "chars.jsonl").string());
  int nc = capped(static_cast<int>(chars.size()), cfg.get_int("train.char36.max_chars"));
  if (nc == 0) throw std::runtime_error("char36: empty dataset");

  const int channels = with_lbp ? 2 : 1;
  Dataset all;
  all.inputs = Tensor({nc, channels, 24, 24});
  all.labels.reserve(nc);
  for (int i = 0; i < nc; ++i) {
    GrayImage img = read_pgm((fs::path(data_dir) / chars[i].file).string());
    fill_plane(all.inputs, i, 0, img);
    if (with_lbp) fill_plane(all.inputs, i, 1, lbp_map(img));
    all.labels.push_back(chars[i].label);
  }

  Dataset train, val;
  split_dataset(all, cfg.get_double("train.val_frac"), cfg.get_u64("seed") + 1, &train,
                &val);
  Network net = make_char_recognition_net(channels);
  Rng wrng(cfg.get_u64("seed"));
  Rng init_rng = wrng.derive(with_lbp ? "init-char36-lbp" : "init-char36");
  net.init_weights(init_rng);

  if (with_lbp) {
    // warm-start from the grayscale recognizer when available: every layer
    // matches except the first convolution, whose gray slice carries over
    fs::path base = fs::path(models_dir) / "char36.lpdr";
    if (fs::exists(base)) {
      ModelBundle prev = load_model(base.string());
      if (prev.net) {
        auto& dst = net.params();
        const auto& src = prev.net->params();
        for (std::size_t li = 0; li < dst.size(); ++li) {
          if (dst[li].w.empty()) continue;
          if (dst[li].w.dims() == src[li].w.dims()) {
            dst[li] = src[li];
          } else {
            // conv1: [64,2,3,3] vs [64,1,3,3]
            const auto& sw = src[li].w;
            auto& dw = dst[li].w;
            for (int f = 0; f < dw.dim(0); ++f)
              for (int ky = 0; ky < dw.dim(2); ++ky)
                for (int kx = 0; kx < dw.dim(3); ++kx)
                  dw.at4(f, 0, ky, kx) = sw.at4(f, 0, ky, kx);
            dst[li].b = src[li].b;
          }
        }
        if (log) *log << "char36-lbp: warm start from char36.lpdr\n";
      }
    }
  }

  net.set_mean_image(per_pixel_mean(train));
  SgdConfig scfg = sgd_config_from(cfg);
  if (int e = cfg.get_int("train.char36.epochs"); e > 0) scfg.epochs = e;
  scfg.seed = cfg.get_u64("seed") + (with_lbp ? 11 : 7);
  std::vector<std::string> lines;
  sgd_train(net, train, val, scfg, &lines);
  log_history(log, lines);

  ModelBundle bundle;
  bundle.net = std::move(net);
  fs::create_directories(models_dir);
  save_model((fs::path(models_dir) / (with_lbp ? "char36-lbp.lpdr" : "char36.lpdr")).string(),
             bundle);
}

// random background ring around a plate crop, standing in for the context a
// detector box carries
GrayImage with_margin(const GrayImage& plate, Rng& rng, double max_frac_x,
                      double max_frac_y) {
  int mx = static_cast<int>(plate.width * rng.uniform(0.0, max_frac_x));
  int my = static_cast<int>(plate.height * rng.uniform(0.0, max_frac_y));
  if (mx == 0 && my == 0) return plate;
  GrayImage ring = synth_negative(NegativeKind::Texture, plate.width + 2 * mx,
                                  plate.height + 2 * my, rng.u64());
  for (int y = 0; y < plate.height; ++y)
    for (int x = 0; x < plate.width; ++x) ring.at(mx + x, my + y) = plate.at(x, y);
  return ring;
}

void train_plate2(const RunConfig& cfg, const std::string& data_dir,
                  const std::string& models_dir, std::ostream* log) {
  auto plates = load_plate_manifest((fs::path(data_dir) / "plates.jsonl").string());
  auto negs = load_file_manifest((fs::path(data_dir) / "plate_negatives.jsonl").string());
  int np = capped(static_cast<int>(plates.size()), cfg.get_int("train.plate2.max_plates"));
  int nn = capped(static_cast<int>(negs.size()), cfg.get_int("train.plate2.max_negatives"));
  if (np == 0 || nn == 0) throw std::runtime_error("plate2: empty dataset");

  Rng rng(cfg.get_u64("seed"));
  Rng margin_rng = rng.derive("plate-margins");
  Dataset all;
  all.inputs = Tensor({np + nn, 1, 30, 100});
  all.labels.reserve(np + nn);
  for (int i = 0; i < np; ++i) {
    GrayImage img = read_pgm((fs::path(data_dir) / plates[i].file).string());
    // detector boxes carry extra margin; train on the same distribution
    GrayImage framed = with_margin(img, margin_rng, 0.04, 0.28);
    fill_plane(all.inputs, i, 0, resize_bilinear(framed, 100, 30));
    all.labels.push_back(1);
  }
  for (int i = 0; i < nn; ++i) {
    GrayImage img = read_pgm((fs::path(data_dir) / negs[i]).string());
    fill_plane(all.inputs, np + i, 0, resize_bilinear(img, 100, 30));
    all.labels.push_back(0);
  }

  Dataset train, val;
  split_dataset(all, cfg.get_double("train.val_frac"), cfg.get_u64("seed") + 2, &train,
                &val);
  Network net = make_plate_verifier_net();
  Rng init_rng = rng.derive("init-plate2");
  net.init_weights(init_rng);
  net.set_mean_image(per_pixel_mean(train));
  SgdConfig scfg = sgd_config_from(cfg);
  scfg.seed = cfg.get_u64("seed") + 13;
  std::vector<std::string> lines;
  sgd_train(net, train, val, scfg, &lines);
  log_history(log, lines);

  ModelBundle bundle;
  bundle.net = std::move(net);
  fs::create_directories(models_dir);
  save_model((fs::path(models_dir) / "plate2.lpdr").string(), bundle);
}

void train_blstm(const RunConfig& cfg, const std::string& data_dir,
                 const std::string& models_dir, std::ostream* log) {
  auto plates = load_plate_manifest((fs::path(data_dir) / "plates.jsonl").string());
  int np = capped(static_cast<int>(plates.size()), cfg.get_int("train.blstm.max_plates"));
  if (np == 0) throw std::runtime_error("blstm: empty dataset");

  ModelBundle feat = load_model((fs::path(models_dir) / "char36.lpdr").string());
  if (!feat.net) throw std::runtime_error("blstm: char36.lpdr has no network");

  SeqRecConfig seq_cfg = seqrec_config_from(cfg);
  Rng rng(cfg.get_u64("seed"));
  Rng margin_rng = rng.derive("blstm-margins");

  // raw 5096-dim features for every training plate, with detector-like margins
  std::vector<Tensor> raw;
  std::vector<LabelString> labels;
  raw.reserve(np);
  for (int i = 0; i < np; ++i) {
    GrayImage img = read_pgm((fs::path(data_dir) / plates[i].file).string());
    GrayImage framed = with_margin(img, margin_rng, 0.04, 0.28);
    raw.push_back(extract_feature_sequence(*feat.net, framed, nullptr, seq_cfg));
    labels.push_back(string_to_labels(plates[i].label));
    if (log && (i + 1) % 50 == 0)
      *log << "blstm: features " << (i + 1) << "/" << np << "\n";
  }

  // PCA on a subsample of all window features
  const int D = raw[0].dim(1);
  const int want = std::min<long long>(cfg.get_int("train.pca.samples"),
                                       static_cast<long long>(raw.size()) * raw[0].dim(0));
  Rng pca_rng = rng.derive("pca-sample");
  Tensor sample({static_cast<int>(want), D});
  for (int i = 0; i < want; ++i) {
    int p = static_cast<int>(pca_rng.uniform_int(raw.size()));
    int t = static_cast<int>(pca_rng.uniform_int(raw[p].dim(0)));
    std::copy_n(raw[p].data() + static_cast<std::size_t>(t) * D, D,
                sample.data() + static_cast<std::size_t>(i) * D);
  }
  if (log) *log << "blstm: fitting pca on " << want << " x " << D << "\n";
  PcaModel pca = fit_pca(sample, cfg.get_int("train.pca.dim"));
  if (log && pca.kept_rank < pca.out_dim())
    *log << "blstm: pca rank deficient, kept " << pca.kept_rank << " of "
         << pca.out_dim() << " components (rest zero-padded)\n";

  std::vector<SeqSample> samples(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    samples[i].features = apply_pca(pca, raw[i]);
    samples[i].label = labels[i];
    raw[i] = Tensor();
  }
  // deterministic split
  Rng split_rng = rng.derive("blstm-split");
  std::vector<int> idx(samples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  split_rng.shuffle(idx);
  int nval = std::max(1, static_cast<int>(samples.size() / 10));
  std::vector<SeqSample> val, train;
  for (int i = 0; i < nval; ++i) val.push_back(samples[idx[i]]);
  for (std::size_t i = nval; i < idx.size(); ++i) train.push_back(samples[idx[i]]);

  BlstmTrainConfig bcfg;
  bcfg.learning_rate = static_cast<float>(cfg.get_double("train.blstm.lr"));
  bcfg.momentum = static_cast<float>(cfg.get_double("train.blstm.momentum"));
  bcfg.grad_clip = static_cast<float>(cfg.get_double("train.blstm.grad_clip"));
  bcfg.batch_size = cfg.get_int("train.blstm.batch");
  bcfg.epochs = cfg.get_int("train.blstm.epochs");
  bcfg.patience = cfg.get_int("train.blstm.patience");
  bcfg.seed = cfg.get_u64("seed") + 17;

  Rng init_rng = rng.derive("init-blstm");
  BlstmParams net = blstm_init(pca.out_dim(), cfg.get_int("train.blstm.hidden"), 37,
                               init_rng);
  std::vector<std::string> lines;
  blstm_train(net, train, val, bcfg, &lines);
  log_history(log, lines);
  if (log) *log << "blstm: val exact-match " << blstm_exact_match(net, val) << "\n";

  ModelBundle bundle;
  bundle.blstm = std::move(net);
  bundle.pca = std::move(pca);
  fs::create_directories(models_dir);
  save_model((fs::path(models_dir) / "blstm.lpdr").string(), bundle);
}

}  // namespace

void train_target(const std::string& target, const RunConfig& cfg,
                  const std::string& data_dir, const std::string& models_dir,
                  std::ostream* log) {
  if (target == "char37") return train_char37(cfg, data_dir, models_dir, log);
  if (target == "char36") return train_char36(cfg, data_dir, models_dir, false, log);
  if (target == "char36-lbp") return train_char36(cfg, data_dir, models_dir, true, log);
  if (target == "plate2") return train_plate2(cfg, data_dir, models_dir, log);
  if (target == "blstm") return train_blstm(cfg, data_dir, models_dir, log);
  throw std::invalid_argument("unknown train target: " + target);
}

// ---------------------------------------------------------------------------
// detect / recognize

namespace {

// static partition worker pool; results keyed by index so output order and
// derived seeds never depend on scheduling
template <typename Fn>
void parallel_indexed(int n, int jobs, Fn fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> threads;
  int workers = std::min(jobs, n);
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w)
    threads.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : threads) t.join();
}

}  // namespace

void draw_box(GrayImage& img, const Rect& r) {
  auto line = [&](int x0, int y0, int x1, int y1, std::uint8_t v) {
    for (int y = std::max(0, y0); y <= std::min(img.height - 1, y1); ++y)
      for (int x = std::max(0, x0); x <= std::min(img.width - 1, x1); ++x)
        img.at(x, y) = v;
  };
  line(r.x, r.y, r.x2() - 1, r.y, 255);
  line(r.x, r.y2() - 1, r.x2() - 1, r.y2() - 1, 255);
  line(r.x, r.y, r.x, r.y2() - 1, 255);
  line(r.x2() - 1, r.y, r.x2() - 1, r.y2() - 1, 255);
  line(r.x - 1, r.y - 1, r.x2(), r.y - 1, 0);
  line(r.x - 1, r.y2(), r.x2(), r.y2(), 0);
  line(r.x - 1, r.y - 1, r.x - 1, r.y2(), 0);
  line(r.x2(), r.y - 1, r.x2(), r.y2(), 0);
}

std::vector<DetectionRecord> run_detect(const RunConfig& cfg,
                                        const std::string& models_dir,
                                        const std::vector<std::string>& images,
                                        const std::string& image_root, int jobs,
                                        const std::string& annotate_dir,
                                        std::ostream* log) {
  ModelBundle char_bundle = load_model((fs::path(models_dir) / "char37.lpdr").string());
  ModelBundle plate_bundle = load_model((fs::path(models_dir) / "plate2.lpdr").string());
  if (!char_bundle.net || !plate_bundle.net)
    throw std::runtime_error("detect: char37.lpdr and plate2.lpdr are required");
  Network fcn = char_bundle.net->to_fully_convolutional();
  DetectorConfig dcfg = detector_config_from(cfg);

  std::vector<std::vector<BBox>> per_image(images.size());
  std::vector<std::string> errors(images.size());
  parallel_indexed(static_cast<int>(images.size()), jobs, [&](int i) {
    try {
      GrayImage img = read_pgm((fs::path(image_root) / images[i]).string());
      per_image[i] = detect(img, fcn, *plate_bundle.net, dcfg,
                            static_cast<std::uint64_t>(i));
      if (!annotate_dir.empty()) {
        GrayImage annotated = img;
        for (const auto& b : per_image[i]) draw_box(annotated, b.rect());
        fs::path out = fs::path(annotate_dir) / fs::path(images[i]).filename();
        write_pgm(out.string(), annotated);
      }
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  });

  std::vector<DetectionRecord> records;
  int failed = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!errors[i].empty()) {
      ++failed;
      if (log) *log << "detect: " << images[i] << ": " << errors[i] << "\n";
      continue;
    }
    for (const auto& b : per_image[i]) records.push_back({images[i], b});
  }
  if (failed == static_cast<int>(images.size()) && !images.empty())
    throw std::runtime_error("detect: every input failed");
  if (log)
    *log << "detect: " << records.size() << " boxes over " << images.size()
         << " images\n";
  return records;
}

void write_detections(const std::string& path, const std::vector<DetectionRecord>& dets) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& d : dets)
    os << json{{"image", d.image}, {"x", d.box.x},     {"y", d.box.y},
               {"w", d.box.w},     {"h", d.box.h},     {"score", d.box.score}}
       << "\n";
}

std::vector<DetectionRecord> load_detections(const std::string& path) {
  std::vector<DetectionRecord> out;
  for (const auto& j : read_jsonl(path)) {
    DetectionRecord d;
    d.image = j.at("image").get<std::string>();
    d.box = {j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(),
             j.at("h").get<int>(), j.at("score").get<float>()};
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<ReadingRecord> run_recognize(const RunConfig& cfg,
                                         const std::string& models_dir,
                                         const std::string& mode,
                                         const std::vector<DetectionRecord>& dets,
                                         const std::string& image_root, int jobs,
                                         std::ostream* log) {
  ModelBundle char36, char36_lbp, seq_bundle;
  if (mode == "seg") {
    fs::path p = fs::path(models_dir) / "char36.lpdr";
    if (!fs::exists(p)) throw std::runtime_error("recognize --mode seg needs char36.lpdr");
    char36 = load_model(p.string());
    fs::path lbp = fs::path(models_dir) / "char36-lbp.lpdr";
    if (fs::exists(lbp)) char36_lbp = load_model(lbp.string());
  } else if (mode == "seq") {
    fs::path f = fs::path(models_dir) / "char36.lpdr";
    fs::path b = fs::path(models_dir) / "blstm.lpdr";
    if (!fs::exists(f)) throw std::runtime_error("recognize --mode seq needs char36.lpdr");
    if (!fs::exists(b)) throw std::runtime_error("recognize --mode seq needs blstm.lpdr");
    char36 = load_model(f.string());
    seq_bundle = load_model(b.string());
    if (!seq_bundle.blstm || !seq_bundle.pca)
      throw std::runtime_error("blstm.lpdr lacks the blstm/pca records");
  } else {
    throw std::invalid_argument("recognize: mode must be seg or seq");
  }

  SegRecConfig seg_cfg = segrec_config_from(cfg);
  SeqRecConfig seq_cfg = seqrec_config_from(cfg);

  std::vector<ReadingRecord> out(dets.size());
  // group crops by image to read each file once
  std::map<std::string, std::vector<int>> by_image;
  for (std::size_t i = 0; i < dets.size(); ++i)
    by_image[dets[i].image].push_back(static_cast<int>(i));
  std::vector<const std::pair<const std::string, std::vector<int>>*> groups;
  for (const auto& kv : by_image) groups.push_back(&kv);

  parallel_indexed(static_cast<int>(groups.size()), jobs, [&](int gi) {
    const auto& [image, indices] = *groups[gi];
    GrayImage img = read_pgm((fs::path(image_root) / image).string());
    for (int i : indices) {
      const auto& det = dets[i];
      ReadingRecord rec;
      rec.image = det.image;
      rec.box = det.box;
      try {
        GrayImage patch = crop(img, det.box.rect());
        PlateReading reading;
        if (mode == "seg") {
          SegRecConfig c = seg_cfg;
          c.seed = seg_cfg.seed ^ (0x9e37ULL + static_cast<std::uint64_t>(i));
          reading = read_plate_segmented(patch, *char36.net,
                                         char36_lbp.net ? &*char36_lbp.net : nullptr, c);
        } else {
          reading = read_plate_sequence(patch, *char36.net, *seq_bundle.pca,
                                        *seq_bundle.blstm, seq_cfg);
        }
        rec.text = reading.text;
        rec.confidences = reading.confidences;
        rec.unreadable = reading.unreadable;
      } catch (const std::exception& ex) {
        rec.unreadable = true;
        if (log) *log << "recognize: " << det.image << ": " << ex.what() << "\n";
      }
      out[i] = std::move(rec);
    }
  });
  return out;
}

void write_readings(const std::string& path, const std::vector<ReadingRecord>& readings) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& r : readings) {
    json conf = json::array();
    for (float c : r.confidences) conf.push_back(c);
    os << json{{"image", r.image},       {"x", r.box.x},
               {"y", r.box.y},           {"w", r.box.w},
               {"h", r.box.h},           {"score", r.box.score},
               {"text", r.text},         {"confidence", conf},
               {"unreadable", r.unreadable}}
       << "\n";
  }
}

std::vector<ReadingRecord> load_readings(const std::string& path) {
  std::vector<ReadingRecord> out;
  for (const auto& j : read_jsonl(path)) {
    ReadingRecord r;
    r.image = j.at("image").get<std::string>();
    r.box = {j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(),
             j.at("h").get<int>(), j.at("score").get<float>()};
    r.text = j.at("text").get<std::string>();
    for (const auto& c : j.at("confidence")) r.confidences.push_back(c.get<float>());
    r.unreadable = j.value("unreadable", false);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// evaluation

DetectionReport eval_detections(const std::vector<DetectionRecord>& dets,
                                const std::vector<SceneRecord>& truth,
                                double overlap_threshold) {
  OverlapCriterion crit;
  crit.threshold = overlap_threshold;
  DetectionReport report;
  std::map<std::string, std::vector<BBox>> by_image;
  for (const auto& d : dets) by_image[d.image].push_back(d.box);
  for (const auto& scene : truth) {
    std::vector<Rect> boxes;
    for (const auto& p : scene.plates) boxes.push_back(p.box);
    auto it = by_image.find(scene.image);
    static const std::vector<BBox> none;
    MatchResult mr = match_detections(it == by_image.end() ? none : it->second, boxes, crit);
    report.tp += mr.tp;
    report.fp += mr.fp;
    report.fn += mr.fn;
  }
  int det_count = report.tp + report.fp;
  report.precision = det_count ? static_cast<double>(report.tp) / det_count : 0.0;
  int truth_count = report.tp + report.fn;
  report.recall = truth_count ? static_cast<double>(report.tp) / truth_count : 0.0;
  return report;
}

RecognitionReport eval_readings(const std::vector<ReadingRecord>& readings,
                                const std::vector<SceneRecord>& truth,
                                double overlap_threshold) {
  OverlapCriterion crit;
  crit.threshold = overlap_threshold;
  std::map<std::string, std::vector<int>> by_image;
  for (std::size_t i = 0; i < readings.size(); ++i)
    by_image[readings[i].image].push_back(static_cast<int>(i));

  std::vector<std::string> all_read, all_truth, sub_read, sub_truth, clean_read,
      clean_truth;
  for (const auto& scene : truth) {
    std::vector<Rect> boxes;
    for (const auto& p : scene.plates) boxes.push_back(p.box);
    std::vector<BBox> det_boxes;
    std::vector<int> det_indices;
    if (auto it = by_image.find(scene.image); it != by_image.end())
      for (int i : it->second) {
        det_boxes.push_back(readings[i].box);
        det_indices.push_back(i);
      }
    MatchResult mr = match_detections(det_boxes, boxes, crit);
    std::vector<std::string> matched_text(boxes.size());
    for (std::size_t d = 0; d < det_boxes.size(); ++d)
      if (mr.matching[d] >= 0) matched_text[mr.matching[d]] = readings[det_indices[d]].text;
    for (std::size_t t = 0; t < scene.plates.size(); ++t) {
      all_read.push_back(matched_text[t]);
      all_truth.push_back(scene.plates[t].label);
      if (scene.plates[t].subtitle) {
        sub_read.push_back(matched_text[t]);
        sub_truth.push_back(scene.plates[t].label);
      } else {
        clean_read.push_back(matched_text[t]);
        clean_truth.push_back(scene.plates[t].label);
      }
    }
  }
  RecognitionReport report;
  report.overall = recognition_metrics(all_read, all_truth);
  report.subtitle = recognition_metrics(sub_read, sub_truth);
  report.clean = recognition_metrics(clean_read, clean_truth);
  return report;
}

namespace {

json metrics_json(const RecognitionMetrics& m) {
  return {{"plate_accuracy", m.plate_accuracy},
          {"char_accuracy", m.char_accuracy},
          {"plates_correct", m.plates_correct},
          {"plates_total", m.plates_total},
          {"chars_correct", m.chars_correct},
          {"chars_total", m.chars_total}};
}

}  // namespace

std::string report_to_json(const DetectionReport* det, const RecognitionReport* rec) {
  json j;
  if (det)
    j["detection"] = {{"precision", det->precision}, {"recall", det->recall},
                      {"tp", det->tp},               {"fp", det->fp},
                      {"fn", det->fn}};
  if (rec) {
    j["recognition"] = {{"overall", metrics_json(rec->overall)},
                        {"subtitle", metrics_json(rec->subtitle)},
                        {"clean", metrics_json(rec->clean)}};
  }
  return j.dump(2) + "\n";
}

std::string report_to_table(const DetectionReport* det, const RecognitionReport* rec) {
  std::ostringstream os;
  if (det) {
    os << "detection  precision " << det->precision << "  recall " << det->recall
       << "  (tp " << det->tp << " fp " << det->fp << " fn " << det->fn << ")\n";
  }
  if (rec) {
    auto row = [&](const char* name, const RecognitionMetrics& m) {
      os << name << "  plate_acc " << m.plate_accuracy << " (" << m.plates_correct << "/"
         << m.plates_total << ")  char_acc " << m.char_accuracy << " (" << m.chars_correct
         << "/" << m.chars_total << ")\n";
    };
    row("recognition/overall ", rec->overall);
    row("recognition/subtitle", rec->subtitle);
    row("recognition/clean   ", rec->clean);
  }
  return os.str();
}

}  // namespace lpdr
