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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "lpdr/model_io.hpp"
#include "lpdr/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lpdr;

namespace {

// exit codes: 0 success, 1 usage/config error, 2 runtime failure
constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

struct CommonOpts {
  std::string config_file;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
};

RunConfig make_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_file.empty()) cfg.load_file(opts.config_file);
  if (opts.seed_set) cfg.set("seed", std::to_string(opts.seed));
  if (opts.jobs > 0) cfg.set("jobs", std::to_string(opts.jobs));
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts* opts) {
  cmd->add_option("--config", opts->config_file, "key=value configuration file");
  cmd->add_option("--seed", opts->seed, "master random seed")
      ->each([opts](const std::string&) { opts->seed_set = true; });
  cmd->add_option("--jobs", opts->jobs, "worker threads for per-image stages");
}

const char* kind_label(LayerKind k) {
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

void inspect_model(const std::string& path) {
  ModelBundle bundle = load_model(path);
  if (bundle.net) {
    const Network& net = *bundle.net;
    Shape3 in = net.input_shape();
    std::cout << "network input " << in.c << "x" << in.h << "x" << in.w << "\n";
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      const LayerSpec& s = net.layers()[i];
      Shape3 out = net.shapes()[i + 1];
      std::cout << "  " << i << "  " << kind_label(s.kind);
      if (s.kind == LayerKind::Conv)
        std::cout << " f=" << s.out_channels << " k=" << s.kernel_h << "x" << s.kernel_w
                  << " s=" << s.stride << " p=" << s.pad;
      if (s.kind == LayerKind::MaxPool)
        std::cout << " p=" << s.kernel_h << "x" << s.kernel_w << " s=" << s.stride;
      if (s.kind == LayerKind::FullyConnected) std::cout << " n=" << s.out_channels;
      if (s.kind == LayerKind::Dropout) std::cout << " prob=" << s.drop_prob;
      std::cout << "  -> " << out.c << "x" << out.h << "x" << out.w;
      std::size_t params = net.params()[i].w.size() + net.params()[i].b.size();
      if (params) std::cout << "  (" << params << " params)";
      std::cout << "\n";
    }
  }
  if (bundle.blstm) {
    const BlstmParams& b = *bundle.blstm;
    std::cout << "blstm input " << b.input_dim << " hidden " << b.hidden << " classes "
              << b.classes << " (" << b.parameter_count() << " params)\n";
  }
  if (bundle.pca) {
    std::cout << "pca " << bundle.pca->in_dim() << " -> " << bundle.pca->out_dim()
              << " (rank " << bundle.pca->kept_rank << ")\n";
  }
  std::cout << "total parameters: " << bundle.parameter_count() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"License plate detection and recognition pipeline"};
  app.require_subcommand(1);

  CommonOpts synth_opts, train_opts, detect_opts, rec_opts, eval_opts;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_out;
  synth->add_option("--out", synth_out, "output dataset directory")->required();
  add_common(synth, &synth_opts);

  auto* train = app.add_subcommand("train", "train a model");
  std::string train_target_name, train_data, train_models;
  train->add_option("target", train_target_name,
                    "char37 | char36 | char36-lbp | plate2 | blstm")
      ->required();
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--models", train_models, "model output directory")->required();
  add_common(train, &train_opts);

  auto* det = app.add_subcommand("detect", "detect plates in images");
  std::vector<std::string> det_images;
  std::string det_models, det_out, det_root = ".", det_annotate;
  det->add_option("images", det_images, "input PGM images (relative to --root)")
      ->required();
  det->add_option("--models", det_models, "model directory")->required();
  det->add_option("--out", det_out, "detections JSON-lines output")->required();
  det->add_option("--root", det_root, "base directory for image paths");
  det->add_option("--annotate", det_annotate, "directory for annotated copies");
  add_common(det, &detect_opts);

  auto* rec = app.add_subcommand("recognize", "read detected plates");
  std::string rec_mode, rec_models, rec_dets, rec_out, rec_root = ".";
  rec->add_option("--mode", rec_mode, "seg | seq")->required();
  rec->add_option("--models", rec_models, "model directory")->required();
  rec->add_option("--detections", rec_dets, "detections JSON-lines input")->required();
  rec->add_option("--out", rec_out, "readings JSON-lines output")->required();
  rec->add_option("--root", rec_root, "base directory for image paths");
  add_common(rec, &rec_opts);

  auto* ev = app.add_subcommand("eval", "score detections/readings against truth");
  std::string ev_kind, ev_pred, ev_truth, ev_out;
  ev->add_option("--kind", ev_kind, "detect | recognize")->required();
  ev->add_option("--pred", ev_pred, "predictions JSON-lines")->required();
  ev->add_option("--truth", ev_truth, "scene truth manifest")->required();
  ev->add_option("--out", ev_out, "JSON report output (table prints to stdout)");
  add_common(ev, &eval_opts);

  auto* inspect = app.add_subcommand("inspect-model", "print layer table and size");
  std::string inspect_path;
  inspect->add_option("model", inspect_path, "model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (synth->parsed()) {
      RunConfig cfg = make_config(synth_opts);
      synth_dataset(cfg, synth_out, &std::cout);
    } else if (train->parsed()) {
      RunConfig cfg = make_config(train_opts);
      train_target(train_target_name, cfg, train_data, train_models, &std::cout);
    } else if (det->parsed()) {
      RunConfig cfg = make_config(detect_opts);
      if (!det_annotate.empty()) fs::create_directories(det_annotate);
      auto records = run_detect(cfg, det_models, det_images, det_root,
                                cfg.get_int("jobs"), det_annotate, &std::cout);
      write_detections(det_out, records);
    } else if (rec->parsed()) {
      RunConfig cfg = make_config(rec_opts);
      auto dets = load_detections(rec_dets);
      auto readings = run_recognize(cfg, rec_models, rec_mode, dets, rec_root,
                                    cfg.get_int("jobs"), &std::cout);
      write_readings(rec_out, readings);
    } else if (ev->parsed()) {
      RunConfig cfg = make_config(eval_opts);
      auto truth = load_scene_manifest(ev_truth);
      double threshold = cfg.get_double("eval.overlap_threshold");
      std::string json_text;
      if (ev_kind == "detect") {
        auto dets = load_detections(ev_pred);
        DetectionReport report = eval_detections(dets, truth, threshold);
        json_text = report_to_json(&report, nullptr);
        std::cout << report_to_table(&report, nullptr);
      } else if (ev_kind == "recognize") {
        auto readings = load_readings(ev_pred);
        RecognitionReport report = eval_readings(readings, truth, threshold);
        json_text = report_to_json(nullptr, &report);
        std::cout << report_to_table(nullptr, &report);
      } else {
        std::cerr << "eval: --kind must be detect or recognize\n";
        return kUsageError;
      }
      if (!ev_out.empty()) {
        std::ofstream os(ev_out);
        if (!os) throw std::runtime_error("cannot write " + ev_out);
        os << json_text;
      }
    } else if (inspect->parsed()) {
      inspect_model(inspect_path);
    }
  } catch (const std::invalid_argument& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kUsageError;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}
