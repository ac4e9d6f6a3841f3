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
//
// End-to-end drivers shared by the command-line tool and the acceptance
// suite: dataset synthesis to disk, model training, detection, recognition
// and report generation, all JSON-lines in and out.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lpdr/detector.hpp"
#include "lpdr/eval.hpp"
#include "lpdr/run_config.hpp"
#include "lpdr/seg_recognizer.hpp"
#include "lpdr/seq_recognizer.hpp"

namespace lpdr {

DetectorConfig detector_config_from(const RunConfig& cfg);
SegRecConfig segrec_config_from(const RunConfig& cfg);
SeqRecConfig seqrec_config_from(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Dataset on disk: PGM images plus JSON-lines manifests.

void synth_dataset(const RunConfig& cfg, const std::string& out_dir,
                   std::ostream* log);

struct TruthPlate {
  Rect box;
  std::string label;
  bool subtitle = false;
};

struct SceneRecord {
  std::string image;  // path relative to the dataset root
  std::vector<TruthPlate> plates;
};

std::vector<SceneRecord> load_scene_manifest(const std::string& path);

struct PlateRecord {
  std::string file;
  std::string label;
  bool subtitle = false;
};

std::vector<PlateRecord> load_plate_manifest(const std::string& path);

struct CharRecord {
  std::string file;
  int label = 0;
};

std::vector<CharRecord> load_char_manifest(const std::string& path);
std::vector<std::string> load_file_manifest(const std::string& path);

// ---------------------------------------------------------------------------
// Training drivers. `target` is one of char37 | char36 | char36-lbp | plate2
// | blstm; models land in models_dir under "<target>.lpdr".

extern const char* const kTrainTargets[5];

void train_target(const std::string& target, const RunConfig& cfg,
                  const std::string& data_dir, const std::string& models_dir,
                  std::ostream* log);

// ---------------------------------------------------------------------------
// Detection / recognition drivers.

struct DetectionRecord {
  std::string image;
  BBox box;
};

std::vector<DetectionRecord> run_detect(const RunConfig& cfg,
                                        const std::string& models_dir,
                                        const std::vector<std::string>& images,
                                        const std::string& image_root, int jobs,
                                        const std::string& annotate_dir,
                                        std::ostream* log);

void write_detections(const std::string& path, const std::vector<DetectionRecord>& dets);
std::vector<DetectionRecord> load_detections(const std::string& path);

struct ReadingRecord {
  std::string image;
  BBox box;
  std::string text;
  std::vector<float> confidences;
  bool unreadable = false;
};

std::vector<ReadingRecord> run_recognize(const RunConfig& cfg,
                                         const std::string& models_dir,
                                         const std::string& mode,  // "seg" | "seq"
                                         const std::vector<DetectionRecord>& dets,
                                         const std::string& image_root, int jobs,
                                         std::ostream* log);

void write_readings(const std::string& path, const std::vector<ReadingRecord>& readings);
std::vector<ReadingRecord> load_readings(const std::string& path);

// ---------------------------------------------------------------------------
// Evaluation.

struct DetectionReport {
  int tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0;
};

DetectionReport eval_detections(const std::vector<DetectionRecord>& dets,
                                const std::vector<SceneRecord>& truth,
                                double overlap_threshold);

struct RecognitionReport {
  RecognitionMetrics overall;
  RecognitionMetrics subtitle;  // plates flagged subtitle in the truth
  RecognitionMetrics clean;
};

RecognitionReport eval_readings(const std::vector<ReadingRecord>& readings,
                                const std::vector<SceneRecord>& truth,
                                double overlap_threshold);

std::string report_to_json(const DetectionReport* det, const RecognitionReport* rec);
std::string report_to_table(const DetectionReport* det, const RecognitionReport* rec);

// burn a rectangle outline into the image (white inner, black outer ring)
void draw_box(GrayImage& img, const Rect& r);

}  // namespace lpdr
