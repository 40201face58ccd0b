// Copyright 2026 The NIC Authors. All Rights Reserved.
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


#ifndef NIC_EVALUATION_H_
#define NIC_EVALUATION_H_

// Per-image overfitting evaluation against the baseline codec, with
// aggregates per (quality, l) and per l.
//
// Two accountings are reported. "Payload" bits are |mb| + |sb| + |eb coded
// bytes| + the 64 parameter bits, compared with the per-image R(PSNR) built
// from the payload bits of the two anchor encodes; this is the quantity the
// overfitter minimizes (bit_saving = 1 - acc). "Container" bits are whole
// files, compared with R(PSNR) built from the anchor container sizes.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nic/codec.h"
#include "nic/image_io.h"
#include "nic/overfitter.h"
#include "nic/zoo.h"

namespace nic {

struct EvalRow {
  std::string image;
  int quality = 0;
  int neighbor = 0;
  int layers = 0;
  uint64_t seed = 0;
  int width = 0;
  int height = 0;
  double baseline_bits = 0.0;          // container
  double baseline_payload_bits = 0.0;  // |mb| + |sb|
  double baseline_psnr = 0.0;
  double overfit_bits = 0.0;           // container
  double overfit_payload_bits = 0.0;   // |mb| + |sb| + update + side bits
  double overfit_psnr = 0.0;
  double update_bits = 0.0;
  double rate_at_psnr = 0.0;           // payload R(overfit PSNR)
  double bit_saving = 0.0;             // 1 - overfit_payload_bits / rate_at_psnr
  double bit_saving_container = 0.0;
  double initial_acc = 0.0;
  double best_acc = 0.0;
  int best_iteration = 0;
};

// Overfits `image` with the model of `quality`; the second anchor of
// R(PSNR) is chosen from `candidates` by SelectImageAnchors.
EvalRow EvaluateImage(const std::string& name, const Image& image, const ModelParams& params,
                      int quality, std::span<const ModelRef> candidates,
                      const OverfitConfig& config);

struct QualitySummary {
  int quality = 0;
  int layers = 0;
  int rows = 0;
  double mean_bit_saving = 0.0;
  double median_seed_bit_saving = 0.0;  // median over seeds of the per-seed mean
  double mean_bit_saving_container = 0.0;
  double mean_baseline_bits = 0.0;
  double mean_overfit_bits = 0.0;
  double mean_baseline_psnr = 0.0;
  double mean_overfit_psnr = 0.0;
  int improved = 0;  // rows with best_acc < initial_acc
  int best_layers = 0;  // argmax over l of mean_bit_saving for this quality
};

struct LayerSummary {
  int layers = 0;
  int rows = 0;
  double mean_bit_saving = 0.0;
  double median_seed_bit_saving = 0.0;
  double mean_bit_saving_container = 0.0;
  // Container-bit BD-rate of the overfit curve against the baseline curve
  // over qualities; NaN with fewer than 4 qualities.
  double bd_rate = 0.0;
  int improved = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<QualitySummary> qualities;
  std::vector<LayerSummary> layers;
  int best_layers = 0;      // argmax over l of median_seed_bit_saving
  std::string sweep_shape;  // rise-then-fall, increasing, decreasing, flat or irregular
};

EvalReport Summarize(std::vector<EvalRow> rows);

// Writes `path` (rows), and alongside it <stem>_summary.csv and
// <stem>_layers.csv.
void WriteEvalReport(const EvalReport& report, const std::string& path);

double Median(std::vector<double> values);

}  // namespace nic

#endif  // NIC_EVALUATION_H_
