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

#ifndef NIC_TRAINER_H_
#define NIC_TRAINER_H_

// Rate-distortion training of the baseline models and of the zoo.
//
// Loss per step: bits / pixels + lambda * 255^2 * MSE, with uniform noise in
// place of rounding for y and z.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nic/codec.h"
#include "nic/image_io.h"
#include "nic/random.h"
#include "nic/zoo.h"

namespace nic {

inline constexpr double kDistortionScale = 255.0 * 255.0;

struct TrainConfig {
  double lambda = 0.016;
  int steps = 20000;
  int batch = 8;
  int crop = 64;
  double learning_rate = 1e-4;
  uint64_t seed = 0;
  std::string data_dir;
  ArchConfig arch;
  // Warm start from this checkpoint when non-empty.
  std::string init_checkpoint;

  void Validate() const;
};

struct StepResult {
  double loss = 0.0;
  double rate_bits = 0.0;  // total over the batch
  double mse = 0.0;        // pixel scale [0, 1]
  double bpp = 0.0;
};

// Forward and backward pass for one batch; gradients accumulate into every
// parameter of `params` that requires grad. Throws NumericError with the
// term values when the loss is not finite.
StepResult TrainStep(const Tensor& batch, const ModelParams& params, double lambda,
                     NoiseSource& noise);

// Every *.png under `dir`, sorted by file name.
std::vector<Image> LoadDataset(const std::string& dir);
std::vector<std::string> ListPngs(const std::string& dir);
// Random crops with random horizontal flips, [batch, 3, crop, crop].
Tensor SampleBatch(const std::vector<Image>& images, int batch, int crop, NoiseSource& noise);

using StepLogger = std::function<void(int step, const StepResult&)>;

struct TrainResult {
  ModelParams params;
  std::vector<double> losses;
};

TrainResult TrainModel(const TrainConfig& config, const std::vector<Image>& data,
                       const StepLogger& log = nullptr);

struct Anchor {
  double rate_bits = 0.0;  // mean container length in bits
  double psnr_db = 0.0;    // mean 8-bit PSNR
};
// Real encodes of every validation image.
Anchor MeasureAnchor(const ModelParams& params, const std::vector<Image>& validation);

// One checkpoint per config (quality = position), manifest written to
// out_dir/zoo.json. A diverged run is recorded as failed.
ZooManifest TrainZoo(const std::vector<TrainConfig>& configs, const std::vector<Image>& data,
                     const std::vector<Image>& validation, const std::string& out_dir,
                     const StepLogger& log = nullptr);

// Pretrains `base` and saves it as out_dir/base.nicm, then fine-tunes one
// copy per lambda (finetune_steps at finetune_lr) and calls TrainZoo.
ZooManifest TrainZooWarmStart(const TrainConfig& base, const std::vector<double>& lambdas,
                              int finetune_steps, double finetune_lr,
                              const std::vector<Image>& data, const std::vector<Image>& validation,
                              const std::string& out_dir, const StepLogger& log = nullptr);

}  // namespace nic

#endif  // NIC_TRAINER_H_
