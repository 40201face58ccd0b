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

#include "nic/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "nic/adam.h"
#include "nic/checkpoint.h"
#include "nic/errors.h"
#include "nic/ops.h"
#include "nic/pipeline.h"

namespace nic {
namespace {

constexpr float kLikelihoodFloor = 1e-9f;
constexpr double kLn2 = 0.69314718055994530942;

Tensor Bits(const Tensor& likelihood) {
  return Scale(Sum(Log(Clamp(likelihood, kLikelihoodFloor, 1.0f))), static_cast<float>(-1.0 / kLn2));
}

std::vector<Tensor> Parameters(const ModelParams& params) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : NamedTensors(params)) out.push_back(t);
  return out;
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("TrainConfig: lambda must be >= 0");
  if (steps < 0 || batch < 1) throw InvalidArgument("TrainConfig: steps >= 0 and batch >= 1 required");
  if (crop < 1 || crop % arch.PaddingMultiple() != 0) {
    throw InvalidArgument("TrainConfig: crop must be a positive multiple of " +
                          std::to_string(arch.PaddingMultiple()));
  }
  if (!(learning_rate > 0.0)) throw InvalidArgument("TrainConfig: learning rate must be positive");
  arch.Validate();
}

StepResult TrainStep(const Tensor& batch, const ModelParams& params, double lambda,
                     NoiseSource& noise) {
  const AnalysisT<float> a = Analyze(batch, params);
  const Tensor y_tilde = QuantizeNoise(a.y, noise);
  Tensor bits;
  if (params.arch.has_hyper()) {
    const Tensor z_tilde = QuantizeNoise(a.z, noise);
    const auto g = HyperSynthesize(z_tilde, params);
    bits = Add(Bits(GaussianLikelihood(y_tilde, g.mean, g.sigma)),
               Bits(LogisticLikelihood(z_tilde, params.prior_loc, params.prior_log_scale)));
  } else {
    bits = Bits(LogisticLikelihood(y_tilde, params.prior_loc, params.prior_log_scale));
  }
  const Tensor x_hat = DecoderForward(y_tilde, params);
  const Tensor mse = Mean(Square(Sub(x_hat, batch)));
  const double pixels = static_cast<double>(batch.dim(0)) * batch.dim(2) * batch.dim(3);
  const Tensor loss = Add(Scale(bits, static_cast<float>(1.0 / pixels)),
                          Scale(mse, static_cast<float>(lambda * kDistortionScale)));
  StepResult r;
  r.loss = loss.item();
  r.rate_bits = bits.item();
  r.mse = mse.item();
  r.bpp = r.rate_bits / pixels;
  if (!std::isfinite(r.loss)) {
    throw NumericError("TrainStep: non-finite loss (rate bits " + std::to_string(r.rate_bits) +
                       ", mse " + std::to_string(r.mse) + ")");
  }
  loss.backward();
  return r;
}

std::vector<std::string> ListPngs(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");
  std::vector<std::string> paths;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

std::vector<Image> LoadDataset(const std::string& dir) {
  std::vector<Image> images;
  for (const auto& p : ListPngs(dir)) images.push_back(ReadPng(p));
  if (images.empty()) throw IoError(dir + " contains no PNG images");
  return images;
}

Tensor SampleBatch(const std::vector<Image>& images, int batch, int crop, NoiseSource& noise) {
  if (images.empty()) throw InvalidArgument("SampleBatch: empty dataset");
  std::vector<float> out(size_t{1} * batch * 3 * crop * crop);
  for (int n = 0; n < batch; ++n) {
    const Image& img = images[noise.Below(images.size())];
    if (img.width < crop || img.height < crop) {
      throw InvalidArgument("SampleBatch: image smaller than the crop size");
    }
    const int ox = static_cast<int>(noise.Below(img.width - crop + 1));
    const int oy = static_cast<int>(noise.Below(img.height - crop + 1));
    const bool flip = noise.Below(2) == 1;
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < crop; ++y) {
        for (int x = 0; x < crop; ++x) {
          const int sx = ox + (flip ? crop - 1 - x : x);
          const uint8_t v = img.rgb[(size_t{1} * (oy + y) * img.width + sx) * 3 + c];
          out[((size_t{1} * n * 3 + c) * crop + y) * crop + x] = v / 255.0f;
        }
      }
    }
  }
  return Tensor({batch, 3, crop, crop}, std::move(out));
}

TrainResult TrainModel(const TrainConfig& config, const std::vector<Image>& data,
                       const StepLogger& log) {
  config.Validate();
  TrainResult result;
  result.params = config.init_checkpoint.empty() ? InitModel(config.arch, config.seed)
                                                 : LoadModel(config.init_checkpoint);
  if (!(result.params.arch == config.arch)) {
    throw InvalidArgument("TrainModel: warm-start checkpoint has a different architecture");
  }
  SetRequiresGrad(result.params, true);
  AdamOptions opts;
  opts.learning_rate = config.learning_rate;
  Adam<float> adam(Parameters(result.params), opts);
  // Separate streams keep the batch order independent of the noise draws.
  NoiseSource sampler(config.seed * 2 + 1), noise(config.seed * 2 + 2);
  for (int step = 0; step < config.steps; ++step) {
    const Tensor batch = SampleBatch(data, config.batch, config.crop, sampler);
    adam.ZeroGrad();
    StepResult r;
    try {
      r = TrainStep(batch, result.params, config.lambda, noise);
    } catch (const NumericError& e) {
      throw NumericError("step " + std::to_string(step) + ": " + e.what());
    }
    adam.Step();
    result.losses.push_back(r.loss);
    if (log) log(step, r);
  }
  SetRequiresGrad(result.params, false);
  for (auto& [name, t] : NamedTensors(result.params)) {
    Tensor handle = t;
    handle.zero_grad();
  }
  return result;
}

Anchor MeasureAnchor(const ModelParams& params, const std::vector<Image>& validation) {
  if (validation.empty()) throw InvalidArgument("MeasureAnchor: empty validation set");
  Anchor a;
  for (const Image& img : validation) {
    const BaselineEncoding e = EncodeBaseline(img, params, 0);
    a.rate_bits += 8.0 * static_cast<double>(e.bytes.size());
    a.psnr_db += e.psnr;
  }
  a.rate_bits /= static_cast<double>(validation.size());
  a.psnr_db /= static_cast<double>(validation.size());
  return a;
}

ZooManifest TrainZoo(const std::vector<TrainConfig>& configs, const std::vector<Image>& data,
                     const std::vector<Image>& validation, const std::string& out_dir,
                     const StepLogger& log) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  ZooManifest manifest;
  for (size_t q = 0; q < configs.size(); ++q) {
    ZooEntry e;
    e.quality = static_cast<int>(q);
    e.lambda = configs[q].lambda;
    e.checkpoint = "q" + std::to_string(q) + ".nicm";
    try {
      const TrainResult r = TrainModel(configs[q], data, log);
      SaveModel(r.params, (fs::path(out_dir) / e.checkpoint).string());
      const Anchor a = MeasureAnchor(r.params, validation);
      e.val_rate_bits = a.rate_bits;
      e.val_psnr_db = a.psnr_db;
    } catch (const NumericError& err) {
      e.failed = true;
      e.error = err.what();
    }
    manifest.entries.push_back(e);
  }
  std::stable_sort(manifest.entries.begin(), manifest.entries.end(),
                   [](const ZooEntry& a, const ZooEntry& b) { return a.lambda < b.lambda; });
  WriteManifest(manifest, (fs::path(out_dir) / kZooManifestName).string());
  return manifest;
}

ZooManifest TrainZooWarmStart(const TrainConfig& base, const std::vector<double>& lambdas,
                              int finetune_steps, double finetune_lr,
                              const std::vector<Image>& data, const std::vector<Image>& validation,
                              const std::string& out_dir, const StepLogger& log) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string base_path = (fs::path(out_dir) / "base.nicm").string();
  SaveModel(TrainModel(base, data, log).params, base_path);
  std::vector<TrainConfig> configs;
  for (size_t q = 0; q < lambdas.size(); ++q) {
    TrainConfig c = base;
    c.lambda = lambdas[q];
    c.steps = finetune_steps;
    c.learning_rate = finetune_lr;
    c.seed = base.seed + 1 + q;
    c.init_checkpoint = base_path;
    configs.push_back(c);
  }
  return TrainZoo(configs, data, validation, out_dir, log);
}

}  // namespace nic
