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

#ifndef NIC_CODEC_H_
#define NIC_CODEC_H_

// The neural codec: analysis and synthesis transforms, hyper transforms,
// quantisers and the two entropy models.
//
// Layout of the default hyperprior model (kernel 5, leaky ReLU 0.01 between
// layers, stride 2 everywhere):
//   g_a : conv 3->64, conv 64->64, conv 64->48             x  -> y  (H/8)
//   h_a : conv 48->32, conv 32->32                         y  -> z  (H/32)
//   h_s : tconv 32->32, tconv 32->96 (mean | raw scale)    z^ -> mu, sigma
//   g_s : tconv 48->64, tconv 64->64, tconv 64->3          y^ -> x^
// The factorized kind drops h_a/h_s and codes y^ with the logistic prior.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nic/random.h"
#include "nic/tensor.h"

namespace nic {

inline constexpr float kLeakySlope = 0.01f;

enum class ModelKind : uint8_t { kFactorized = 0, kHyperprior = 1 };

struct ArchConfig {
  ModelKind kind = ModelKind::kHyperprior;
  int latent_channels = 48;  // o
  int hyper_channels = 32;   // f
  int base_width = 64;
  int kernel = 5;
  int encoder_layers = 3;
  int decoder_layers = 3;
  int hyper_layers = 2;

  // Throws InvalidArgument on an unusable configuration.
  void Validate() const;
  bool has_hyper() const { return kind == ModelKind::kHyperprior; }
  // Spatial reduction from x to y.
  int LatentFactor() const { return 1 << encoder_layers; }
  // Extents of x must be a multiple of this.
  int PaddingMultiple() const {
    return has_hyper() ? 1 << (encoder_layers + hyper_layers) : LatentFactor();
  }
  int EncoderOutChannels(int layer) const;
  int DecoderInChannels(int layer) const;
  int DecoderOutChannels(int layer) const;
  // u: total number of decoder biases.
  int NumDecoderBiases() const;

  bool operator==(const ArchConfig&) const = default;
};

template <typename T>
struct ConvLayerT {
  TensorT<T> weight;  // conv: [O, C, k, k]; tconv: [C, O, k, k]
  TensorT<T> bias;    // [O]
};

// phi = encoder, theta_g = decoder weights, beta_g = decoder biases,
// Phi_h = hyper_encoder, Theta = hyper_decoder, Psi = prior.
template <typename T>
struct ModelParamsT {
  ArchConfig arch;
  std::vector<ConvLayerT<T>> encoder;
  std::vector<ConvLayerT<T>> decoder;
  std::vector<ConvLayerT<T>> hyper_encoder;
  std::vector<ConvLayerT<T>> hyper_decoder;
  // Per-channel logistic prior over z (hyperprior) or y (factorized).
  TensorT<T> prior_loc;
  TensorT<T> prior_log_scale;
};

using ModelParams = ModelParamsT<float>;
using ModelParamsD = ModelParamsT<double>;

// Tensor handles in manifest order, e.g. "g_s.2.bias". The handles alias the
// model, so writing through them mutates it.
template <typename T>
std::vector<std::pair<std::string, TensorT<T>>> NamedTensors(const ModelParamsT<T>& params);
std::vector<std::string> ManifestNames(const ArchConfig& arch);

// He-uniform weights, zero biases, unit-scale prior.
ModelParams InitModel(const ArchConfig& arch, uint64_t seed);
// Every tensor zero (prior log-scale zero as well).
ModelParams ZeroModel(const ArchConfig& arch);
// Deep copy with fresh leaves; requires_grad flags are preserved.
template <typename T>
ModelParamsT<T> CloneModel(const ModelParamsT<T>& params);
template <typename U, typename T>
ModelParamsT<U> CastModel(const ModelParamsT<T>& params);
template <typename T>
void SetRequiresGrad(ModelParamsT<T>& params, bool value);
// Concatenated beta_g, layer order then channel order.
std::vector<float> DecoderBiasVector(const ModelParams& params);
// Number of decoder weight elements, size(theta_g).
int64_t DecoderWeightCount(const ModelParams& params);

template <typename T>
struct AnalysisT {
  TensorT<T> y;
  TensorT<T> z;  // undefined for the factorized kind
};

template <typename T>
struct GaussianParamsT {
  TensorT<T> mean;
  TensorT<T> sigma;
};

// g_a and, for the hyperprior kind, h_a. Throws ShapeError when H or W is
// not a multiple of arch.PaddingMultiple().
template <typename T>
AnalysisT<T> Analyze(const TensorT<T>& x, const ModelParamsT<T>& params);
template <typename T>
TensorT<T> HyperAnalyze(const TensorT<T>& y, const ModelParamsT<T>& params);
// h_s: sigma = clamp(exp(raw), kSigmaFloor, kSigmaCap).
template <typename T>
GaussianParamsT<T> HyperSynthesize(const TensorT<T>& z_hat, const ModelParamsT<T>& params);

// Decoder layers [first_layer, end_layer) applied to `input` (end_layer -1
// means all), without the final clamp. Every layer but the last decoder
// layer is followed by the activation. `bias_override`, when non-empty, holds
// one tensor per decoder layer; defined entries replace the stored bias.
template <typename T>
TensorT<T> DecoderForward(const TensorT<T>& input, const ModelParamsT<T>& params,
                          int first_layer = 0,
                          std::span<const TensorT<T>> bias_override = {},
                          int end_layer = -1);

// g_s with beta_g + delta (delta of length u, or empty), clamped to [0, 1].
template <typename T>
TensorT<T> Synthesize(const TensorT<T>& y_hat, const ModelParamsT<T>& params,
                      std::span<const T> delta = {});

// Round half away from zero; throws InvalidArgument on NaN or infinity.
Tensor QuantizeRound(const Tensor& v);
// v + u, u ~ U[-0.5, 0.5); gradient passes straight through.
template <typename T>
TensorT<T> QuantizeNoise(const TensorT<T>& v, NoiseSource& noise);

// Per-element logistic bin masses for integer `values` of shape [N, C, ...].
std::vector<double> FactorizedPmf(const Tensor& values, const Tensor& loc,
                                  const Tensor& log_scale);
// Per-element discretized Gaussian bin masses.
std::vector<double> ConditionalPmf(const Tensor& values, const Tensor& mean,
                                   const Tensor& sigma);

// -sum log2 pmf over y^ (and z^ for the hyperprior kind), in bits.
double RateEstimate(const Tensor& y_hat, const Tensor& z_hat, const ModelParams& params);

}  // namespace nic

#endif  // NIC_CODEC_H_
