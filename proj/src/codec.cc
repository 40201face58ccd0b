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

#include "nic/codec.h"

#include <cfloat>
#include <cmath>

#include "nic/distributions.h"
#include "nic/errors.h"
#include "nic/ops.h"

namespace nic {
namespace {

constexpr int kStride = 2;

template <typename T>
ConvLayerT<T> MakeLayer(const Shape& weight_shape, int out_channels) {
  return {TensorT<T>(weight_shape), TensorT<T>(Shape{out_channels})};
}

// Allocates every tensor with its final shape, filled with zeros.
ModelParams AllocateModel(const ArchConfig& arch) {
  arch.Validate();
  const int k = arch.kernel;
  ModelParams p;
  p.arch = arch;
  for (int i = 0; i < arch.encoder_layers; ++i) {
    const int in = i == 0 ? 3 : arch.base_width;
    const int out = arch.EncoderOutChannels(i);
    p.encoder.push_back(MakeLayer<float>({out, in, k, k}, out));
  }
  for (int i = 0; i < arch.decoder_layers; ++i) {
    const int in = arch.DecoderInChannels(i);
    const int out = arch.DecoderOutChannels(i);
    p.decoder.push_back(MakeLayer<float>({in, out, k, k}, out));
  }
  int prior_channels = arch.latent_channels;
  if (arch.has_hyper()) {
    for (int i = 0; i < arch.hyper_layers; ++i) {
      const int in = i == 0 ? arch.latent_channels : arch.hyper_channels;
      p.hyper_encoder.push_back(
          MakeLayer<float>({arch.hyper_channels, in, k, k}, arch.hyper_channels));
    }
    for (int i = 0; i < arch.hyper_layers; ++i) {
      const int out = i + 1 == arch.hyper_layers ? 2 * arch.latent_channels : arch.hyper_channels;
      p.hyper_decoder.push_back(MakeLayer<float>({arch.hyper_channels, out, k, k}, out));
    }
    prior_channels = arch.hyper_channels;
  }
  p.prior_loc = Tensor(Shape{prior_channels});
  p.prior_log_scale = Tensor(Shape{prior_channels});
  return p;
}

template <typename T>
void AppendLayers(std::vector<std::pair<std::string, TensorT<T>>>& out, const char* prefix,
                  const std::vector<ConvLayerT<T>>& layers) {
  for (size_t i = 0; i < layers.size(); ++i) {
    const std::string base = std::string(prefix) + "." + std::to_string(i);
    out.emplace_back(base + ".weight", layers[i].weight);
    out.emplace_back(base + ".bias", layers[i].bias);
  }
}

template <typename T>
TensorT<T> ConvStack(TensorT<T> x, const std::vector<ConvLayerT<T>>& layers, int kernel) {
  for (size_t i = 0; i < layers.size(); ++i) {
    x = Conv2d(x, layers[i].weight, layers[i].bias, kStride, kernel / 2);
    if (i + 1 < layers.size()) x = LeakyRelu(x, T(kLeakySlope));
  }
  return x;
}

template <typename T>
TensorT<T> TConvStack(TensorT<T> x, const std::vector<ConvLayerT<T>>& layers, int kernel) {
  for (size_t i = 0; i < layers.size(); ++i) {
    x = TransposedConv2d(x, layers[i].weight, layers[i].bias, kStride, kernel / 2, 1);
    if (i + 1 < layers.size()) x = LeakyRelu(x, T(kLeakySlope));
  }
  return x;
}

template <typename T>
std::vector<ConvLayerT<T>> CloneLayers(const std::vector<ConvLayerT<T>>& layers) {
  std::vector<ConvLayerT<T>> out;
  for (const auto& l : layers) out.push_back({l.weight.clone(), l.bias.clone()});
  return out;
}

template <typename U, typename T>
std::vector<ConvLayerT<U>> CastLayers(const std::vector<ConvLayerT<T>>& layers) {
  std::vector<ConvLayerT<U>> out;
  for (const auto& l : layers) {
    out.push_back({l.weight.template cast<U>(), l.bias.template cast<U>()});
  }
  return out;
}

double NegLog2(double p) { return -std::log2(std::max(p, DBL_MIN)); }

}  // namespace

void ArchConfig::Validate() const {
  auto in_range = [](int v, int lo, int hi) { return v >= lo && v <= hi; };
  if (!in_range(latent_channels, 1, 1024) || !in_range(base_width, 1, 1024) ||
      (has_hyper() && !in_range(hyper_channels, 1, 1024))) {
    throw InvalidArgument("ArchConfig: channel counts must be in [1, 1024]");
  }
  if (kernel < 1 || kernel % 2 == 0 || kernel > 15) {
    throw InvalidArgument("ArchConfig: kernel must be odd and at most 15");
  }
  if (!in_range(encoder_layers, 1, 6) || !in_range(decoder_layers, 1, 6)) {
    throw InvalidArgument("ArchConfig: encoder/decoder layer counts must be in [1, 6]");
  }
  if (has_hyper() && !in_range(hyper_layers, 1, 4)) {
    throw InvalidArgument("ArchConfig: hyper layer count must be in [1, 4]");
  }
  if (kind != ModelKind::kFactorized && kind != ModelKind::kHyperprior) {
    throw InvalidArgument("ArchConfig: unknown model kind");
  }
}

int ArchConfig::EncoderOutChannels(int layer) const {
  return layer + 1 == encoder_layers ? latent_channels : base_width;
}

int ArchConfig::DecoderInChannels(int layer) const {
  return layer == 0 ? latent_channels : base_width;
}

int ArchConfig::DecoderOutChannels(int layer) const {
  return layer + 1 == decoder_layers ? 3 : base_width;
}

int ArchConfig::NumDecoderBiases() const {
  int u = 0;
  for (int i = 0; i < decoder_layers; ++i) u += DecoderOutChannels(i);
  return u;
}

template <typename T>
std::vector<std::pair<std::string, TensorT<T>>> NamedTensors(const ModelParamsT<T>& params) {
  std::vector<std::pair<std::string, TensorT<T>>> out;
  AppendLayers(out, "g_a", params.encoder);
  AppendLayers(out, "g_s", params.decoder);
  AppendLayers(out, "h_a", params.hyper_encoder);
  AppendLayers(out, "h_s", params.hyper_decoder);
  out.emplace_back("prior.loc", params.prior_loc);
  out.emplace_back("prior.log_scale", params.prior_log_scale);
  return out;
}

std::vector<std::string> ManifestNames(const ArchConfig& arch) {
  std::vector<std::string> names;
  for (const auto& [name, t] : NamedTensors(AllocateModel(arch))) names.push_back(name);
  return names;
}

ModelParams InitModel(const ArchConfig& arch, uint64_t seed) {
  ModelParams p = AllocateModel(arch);
  NoiseSource rng(seed);
  const int k2 = arch.kernel * arch.kernel;
  auto fill = [&](Tensor& w, double fan_in) {
    const double bound = std::sqrt(6.0 / fan_in);
    for (float& v : w.mutable_data()) v = static_cast<float>((2.0 * rng.Uniform() - 1.0) * bound);
  };
  // A transposed conv with stride s sees about C * k^2 / s^2 inputs per output.
  for (auto& l : p.encoder) fill(l.weight, double(l.weight.dim(1)) * k2);
  for (auto& l : p.hyper_encoder) fill(l.weight, double(l.weight.dim(1)) * k2);
  for (auto& l : p.decoder) fill(l.weight, double(l.weight.dim(0)) * k2 / (kStride * kStride));
  for (auto& l : p.hyper_decoder) {
    fill(l.weight, double(l.weight.dim(0)) * k2 / (kStride * kStride));
  }
  return p;
}

ModelParams ZeroModel(const ArchConfig& arch) { return AllocateModel(arch); }

template <typename T>
ModelParamsT<T> CloneModel(const ModelParamsT<T>& params) {
  ModelParamsT<T> out;
  out.arch = params.arch;
  out.encoder = CloneLayers(params.encoder);
  out.decoder = CloneLayers(params.decoder);
  out.hyper_encoder = CloneLayers(params.hyper_encoder);
  out.hyper_decoder = CloneLayers(params.hyper_decoder);
  out.prior_loc = params.prior_loc.clone();
  out.prior_log_scale = params.prior_log_scale.clone();
  return out;
}

template <typename U, typename T>
ModelParamsT<U> CastModel(const ModelParamsT<T>& params) {
  ModelParamsT<U> out;
  out.arch = params.arch;
  out.encoder = CastLayers<U>(params.encoder);
  out.decoder = CastLayers<U>(params.decoder);
  out.hyper_encoder = CastLayers<U>(params.hyper_encoder);
  out.hyper_decoder = CastLayers<U>(params.hyper_decoder);
  out.prior_loc = params.prior_loc.template cast<U>();
  out.prior_log_scale = params.prior_log_scale.template cast<U>();
  return out;
}

template <typename T>
void SetRequiresGrad(ModelParamsT<T>& params, bool value) {
  for (auto& [name, t] : NamedTensors(params)) {
    TensorT<T> handle = t;
    handle.set_requires_grad(value);
  }
}

std::vector<float> DecoderBiasVector(const ModelParams& params) {
  std::vector<float> out;
  for (const auto& l : params.decoder) out.insert(out.end(), l.bias.data().begin(), l.bias.data().end());
  return out;
}

int64_t DecoderWeightCount(const ModelParams& params) {
  int64_t n = 0;
  for (const auto& l : params.decoder) n += l.weight.size();
  return n;
}

template <typename T>
AnalysisT<T> Analyze(const TensorT<T>& x, const ModelParamsT<T>& params) {
  const ArchConfig& arch = params.arch;
  if (x.rank() != 4 || x.dim(1) != 3) {
    throw ShapeError("Analyze: expected an N x 3 x H x W image, got " + ShapeString(x.shape()));
  }
  const int m = arch.PaddingMultiple();
  if (x.dim(2) % m != 0 || x.dim(3) % m != 0) {
    throw ShapeError("Analyze: image extents " + std::to_string(x.dim(2)) + "x" +
                     std::to_string(x.dim(3)) + " are not multiples of " + std::to_string(m) +
                     "; pad the image first");
  }
  AnalysisT<T> out;
  out.y = ConvStack(x, params.encoder, arch.kernel);
  if (arch.has_hyper()) out.z = HyperAnalyze(out.y, params);
  return out;
}

template <typename T>
TensorT<T> HyperAnalyze(const TensorT<T>& y, const ModelParamsT<T>& params) {
  if (!params.arch.has_hyper()) throw InvalidArgument("HyperAnalyze: factorized model");
  return ConvStack(y, params.hyper_encoder, params.arch.kernel);
}

template <typename T>
GaussianParamsT<T> HyperSynthesize(const TensorT<T>& z_hat, const ModelParamsT<T>& params) {
  if (!params.arch.has_hyper()) throw InvalidArgument("HyperSynthesize: factorized model");
  const int o = params.arch.latent_channels;
  const TensorT<T> h = TConvStack(z_hat, params.hyper_decoder, params.arch.kernel);
  GaussianParamsT<T> out;
  out.mean = ChannelSlice(h, 0, o);
  out.sigma = Clamp(Exp(ChannelSlice(h, o, 2 * o)), T(kSigmaFloor), T(kSigmaCap));
  return out;
}

template <typename T>
TensorT<T> DecoderForward(const TensorT<T>& input, const ModelParamsT<T>& params,
                          int first_layer, std::span<const TensorT<T>> bias_override,
                          int end_layer) {
  const int layers = params.arch.decoder_layers;
  const int end = end_layer < 0 ? layers : end_layer;
  if (first_layer < 0 || first_layer > end || end > layers) {
    throw InvalidArgument("DecoderForward: layer range out of bounds");
  }
  if (!bias_override.empty() && static_cast<int>(bias_override.size()) != layers) {
    throw InvalidArgument("DecoderForward: bias override needs one entry per layer");
  }
  const int pad = params.arch.kernel / 2;
  TensorT<T> x = input;
  for (int i = first_layer; i < end; ++i) {
    const ConvLayerT<T>& l = params.decoder[i];
    const TensorT<T>& bias =
        !bias_override.empty() && bias_override[i].defined() ? bias_override[i] : l.bias;
    x = TransposedConv2d(x, l.weight, bias, kStride, pad, 1);
    if (i + 1 < layers) x = LeakyRelu(x, T(kLeakySlope));
  }
  return x;
}

template <typename T>
TensorT<T> Synthesize(const TensorT<T>& y_hat, const ModelParamsT<T>& params,
                      std::span<const T> delta) {
  if (delta.empty()) return Clamp(DecoderForward(y_hat, params), T(0), T(1));
  const int u = params.arch.NumDecoderBiases();
  if (static_cast<int>(delta.size()) != u) {
    throw InvalidArgument("Synthesize: delta has " + std::to_string(delta.size()) +
                          " entries, expected " + std::to_string(u));
  }
  std::vector<TensorT<T>> biases;
  size_t offset = 0;
  for (const auto& l : params.decoder) {
    std::vector<T> b(l.bias.data().begin(), l.bias.data().end());
    for (T& v : b) v += delta[offset++];
    biases.emplace_back(l.bias.shape(), std::move(b));
  }
  return Clamp(DecoderForward<T>(y_hat, params, 0, biases), T(0), T(1));
}

Tensor QuantizeRound(const Tensor& v) {
  std::vector<float> out(v.data().begin(), v.data().end());
  for (float& x : out) {
    if (!std::isfinite(x)) throw InvalidArgument("QuantizeRound: non-finite value");
    x = std::round(x);
  }
  return Tensor(v.shape(), std::move(out));
}

template <typename T>
TensorT<T> QuantizeNoise(const TensorT<T>& v, NoiseSource& noise) {
  std::vector<T> u(static_cast<size_t>(v.size()));
  for (T& e : u) e = static_cast<T>(noise.CenteredUniform());
  return Add(v, TensorT<T>(v.shape(), std::move(u)));
}

std::vector<double> FactorizedPmf(const Tensor& values, const Tensor& loc,
                                  const Tensor& log_scale) {
  if (values.rank() < 2 || loc.rank() != 1 || loc.shape() != log_scale.shape() ||
      loc.dim(0) != values.dim(1)) {
    throw ShapeError("FactorizedPmf: values " + ShapeString(values.shape()) + " with prior " +
                     ShapeString(loc.shape()));
  }
  const int batch = values.dim(0), channels = values.dim(1);
  const int64_t plane = values.size() / (int64_t{batch} * channels);
  std::vector<double> out(static_cast<size_t>(values.size()));
  const auto v = values.data();
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < channels; ++c) {
      const int64_t base = (int64_t{b} * channels + c) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        out[base + i] = LogisticPmf(v[base + i], loc.data()[c], log_scale.data()[c]);
      }
    }
  }
  return out;
}

std::vector<double> ConditionalPmf(const Tensor& values, const Tensor& mean,
                                   const Tensor& sigma) {
  if (values.shape() != mean.shape() || values.shape() != sigma.shape()) {
    throw ShapeError("ConditionalPmf: shape mismatch");
  }
  std::vector<double> out(static_cast<size_t>(values.size()));
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = GaussianPmf(values.data()[i], mean.data()[i], sigma.data()[i]);
  }
  return out;
}

double RateEstimate(const Tensor& y_hat, const Tensor& z_hat, const ModelParams& params) {
  double bits = 0.0;
  if (!params.arch.has_hyper()) {
    for (double p : FactorizedPmf(y_hat, params.prior_loc, params.prior_log_scale)) bits += NegLog2(p);
    return bits;
  }
  const auto g = HyperSynthesize(z_hat, params);
  for (double p : ConditionalPmf(y_hat, g.mean, g.sigma)) bits += NegLog2(p);
  for (double p : FactorizedPmf(z_hat, params.prior_loc, params.prior_log_scale)) bits += NegLog2(p);
  return bits;
}

#define NIC_INSTANTIATE_CODEC(T)                                                           \
  template std::vector<std::pair<std::string, TensorT<T>>> NamedTensors(                   \
      const ModelParamsT<T>&);                                                             \
  template ModelParamsT<T> CloneModel(const ModelParamsT<T>&);                             \
  template void SetRequiresGrad(ModelParamsT<T>&, bool);                                   \
  template AnalysisT<T> Analyze(const TensorT<T>&, const ModelParamsT<T>&);                \
  template TensorT<T> HyperAnalyze(const TensorT<T>&, const ModelParamsT<T>&);             \
  template GaussianParamsT<T> HyperSynthesize(const TensorT<T>&, const ModelParamsT<T>&);  \
  template TensorT<T> DecoderForward(const TensorT<T>&, const ModelParamsT<T>&, int,       \
                                     std::span<const TensorT<T>>, int);                    \
  template TensorT<T> Synthesize(const TensorT<T>&, const ModelParamsT<T>&,                \
                                 std::span<const T>);                                      \
  template TensorT<T> QuantizeNoise(const TensorT<T>&, NoiseSource&);

NIC_INSTANTIATE_CODEC(float)
NIC_INSTANTIATE_CODEC(double)
template ModelParamsT<double> CastModel<double, float>(const ModelParamsT<float>&);
template ModelParamsT<float> CastModel<float, double>(const ModelParamsT<double>&);

#undef NIC_INSTANTIATE_CODEC

}  // namespace nic
