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

#ifndef NIC_OVERFITTER_H_
#define NIC_OVERFITTER_H_

// Per-image fine-tuning of the biases of the last l decoder layers.
//
// Training relaxes the update quantiser with uniform noise,
//   b^~ = b q + u,   delta = b + u / q,
// charges b^~ with a Gaussian fitted to its own moments, and minimises
//   (|mb| + |sb| + rate(b^~) + C) / R(PSNR(x, g_s(y^; beta_g + delta)))
// over (b, log q). After every step the hard-rounded update is fitted with a
// truncated Gaussian, entropy coded, applied exactly as the decoder will,
// and scored with the same ratio; the best scoring snapshot is kept.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "nic/codec.h"
#include "nic/container.h"
#include "nic/errors.h"
#include "nic/image_io.h"
#include "nic/range_coder.h"
#include "nic/rd.h"
#include "nic/tensor.h"

namespace nic {

inline constexpr double kUpdateSigmaCap = 256.0;
// Bound on |mean - (s_min + s_max) / 2|; keeps the mean finite in binary16.
inline constexpr double kUpdateMeanRange = 16384.0;
inline constexpr int kUpdateSymbolMin = -128;
inline constexpr int kUpdateSymbolMax = 127;

struct OverfitConfig {
  int layers = 1;
  int iterations = 2500;
  double learning_rate = 1e-3;
  double q_init = 10.0;
  int side_bits = kExtraParamBits;
  int eval_every = 1;
  uint64_t seed = 0;
};

// Indices into the concatenated decoder biases covered by the last `l`
// layers, layer order then channel order.
std::vector<int> SelectBiasSubset(const ArchConfig& arch, int l);

template <typename T>
struct RelaxedUpdateT {
  TensorT<T> symbols;  // b q + u
  TensorT<T> delta;    // b + u / q
};

// `q` is a 0-d tensor; `noise` holds one draw per element of b.
template <typename T>
RelaxedUpdateT<T> QuantizeUpdatesTrain(const TensorT<T>& b, const TensorT<T>& q,
                                       std::span<const T> noise);

struct HardUpdate {
  std::vector<int32_t> symbols;  // round(b q), half away from zero
  std::vector<float> delta;      // symbols / q
};
HardUpdate QuantizeUpdatesTest(std::span<const float> b, double q);
// symbols / q, evaluated in binary64 and rounded once to binary32.
std::vector<float> UpdateDelta(std::span<const int32_t> symbols, double q);

// Bits of the relaxed symbols under N(mean, std) fitted to them; the
// standard deviation is clamped below at kUpdateSigmaFloor.
template <typename T>
TensorT<T> UpdateRateTrain(const TensorT<T>& relaxed);

struct TruncatedGaussianFit {
  double mean = 0.0;
  double sigma = kUpdateSigmaFloor;
  int32_t s_min = 0;
  int32_t s_max = 0;
  std::vector<double> pmf;  // over [s_min, s_max]
  double log_likelihood = 0.0;
};

// Maximum-likelihood (mean, sigma) of the Gaussian density restricted to the
// integers in [min, max] and renormalised, sigma in [floor, cap].
TruncatedGaussianFit FitTruncatedGaussian(std::span<const int32_t> symbols);
// Natural-log likelihood of `symbols` under that truncated model.
double TruncatedLogLikelihood(std::span<const int32_t> symbols, double mean, double sigma,
                              int32_t s_min, int32_t s_max);
// pmf over [s_min, s_max].
std::vector<double> TruncatedGaussianPmf(double mean, double sigma, int32_t s_min, int32_t s_max);

// binary16 code of sigma, rounded up if needed so the decoded value stays
// at or above kUpdateSigmaFloor.
uint16_t EncodeUpdateSigma(double sigma);

// Coding of an update with the parameters as they travel in the eb section.
ExtraSection EncodeUpdate(std::span<const int32_t> symbols, double q, double mean, double sigma);
// Returns the symbols of `extra` for `count` biases (throws ParseError).
std::vector<int32_t> DecodeUpdate(const ExtraSection& extra, size_t count);

// beta_g + symbols / q on the biases of the last l layers. Pure.
ModelParams ApplyUpdate(const ModelParams& params, std::span<const int32_t> symbols, double q,
                        int l);

// Everything the loss needs about one image.
template <typename T>
struct OverfitProblemT {
  const ModelParamsT<T>* params = nullptr;
  TensorT<T> target;  // [1, 3, H, W] original pixels in [0, 1]
  TensorT<T> prefix;  // decoder activation entering the first tuned layer
  int layers = 1;
  double latent_bits = 0.0;  // |mb| + |sb| in bits
  RdInterp rate_of_psnr;
  int side_bits = kExtraParamBits;
};

// Thrown by LossRatio when the PSNR reached falls where the linear R(PSNR)
// is not positive.
class RateDomainError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Differentiable train-time ratio in (b, q).
template <typename T>
TensorT<T> LossRatio(const OverfitProblemT<T>& problem, const TensorT<T>& b,
                     const TensorT<T>& q, std::span<const T> noise);
// PSNR (peak 1) of the top-left crop of x_hat against target, differentiable.
template <typename T>
TensorT<T> PsnrTensor(const TensorT<T>& target, const TensorT<T>& x_hat);

struct BiasUpdate {
  std::vector<float> b;
  double q = 0.0;  // binary16-decoded
  std::vector<int32_t> symbols;
  double mean = 0.0;   // binary16-decoded
  double sigma = 0.0;  // binary16-decoded
  int32_t s_min = 0;
  int32_t s_max = 0;
  ExtraSection extra;
};

struct TraceRow {
  int iteration = 0;
  double train_loss = 0.0;
  double acc = 0.0;
  double psnr = 0.0;  // 8-bit reconstruction, dB
  double update_bits = 0.0;
  double q = 0.0;
};

struct OverfitResult {
  BiasUpdate best;
  int best_iteration = 0;
  double best_acc = std::numeric_limits<double>::infinity();
  double best_psnr = 0.0;
  Image best_reconstruction;
  double initial_acc = 0.0;
  // Noise draws whose train-time R(PSNR) was not positive; no step taken.
  int skipped_steps = 0;
  std::vector<TraceRow> trace;
};

// The image arrives padded; `original` is the unpadded 8-bit image that
// PSNR is measured against. `y_hat` are the decoded main latents.
OverfitResult OverfitImage(const Image& original, const Tensor& y_hat, const ModelParams& params,
                           double latent_bits, const RdInterp& rate_of_psnr,
                           const OverfitConfig& config);

void WriteTraceCsv(const std::vector<TraceRow>& trace, const std::string& path);

}  // namespace nic

#endif  // NIC_OVERFITTER_H_
