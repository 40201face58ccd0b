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

#include "nic/pipeline.h"

#include "nic/errors.h"
#include "nic/float16.h"
#include "nic/latent_coding.h"
#include "nic/ops.h"

namespace nic {
namespace {

Shape LatentShape(const ArchConfig& arch, int padded_height, int padded_width) {
  const int f = arch.LatentFactor();
  return {1, arch.latent_channels, padded_height / f, padded_width / f};
}

Shape HyperShape(const ArchConfig& arch, int padded_height, int padded_width) {
  const int f = arch.PaddingMultiple();
  return {1, arch.hyper_channels, padded_height / f, padded_width / f};
}

int PaddedExtent(int extent, int multiple) { return (extent + multiple - 1) / multiple * multiple; }

}  // namespace

LatentCode CompressLatents(const Tensor& x_padded, const ModelParams& params) {
  const AnalysisT<float> a = Analyze(x_padded, params);
  LatentCode out;
  out.y_hat = QuantizeRound(a.y);
  if (params.arch.has_hyper()) {
    out.z_hat = QuantizeRound(a.z);
    CodedSection sb = EncodeSection(
        out.z_hat, FactorizedElementPmf(out.z_hat.shape(), params.prior_loc, params.prior_log_scale));
    const auto g = HyperSynthesize(out.z_hat, params);
    CodedSection mb = EncodeSection(out.y_hat, GaussianElementPmf(g.mean, g.sigma));
    out.sb = std::move(sb.bytes);
    out.mb = std::move(mb.bytes);
    out.mb_ideal_bits = mb.ideal_bits;
    out.sb_ideal_bits = sb.ideal_bits;
    out.ideal_bits = sb.ideal_bits + mb.ideal_bits;
  } else {
    CodedSection mb = EncodeSection(
        out.y_hat, FactorizedElementPmf(out.y_hat.shape(), params.prior_loc, params.prior_log_scale));
    out.mb = std::move(mb.bytes);
    out.mb_ideal_bits = mb.ideal_bits;
    out.ideal_bits = mb.ideal_bits;
  }
  return out;
}

LatentCode DecompressLatents(std::span<const uint8_t> mb, std::span<const uint8_t> sb,
                             const ModelParams& params, int padded_height, int padded_width) {
  const ArchConfig& arch = params.arch;
  LatentCode out;
  out.mb.assign(mb.begin(), mb.end());
  out.sb.assign(sb.begin(), sb.end());
  const Shape y_shape = LatentShape(arch, padded_height, padded_width);
  if (arch.has_hyper()) {
    const Shape z_shape = HyperShape(arch, padded_height, padded_width);
    out.z_hat = DecodeSection(sb, z_shape,
                              FactorizedElementPmf(z_shape, params.prior_loc, params.prior_log_scale));
    const auto g = HyperSynthesize(out.z_hat, params);
    out.y_hat = DecodeSection(mb, y_shape, GaussianElementPmf(g.mean, g.sigma));
  } else {
    out.y_hat = DecodeSection(mb, y_shape,
                              FactorizedElementPmf(y_shape, params.prior_loc, params.prior_log_scale));
  }
  return out;
}

Image Reconstruct(const Tensor& y_hat, const ModelParams& params, int width, int height) {
  return TensorToImage(Synthesize(y_hat, params), width, height);
}

BaselineEncoding EncodeBaseline(const Image& image, const ModelParams& params, uint8_t quality) {
  if (image.width < 1 || image.height < 1 || image.width > 65535 || image.height > 65535) {
    throw InvalidArgument("EncodeBaseline: image extents must be in [1, 65535]");
  }
  const Tensor x = ReflectPad(ImageToTensor(image), params.arch.PaddingMultiple());
  BaselineEncoding out;
  out.latents = CompressLatents(x, params);
  Container& c = out.container;
  c.header.has_sb = params.arch.has_hyper();
  c.header.quality = quality;
  c.header.width = static_cast<uint16_t>(image.width);
  c.header.height = static_cast<uint16_t>(image.height);
  c.sb = out.latents.sb;
  c.mb = out.latents.mb;
  out.bytes = WriteContainer(c);
  out.reconstruction = Reconstruct(out.latents.y_hat, params, image.width, image.height);
  out.psnr = Psnr(image.rgb, out.reconstruction.rgb);
  return out;
}

OverfitEncoding EncodeOverfit(const Image& image, const ModelParams& params, uint8_t quality,
                              const RdInterp& rate_of_psnr, const OverfitConfig& config,
                              bool allow_skip) {
  OverfitEncoding out;
  out.baseline = EncodeBaseline(image, params, quality);
  const LatentCode& latents = out.baseline.latents;
  out.result = OverfitImage(image, latents.y_hat, params, latents.PayloadBits(), rate_of_psnr,
                            config);
  const double no_update_ratio =
      latents.PayloadBits() / rate_of_psnr.Rate(out.baseline.psnr);
  out.container = out.baseline.container;
  if (allow_skip && out.result.best_acc >= no_update_ratio) {
    out.skipped = true;
  } else {
    out.container.header.has_eb = true;
    out.container.header.layers = static_cast<uint8_t>(config.layers);
    out.container.extra = out.result.best.extra;
  }
  out.bytes = WriteContainer(out.container);
  return out;
}

Image DecodeContainer(const Container& c, const ModelParams& params) {
  const ArchConfig& arch = params.arch;
  if (c.header.has_sb != arch.has_hyper()) {
    throw ParseError(ParseErrorCode::kFlagMismatch,
                     "container: has_sb does not match the model kind of this quality");
  }
  const int m = arch.PaddingMultiple();
  const int ph = PaddedExtent(c.header.height, m), pw = PaddedExtent(c.header.width, m);
  const LatentCode latents = DecompressLatents(c.mb, c.sb, params, ph, pw);
  if (!c.extra) return Reconstruct(latents.y_hat, params, c.header.width, c.header.height);

  const int l = c.header.layers;
  if (l < 1 || l > arch.decoder_layers) {
    throw ParseError(ParseErrorCode::kBadField,
                     "container: layer count " + std::to_string(l) + " exceeds the decoder depth");
  }
  const size_t count = SelectBiasSubset(arch, l).size();
  const auto symbols = DecodeUpdate(*c.extra, count);
  const ModelParams updated = ApplyUpdate(params, symbols, DecodeF16(c.extra->q), l);
  return Reconstruct(latents.y_hat, updated, c.header.width, c.header.height);
}

}  // namespace nic
