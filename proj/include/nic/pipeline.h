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

#ifndef NIC_PIPELINE_H_
#define NIC_PIPELINE_H_

// Image-level encode and decode: baseline containers and containers carrying
// an overfitted bias update.

#include <cstdint>
#include <span>
#include <vector>

#include "nic/codec.h"
#include "nic/container.h"
#include "nic/image_io.h"
#include "nic/overfitter.h"
#include "nic/rd.h"

namespace nic {

struct LatentCode {
  Tensor y_hat;
  Tensor z_hat;  // undefined for the factorized kind
  std::vector<uint8_t> mb;
  std::vector<uint8_t> sb;
  // Table code lengths of the coded symbols, excluding section framing.
  double ideal_bits = 0.0;
  double mb_ideal_bits = 0.0;
  double sb_ideal_bits = 0.0;

  // |mb| + |sb| in bits: the section payloads.
  double PayloadBits() const { return 8.0 * static_cast<double>(mb.size() + sb.size()); }
};

// x must already be padded to arch.PaddingMultiple().
LatentCode CompressLatents(const Tensor& x_padded, const ModelParams& params);
LatentCode DecompressLatents(std::span<const uint8_t> mb, std::span<const uint8_t> sb,
                             const ModelParams& params, int padded_height, int padded_width);

// Synthesis, crop to width x height and 8-bit rounding.
Image Reconstruct(const Tensor& y_hat, const ModelParams& params, int width, int height);

struct BaselineEncoding {
  LatentCode latents;
  Container container;
  std::vector<uint8_t> bytes;
  Image reconstruction;
  double psnr = 0.0;  // of the 8-bit reconstruction
};

// Throws InvalidArgument for images larger than 65535 pixels on a side.
BaselineEncoding EncodeBaseline(const Image& image, const ModelParams& params, uint8_t quality);

struct OverfitEncoding {
  BaselineEncoding baseline;
  OverfitResult result;
  Container container;
  std::vector<uint8_t> bytes;
  // True when --allow-skip dropped an update that did not help.
  bool skipped = false;
};

// Overfits the decoder biases against `rate_of_psnr` and writes the best
// snapshot into eb.
OverfitEncoding EncodeOverfit(const Image& image, const ModelParams& params, uint8_t quality,
                              const RdInterp& rate_of_psnr, const OverfitConfig& config,
                              bool allow_skip = false);

// Decodes a parsed container with the model of its quality index.
Image DecodeContainer(const Container& container, const ModelParams& params);

}  // namespace nic

#endif  // NIC_PIPELINE_H_
