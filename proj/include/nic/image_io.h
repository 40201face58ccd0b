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

#ifndef NIC_IMAGE_IO_H_
#define NIC_IMAGE_IO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "nic/tensor.h"

namespace nic {

// 8-bit RGB, interleaved, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;

  bool operator==(const Image&) const = default;
};

// Gray, palette, alpha and 16-bit inputs are converted to 8-bit RGB.
Image ReadPng(const std::string& path);
// Fixed zlib level and no timestamp chunk, so equal images give equal files.
void WritePng(const Image& image, const std::string& path);
std::vector<uint8_t> EncodePng(const Image& image);

// [1, 3, H, W] in [0, 1] (value / 255).
Tensor ImageToTensor(const Image& image);
// Top-left width x height window of x, scaled by 255, rounded half away
// from zero and clamped to [0, 255].
Image TensorToImage(const Tensor& x, int width, int height);

// Reflect-pads (mirror without repeating the edge) the bottom and right of
// an [N, C, H, W] tensor up to the next multiple of `multiple`.
Tensor ReflectPad(const Tensor& x, int multiple);

}  // namespace nic

#endif  // NIC_IMAGE_IO_H_
