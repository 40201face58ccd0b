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

#ifndef NIC_LATENT_CODING_H_
#define NIC_LATENT_CODING_H_

// Entropy coding of quantised latents. A section payload is
//   i16 LE min symbol, i16 LE max symbol, range-coded symbols
// where every element is coded with its model pmf restricted to
// [min, max] and quantised by BuildCdfTable.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nic/range_coder.h"
#include "nic/tensor.h"

namespace nic {

struct CodedSection {
  std::vector<uint8_t> bytes;
  // Sum of table code lengths of the coded symbols (excludes the 4-byte range).
  double ideal_bits = 0.0;
};

// pmf(element index, symbol).
using ElementPmf = std::function<double(size_t, int32_t)>;

// Tables for `count` elements over [min_symbol, max_symbol]. A pmf that
// vanishes on the whole range falls back to uniform.
std::vector<CdfTable> BuildSectionTables(size_t count, int32_t min_symbol, int32_t max_symbol,
                                         const ElementPmf& pmf);

// `symbols` must hold integers representable as int16.
CodedSection EncodeSection(const Tensor& symbols, const ElementPmf& pmf);
Tensor DecodeSection(std::span<const uint8_t> bytes, const Shape& shape, const ElementPmf& pmf);

// Per-channel logistic prior over [N, C, ...] tensors.
ElementPmf FactorizedElementPmf(const Shape& shape, const Tensor& loc, const Tensor& log_scale);
// Per-element Gaussian with the given mean and sigma tensors.
ElementPmf GaussianElementPmf(const Tensor& mean, const Tensor& sigma);

}  // namespace nic

#endif  // NIC_LATENT_CODING_H_
