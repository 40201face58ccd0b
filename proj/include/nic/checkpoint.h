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

#ifndef NIC_CHECKPOINT_H_
#define NIC_CHECKPOINT_H_

// Checkpoint file:
//   "NICM" | u8 version | ArchConfig (u8 kind, u16 o, u16 f, u16 width,
//   u8 kernel, u8 enc, u8 dec, u8 hyper) | u32 count | count x (u16 len, name)
//   | count x (u16 len, name, u8 rank, rank x u32 extent, f32 payload)
// Tensor records appear in manifest order; every multi-byte field is LE.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nic/codec.h"

namespace nic {

inline constexpr uint8_t kCheckpointVersion = 1;

std::vector<uint8_t> SerializeModel(const ModelParams& params);
// Throws ParseError on malformed input.
ModelParams DeserializeModel(std::span<const uint8_t> bytes);

void SaveModel(const ModelParams& params, const std::string& path);
ModelParams LoadModel(const std::string& path);

std::vector<uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes);

}  // namespace nic

#endif  // NIC_CHECKPOINT_H_
