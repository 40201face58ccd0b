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

#ifndef NIC_CONTAINER_H_
#define NIC_CONTAINER_H_

// Bitstream container. Byte layout (docs/FORMAT.md has the full table):
//   0  'N' 'C'
//   2  u8  version
//   3  u8  flags        bit0 has_sb, bit1 has_eb, other bits zero
//   4  u8  quality index
//   5  u8  l            overfitted layer count, 0 without eb
//   6  u16 width
//   8  u16 height
//  10  [u32 |sb|, sb]   when has_sb
//      u32 |mb|, mb
//      [eb]             when has_eb:
//        f16 q, f16 mu, f16 sigma, i8 s_min, i8 s_max,
//        u32 |coded|, coded update symbols

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace nic {

inline constexpr uint8_t kContainerVersion = 1;
inline constexpr size_t kHeaderBytes = 10;
// Width of q, mu, sigma, s_min, s_max together.
inline constexpr int kExtraParamBits = 64;
inline constexpr double kUpdateSigmaFloor = 0.1;

struct ContainerHeader {
  uint8_t version = kContainerVersion;
  bool has_sb = false;
  bool has_eb = false;
  uint8_t quality = 0;
  uint8_t layers = 0;
  uint16_t width = 0;
  uint16_t height = 0;

  bool operator==(const ContainerHeader&) const = default;
};

struct ExtraSection {
  uint16_t q = 0;      // binary16 codes
  uint16_t mean = 0;
  uint16_t sigma = 0;
  int8_t s_min = 0;
  int8_t s_max = 0;
  std::vector<uint8_t> coded;

  bool operator==(const ExtraSection&) const = default;
};

struct Container {
  ContainerHeader header;
  std::vector<uint8_t> sb;  // empty unless header.has_sb
  std::vector<uint8_t> mb;
  std::optional<ExtraSection> extra;

  bool operator==(const Container&) const = default;
};

// Throws InvalidArgument if the flags disagree with the sections present.
std::vector<uint8_t> WriteContainer(const Container& container);
// Throws ParseError with a code naming the first defect found.
Container ReadContainer(std::span<const uint8_t> bytes);

// Byte length of the eb section as written (0 without eb).
size_t ExtraSectionBytes(const Container& container);

}  // namespace nic

#endif  // NIC_CONTAINER_H_
