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

#include "nic/container.h"

#include <cmath>
#include <limits>
#include <string>

#include "nic/byte_io.h"
#include "nic/errors.h"
#include "nic/float16.h"

namespace nic {
namespace {

constexpr uint8_t kMagic0 = 0x4E;  // 'N'
constexpr uint8_t kMagic1 = 0x43;  // 'C'
constexpr uint8_t kFlagSb = 0x01;
constexpr uint8_t kFlagEb = 0x02;

void WriteSection(ByteWriter& w, std::span<const uint8_t> bytes) {
  if (bytes.size() > std::numeric_limits<uint32_t>::max()) {
    throw InvalidArgument("WriteContainer: section exceeds 4 GiB");
  }
  w.U32(static_cast<uint32_t>(bytes.size()));
  w.Bytes(bytes);
}

std::vector<uint8_t> ReadSection(ByteReader& r, const char* name) {
  const uint32_t n = r.U32();
  if (n > r.remaining()) {
    throw ParseError(ParseErrorCode::kTruncated, std::string("container: ") + name +
                                                     " section declares " + std::to_string(n) +
                                                     " bytes, " + std::to_string(r.remaining()) +
                                                     " remain");
  }
  const auto s = r.Bytes(n);
  return {s.begin(), s.end()};
}

[[noreturn]] void Bad(ParseErrorCode code, const std::string& what) {
  throw ParseError(code, "container: " + what);
}

}  // namespace

std::vector<uint8_t> WriteContainer(const Container& c) {
  const ContainerHeader& h = c.header;
  if (h.has_eb != c.extra.has_value()) {
    throw InvalidArgument("WriteContainer: has_eb flag disagrees with the eb section");
  }
  if ((h.layers > 0) != h.has_eb) {
    throw InvalidArgument("WriteContainer: layer count must be positive exactly when eb is present");
  }
  if (!h.has_sb && !c.sb.empty()) throw InvalidArgument("WriteContainer: sb without has_sb");
  ByteWriter w;
  w.U8(kMagic0);
  w.U8(kMagic1);
  w.U8(h.version);
  w.U8(static_cast<uint8_t>((h.has_sb ? kFlagSb : 0) | (h.has_eb ? kFlagEb : 0)));
  w.U8(h.quality);
  w.U8(h.layers);
  w.U16(h.width);
  w.U16(h.height);
  if (h.has_sb) WriteSection(w, c.sb);
  WriteSection(w, c.mb);
  if (c.extra) {
    const ExtraSection& e = *c.extra;
    w.U16(e.q);
    w.U16(e.mean);
    w.U16(e.sigma);
    w.I8(e.s_min);
    w.I8(e.s_max);
    WriteSection(w, e.coded);
  }
  return w.Take();
}

Container ReadContainer(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, "container");
  Container c;
  ContainerHeader& h = c.header;
  const uint8_t m0 = r.U8();
  const uint8_t m1 = r.U8();
  if (m0 != kMagic0 || m1 != kMagic1) Bad(ParseErrorCode::kBadMagic, "bad magic");
  h.version = r.U8();
  if (h.version != kContainerVersion) {
    Bad(ParseErrorCode::kBadVersion, "unsupported version " + std::to_string(h.version));
  }
  const uint8_t flags = r.U8();
  if (flags & ~(kFlagSb | kFlagEb)) Bad(ParseErrorCode::kFlagMismatch, "unknown flag bits");
  h.has_sb = flags & kFlagSb;
  h.has_eb = flags & kFlagEb;
  h.quality = r.U8();
  h.layers = r.U8();
  if ((h.layers > 0) != h.has_eb) {
    Bad(ParseErrorCode::kFlagMismatch, "layer count " + std::to_string(h.layers) +
                                           " disagrees with the has_eb flag");
  }
  h.width = r.U16();
  h.height = r.U16();
  if (h.width == 0 || h.height == 0) Bad(ParseErrorCode::kBadField, "zero image extent");
  if (h.has_sb) c.sb = ReadSection(r, "sb");
  c.mb = ReadSection(r, "mb");
  if (h.has_eb) {
    ExtraSection e;
    e.q = r.U16();
    e.mean = r.U16();
    e.sigma = r.U16();
    e.s_min = r.I8();
    e.s_max = r.I8();
    const double q = DecodeF16(e.q);
    const double mean = DecodeF16(e.mean);
    const double sigma = DecodeF16(e.sigma);
    if (!(q > 0.0) || !std::isfinite(q)) Bad(ParseErrorCode::kBadField, "non-positive q");
    if (!std::isfinite(mean)) Bad(ParseErrorCode::kBadField, "non-finite update mean");
    if (!(sigma >= kUpdateSigmaFloor) || !std::isfinite(sigma)) {
      Bad(ParseErrorCode::kBadField, "update sigma below floor");
    }
    if (e.s_min > e.s_max) Bad(ParseErrorCode::kBadField, "s_min > s_max");
    e.coded = ReadSection(r, "eb");
    c.extra = std::move(e);
  }
  if (r.remaining() != 0) {
    Bad(ParseErrorCode::kTrailingBytes, std::to_string(r.remaining()) + " trailing bytes");
  }
  return c;
}

size_t ExtraSectionBytes(const Container& c) {
  return c.extra ? kExtraParamBits / 8 + 4 + c.extra->coded.size() : 0;
}

}  // namespace nic
