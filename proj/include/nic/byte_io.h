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

#ifndef NIC_BYTE_IO_H_
#define NIC_BYTE_IO_H_

// Little-endian serialisation helpers shared by every on-disk format.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "nic/errors.h"

namespace nic {

class ByteWriter {
 public:
  void U8(uint8_t v) { bytes_.push_back(v); }
  void I8(int8_t v) { bytes_.push_back(static_cast<uint8_t>(v)); }
  void U16(uint16_t v) {
    U8(static_cast<uint8_t>(v));
    U8(static_cast<uint8_t>(v >> 8));
  }
  void I16(int16_t v) { U16(static_cast<uint16_t>(v)); }
  void U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) U8(static_cast<uint8_t>(v >> (8 * i)));
  }
  void F32(float v) { U32(std::bit_cast<uint32_t>(v)); }
  void Bytes(std::span<const uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  void String(const std::string& s) {
    Bytes({reinterpret_cast<const uint8_t*>(s.data()), s.size()});
  }

  size_t size() const { return bytes_.size(); }
  const std::vector<uint8_t>& bytes() const { return bytes_; }
  std::vector<uint8_t> Take() { return std::move(bytes_); }

 private:
  std::vector<uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> bytes, const char* what = "stream")
      : bytes_(bytes), what_(what) {}

  uint8_t U8() { return Need(1)[0]; }
  int8_t I8() { return static_cast<int8_t>(U8()); }
  uint16_t U16() {
    const uint8_t* p = Need(2);
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
  }
  int16_t I16() { return static_cast<int16_t>(U16()); }
  uint32_t U32() {
    const uint8_t* p = Need(4);
    return uint32_t{p[0]} | (uint32_t{p[1]} << 8) | (uint32_t{p[2]} << 16) |
           (uint32_t{p[3]} << 24);
  }
  float F32() { return std::bit_cast<float>(U32()); }
  std::span<const uint8_t> Bytes(size_t n) { return {Need(n), n}; }
  std::string String(size_t n) {
    const uint8_t* p = Need(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }

  size_t remaining() const { return bytes_.size() - pos_; }
  size_t position() const { return pos_; }

 private:
  const uint8_t* Need(size_t n) {
    if (remaining() < n) {
      throw ParseError(ParseErrorCode::kTruncated,
                       std::string(what_) + ": truncated at byte " + std::to_string(pos_) +
                           " (need " + std::to_string(n) + ", have " +
                           std::to_string(remaining()) + ")");
    }
    const uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  const char* what_;
};

}  // namespace nic

#endif  // NIC_BYTE_IO_H_
