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

#ifndef NIC_RANGE_CODER_H_
#define NIC_RANGE_CODER_H_

// Static-model range coder with 16-bit probabilities.
//
// State is a 56-bit window (low, range) inside 64-bit registers; range is
// renormalised a byte at a time whenever it drops below 2^48, and carries are
// resolved with the cache + pending-0xFF scheme known from LZMA. Two details
// keep short streams short:
//   * the first cache byte is always zero (the coding interval never leaves
//     [0, 2^56)) and is not written;
//   * Finish() writes only as many bytes as are needed to pin a value inside
//     the final interval. The decoder reads zeros past the end of the buffer,
//     which is exactly the value those omitted bytes had.
// A stream that runs out by more than the 7-byte window is reported as
// truncated, and unread trailing bytes are rejected.

#include <cstdint>
#include <span>
#include <vector>

namespace nic {

inline constexpr int kProbabilityBits = 16;
inline constexpr uint32_t kProbabilityTotal = 1u << kProbabilityBits;

// Quantised cdf over the contiguous symbol range
// [min_symbol, min_symbol + support()). cumulative has support() + 1 strictly
// increasing entries, the first 0 and the last kProbabilityTotal.
struct CdfTable {
  int32_t min_symbol = 0;
  std::vector<uint32_t> cumulative;

  int support() const { return static_cast<int>(cumulative.size()) - 1; }
  int32_t max_symbol() const { return min_symbol + support() - 1; }
  bool Contains(int32_t symbol) const {
    return symbol >= min_symbol && symbol <= max_symbol();
  }
  uint32_t Frequency(int32_t symbol) const {
    const size_t i = static_cast<size_t>(symbol - min_symbol);
    return cumulative[i + 1] - cumulative[i];
  }
  // -log2 of the coded probability of `symbol`.
  double CodeLength(int32_t symbol) const;
};

// Scales `pmf` (non-negative, 0 < sum <= 1) to kProbabilityTotal counts.
// Every bucket keeps at least one count; the rounding residue goes to the
// largest fractional parts, lower index first on ties.
CdfTable BuildCdfTable(std::span<const double> pmf, int32_t min_symbol);

class RangeEncoder {
 public:
  RangeEncoder() = default;

  // Throws InvalidArgument if `symbol` is outside the table support.
  void Encode(int32_t symbol, const CdfTable& table);
  std::vector<uint8_t> Finish();

 private:
  void ShiftLow();
  void Emit(uint8_t byte);

  uint64_t low_ = 0;
  uint64_t range_ = (uint64_t{1} << 56) - 1;
  uint8_t cache_ = 0;
  uint64_t pending_ff_ = 0;
  bool skip_leading_ = true;
  bool finished_ = false;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> bytes);

  // Throws ParseError on corrupt or truncated input.
  int32_t Decode(const CdfTable& table);
  // Verifies that every input byte was consumed.
  void Finish() const;

 private:
  uint8_t NextByte();

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  int overrun_ = 0;
  uint64_t code_ = 0;
  uint64_t range_ = (uint64_t{1} << 56) - 1;
};

// One table per symbol.
std::vector<uint8_t> EncodeSymbols(std::span<const int32_t> symbols,
                                   std::span<const CdfTable> tables);
std::vector<int32_t> DecodeSymbols(std::span<const uint8_t> bytes,
                                   std::span<const CdfTable> tables, size_t count);

// Sum of CodeLength over the symbols: the ideal length the coder approaches.
double IdealCodeLength(std::span<const int32_t> symbols, std::span<const CdfTable> tables);

}  // namespace nic

#endif  // NIC_RANGE_CODER_H_
