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

#include "nic/range_coder.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nic/errors.h"

namespace nic {
namespace {

constexpr int kWindowBits = 56;
constexpr uint64_t kTop = uint64_t{1} << kWindowBits;
constexpr uint64_t kBottom = uint64_t{1} << (kWindowBits - 8);
constexpr int kWindowBytes = kWindowBits / 8;  // bytes the decoder preloads

}  // namespace

double CdfTable::CodeLength(int32_t symbol) const {
  return -std::log2(static_cast<double>(Frequency(symbol)) / kProbabilityTotal);
}

CdfTable BuildCdfTable(std::span<const double> pmf, int32_t min_symbol) {
  if (pmf.empty()) throw InvalidArgument("BuildCdfTable: empty pmf");
  if (pmf.size() > kProbabilityTotal) {
    throw InvalidArgument("BuildCdfTable: support of " + std::to_string(pmf.size()) +
                          " symbols exceeds the 16-bit precision");
  }
  double total = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InvalidArgument("BuildCdfTable: pmf entries must be finite and non-negative");
    }
    total += p;
  }
  if (!(total > 0.0)) throw InvalidArgument("BuildCdfTable: all-zero pmf");
  if (total > 1.0 + 1e-6) throw InvalidArgument("BuildCdfTable: pmf sums above 1");

  const size_t n = pmf.size();
  const double spare = static_cast<double>(kProbabilityTotal - n);
  std::vector<uint32_t> counts(n);
  std::vector<double> remainder(n);
  uint32_t assigned = 0;
  for (size_t i = 0; i < n; ++i) {
    const double share = pmf[i] / total * spare;
    const double whole = std::floor(share);
    counts[i] = 1 + static_cast<uint32_t>(whole);
    remainder[i] = share - whole;
    assigned += counts[i];
  }
  // Floors can only undershoot; guard against rounding pushing us over.
  while (assigned > kProbabilityTotal) {
    const auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  if (assigned < kProbabilityTotal) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return remainder[a] > remainder[b]; });
    for (size_t k = 0; assigned < kProbabilityTotal; k = (k + 1) % n) {
      ++counts[order[k]];
      ++assigned;
    }
  }

  CdfTable table;
  table.min_symbol = min_symbol;
  table.cumulative.resize(n + 1);
  table.cumulative[0] = 0;
  for (size_t i = 0; i < n; ++i) table.cumulative[i + 1] = table.cumulative[i] + counts[i];
  return table;
}

void RangeEncoder::Emit(uint8_t byte) {
  if (skip_leading_) {
    // The interval never reaches 2^56, so this byte is always zero.
    skip_leading_ = false;
    return;
  }
  out_.push_back(byte);
}

void RangeEncoder::ShiftLow() {
  const uint64_t top_byte_ff = uint64_t{0xFF} << (kWindowBits - 8);
  if (low_ < top_byte_ff || low_ >= kTop) {
    const uint8_t carry = static_cast<uint8_t>(low_ >> kWindowBits);
    Emit(static_cast<uint8_t>(cache_ + carry));
    for (; pending_ff_ > 0; --pending_ff_) Emit(static_cast<uint8_t>(0xFF + carry));
    cache_ = static_cast<uint8_t>(low_ >> (kWindowBits - 8));
  } else {
    ++pending_ff_;
  }
  low_ = (low_ & (kBottom - 1)) << 8;
}

void RangeEncoder::Encode(int32_t symbol, const CdfTable& table) {
  if (finished_) throw InvalidArgument("RangeEncoder: Encode after Finish");
  if (!table.Contains(symbol)) {
    throw InvalidArgument("RangeEncoder: symbol " + std::to_string(symbol) +
                          " outside table support [" + std::to_string(table.min_symbol) +
                          ", " + std::to_string(table.max_symbol()) + "]");
  }
  const size_t i = static_cast<size_t>(symbol - table.min_symbol);
  const uint64_t r = range_ >> kProbabilityBits;
  low_ += r * table.cumulative[i];
  range_ = r * (table.cumulative[i + 1] - table.cumulative[i]);
  while (range_ < kBottom) {
    range_ <<= 8;
    ShiftLow();
  }
}

std::vector<uint8_t> RangeEncoder::Finish() {
  if (finished_) throw InvalidArgument("RangeEncoder: Finish called twice");
  finished_ = true;
  // Smallest number of window bytes whose zero-padded value stays inside
  // [low, low + range).
  int nbytes = 0;
  uint64_t value = low_;
  for (; nbytes <= kWindowBytes; ++nbytes) {
    const int free_bits = kWindowBits - 8 * nbytes;
    const uint64_t mask = (uint64_t{1} << free_bits) - 1;
    value = (low_ + mask) & ~mask;
    if (value - low_ < range_) break;
  }
  low_ = value;
  for (int i = 0; i < nbytes; ++i) ShiftLow();
  const uint8_t carry = static_cast<uint8_t>(low_ >> kWindowBits);
  Emit(static_cast<uint8_t>(cache_ + carry));
  for (; pending_ff_ > 0; --pending_ff_) Emit(static_cast<uint8_t>(0xFF + carry));
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < kWindowBytes; ++i) code_ = (code_ << 8) | NextByte();
}

uint8_t RangeDecoder::NextByte() {
  if (pos_ < bytes_.size()) return bytes_[pos_++];
  if (++overrun_ > kWindowBytes) {
    throw ParseError(ParseErrorCode::kTruncated, "range decoder: stream truncated");
  }
  return 0;
}

int32_t RangeDecoder::Decode(const CdfTable& table) {
  const uint64_t r = range_ >> kProbabilityBits;
  const uint64_t target = code_ / r;
  if (target >= kProbabilityTotal) {
    throw ParseError(ParseErrorCode::kBadField, "range decoder: corrupt stream");
  }
  const auto it = std::upper_bound(table.cumulative.begin(), table.cumulative.end(),
                                   static_cast<uint32_t>(target));
  const size_t i = static_cast<size_t>(it - table.cumulative.begin()) - 1;
  code_ -= r * table.cumulative[i];
  range_ = r * (table.cumulative[i + 1] - table.cumulative[i]);
  while (range_ < kBottom) {
    code_ = (code_ << 8) | NextByte();
    range_ <<= 8;
  }
  return table.min_symbol + static_cast<int32_t>(i);
}

void RangeDecoder::Finish() const {
  if (pos_ != bytes_.size()) {
    throw ParseError(ParseErrorCode::kTrailingBytes,
                     "range decoder: " + std::to_string(bytes_.size() - pos_) +
                         " unread trailing bytes");
  }
}

std::vector<uint8_t> EncodeSymbols(std::span<const int32_t> symbols,
                                   std::span<const CdfTable> tables) {
  if (symbols.size() != tables.size()) {
    throw InvalidArgument("EncodeSymbols: one table per symbol required");
  }
  RangeEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i) enc.Encode(symbols[i], tables[i]);
  return enc.Finish();
}

std::vector<int32_t> DecodeSymbols(std::span<const uint8_t> bytes,
                                   std::span<const CdfTable> tables, size_t count) {
  if (count != tables.size()) {
    throw InvalidArgument("DecodeSymbols: one table per symbol required");
  }
  RangeDecoder dec(bytes);
  std::vector<int32_t> out(count);
  for (size_t i = 0; i < count; ++i) out[i] = dec.Decode(tables[i]);
  dec.Finish();
  return out;
}

double IdealCodeLength(std::span<const int32_t> symbols, std::span<const CdfTable> tables) {
  double bits = 0.0;
  for (size_t i = 0; i < symbols.size(); ++i) bits += tables[i].CodeLength(symbols[i]);
  return bits;
}

}  // namespace nic
