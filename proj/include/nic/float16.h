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

#ifndef NIC_FLOAT16_H_
#define NIC_FLOAT16_H_

#include <cstdint>

namespace nic {

// IEEE 754 binary16 with round-to-nearest-even, computed directly from the
// binary64 value (no double rounding through float). Overflow maps to
// infinity, NaN to the canonical quiet NaN 0x7E00.
uint16_t EncodeF16(double value);
double DecodeF16(uint16_t code);

// DecodeF16(EncodeF16(value)).
inline double RoundToF16(double value) { return DecodeF16(EncodeF16(value)); }

}  // namespace nic

#endif  // NIC_FLOAT16_H_
