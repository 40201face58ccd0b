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

#include "nic/float16.h"

#include <cmath>

namespace nic {

uint16_t EncodeF16(double value) {
  if (std::isnan(value)) return 0x7E00;
  const uint16_t sign = std::signbit(value) ? 0x8000 : 0;
  const double a = std::fabs(value);
  // Halfway between the largest finite half (65504) and 2^16 rounds up.
  if (a >= 65520.0) return sign | 0x7C00;
  if (a < std::ldexp(1.0, -14)) {
    // Subnormal: units of 2^-24. A result of 1024 is the smallest normal,
    // whose encoding happens to be 0x0400 as well.
    const double m = std::nearbyint(std::ldexp(a, 24));
    return sign | static_cast<uint16_t>(m);
  }
  int exp2 = 0;
  const double frac = std::frexp(a, &exp2);  // a = frac * 2^exp2, frac in [0.5, 1)
  int e = exp2 - 1;
  double m = std::nearbyint((frac * 2.0 - 1.0) * 1024.0);
  if (m >= 1024.0) {
    m = 0.0;
    ++e;
  }
  if (e + 15 >= 31) return sign | 0x7C00;
  return sign | static_cast<uint16_t>(((e + 15) << 10) | static_cast<int>(m));
}

double DecodeF16(uint16_t code) {
  const bool negative = code & 0x8000;
  const int e = (code >> 10) & 0x1F;
  const int m = code & 0x3FF;
  double v;
  if (e == 0) {
    v = std::ldexp(static_cast<double>(m), -24);
  } else if (e == 31) {
    v = m ? std::nan("") : INFINITY;
  } else {
    v = std::ldexp(1.0 + m / 1024.0, e - 15);
  }
  return negative ? -v : v;
}

}  // namespace nic
