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

#ifndef NIC_RANDOM_H_
#define NIC_RANDOM_H_

#include <cmath>
#include <cstdint>
#include <random>

namespace nic {

// Seeded uniform source. Values are derived from raw mt19937_64 words rather
// than std::uniform_real_distribution, whose algorithm the standard leaves
// open, so streams are identical on every conforming library.
class NoiseSource {
 public:
  explicit NoiseSource(uint64_t seed) : engine_(seed) {}

  // [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // [-0.5, 0.5) on a 2^-24 grid, exact in binary32.
  float CenteredUniform() {
    return static_cast<float>(static_cast<double>(engine_() >> 40) * 0x1.0p-24 - 0.5);
  }
  // Integer in [0, n).
  uint64_t Below(uint64_t n) { return static_cast<uint64_t>(Uniform() * static_cast<double>(n)); }
  // Standard normal by Box-Muller.
  double Normal() {
    const double u1 = 1.0 - Uniform();
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  uint64_t Next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nic

#endif  // NIC_RANDOM_H_
