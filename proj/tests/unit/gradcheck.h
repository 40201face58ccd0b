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

#ifndef NIC_TESTS_GRADCHECK_H_
#define NIC_TESTS_GRADCHECK_H_

// Central finite differences against reverse-mode gradients in binary64.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "nic/random.h"
#include "nic/tensor.h"

namespace nic::testing {

inline constexpr double kFdStep = 1e-3;
// For graphs through Leaky ReLU, where a 1e-3 step crosses kinks.
inline constexpr double kFdStepPiecewise = 1e-6;
inline constexpr double kFdTolerance = 1e-3;

// Largest relative error over all elements of `inputs`. The denominator is
// floored at 1e-3 of the largest gradient magnitude so that entries whose
// true gradient is ~0 are compared on the scale of the whole gradient.
inline double MaxGradientError(const std::function<TensorD()>& f, std::vector<TensorD> inputs,
                               double step = kFdStep) {
  for (auto& t : inputs) {
    t.zero_grad();
    t.set_requires_grad(true);
  }
  f().backward();
  std::vector<std::vector<double>> analytic;
  double scale = 0.0;
  for (auto& t : inputs) {
    std::vector<double> g(t.size(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), g.begin());
    for (double v : g) scale = std::max(scale, std::fabs(v));
    analytic.push_back(std::move(g));
  }
  const double floor = std::max(1e-3 * scale, 1e-12);
  double worst = 0.0;
  for (size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].mutable_data();
    for (size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = f().item();
      values[i] = saved - step;
      const double down = f().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[k][i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), floor});
      worst = std::max(worst, std::fabs(a - numeric) / denom);
    }
  }
  return worst;
}

inline TensorD RandomTensorD(const Shape& shape, NoiseSource& rng, double scale = 1.0) {
  std::vector<double> v(static_cast<size_t>(NumElements(shape)));
  for (double& x : v) x = (2.0 * rng.Uniform() - 1.0) * scale;
  return TensorD(shape, std::move(v));
}

inline Tensor RandomTensor(const Shape& shape, NoiseSource& rng, double scale = 1.0) {
  std::vector<float> v(static_cast<size_t>(NumElements(shape)));
  for (float& x : v) x = static_cast<float>((2.0 * rng.Uniform() - 1.0) * scale);
  return Tensor(shape, std::move(v));
}

}  // namespace nic::testing

#endif  // NIC_TESTS_GRADCHECK_H_
