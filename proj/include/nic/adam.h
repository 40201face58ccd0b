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

#ifndef NIC_ADAM_H_
#define NIC_ADAM_H_

#include <cmath>
#include <cstdint>
#include <vector>

#include "nic/errors.h"
#include "nic/tensor.h"

namespace nic {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamOptions options;
  std::vector<T> first_moment;
  std::vector<T> second_moment;
  int64_t step = 0;
};

// One bias-corrected Adam update of `param` from its accumulated gradient.
// A parameter without a gradient is treated as having a zero gradient.
template <typename T>
void AdamStep(TensorT<T>& param, AdamState<T>& state) {
  const size_t n = static_cast<size_t>(param.size());
  if (state.first_moment.empty()) {
    state.first_moment.assign(n, T(0));
    state.second_moment.assign(n, T(0));
  }
  if (state.first_moment.size() != n) {
    throw ShapeError("AdamStep: moment buffers do not match parameter of shape " +
                     ShapeString(param.shape()));
  }
  ++state.step;
  const AdamOptions& o = state.options;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(o.beta1), b2 = static_cast<T>(o.beta2);
  const T step_size = static_cast<T>(o.learning_rate / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T eps = static_cast<T>(o.epsilon);

  auto grad = param.grad();
  auto values = param.mutable_data();
  for (size_t i = 0; i < n; ++i) {
    const T g = grad.empty() ? T(0) : grad[i];
    T& m = state.first_moment[i];
    T& v = state.second_moment[i];
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g * g;
    values[i] -= step_size * m / (std::sqrt(v * inv_c2) + eps);
  }
}

// Adam over a fixed list of parameters.
template <typename T>
class Adam {
 public:
  Adam(std::vector<TensorT<T>> params, AdamOptions options) : params_(std::move(params)) {
    states_.resize(params_.size());
    for (auto& s : states_) s.options = options;
  }

  void Step() {
    for (size_t i = 0; i < params_.size(); ++i) AdamStep(params_[i], states_[i]);
  }
  void ZeroGrad() {
    for (auto& p : params_) p.zero_grad();
  }
  int64_t steps() const { return states_.empty() ? 0 : states_.front().step; }

 private:
  std::vector<TensorT<T>> params_;
  std::vector<AdamState<T>> states_;
};

}  // namespace nic

#endif  // NIC_ADAM_H_
