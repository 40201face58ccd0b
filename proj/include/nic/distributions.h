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

#ifndef NIC_DISTRIBUTIONS_H_
#define NIC_DISTRIBUTIONS_H_

// Closed-form discretized densities shared by training (autodiff, binary32)
// and by the coding tables (binary64). Both sides evaluate the same formulas,
// so the rate the optimiser sees is the rate the coder charges.
//
// Every pmf is evaluated through upper tails of |x - loc| so that it is
// exactly symmetric and does not cancel catastrophically far from the mode.

#include <cmath>

namespace nic {

inline constexpr double kSigmaFloor = 0.04;
inline constexpr double kSigmaCap = 64.0;

// Value and derivative of a scalar function.
template <typename T>
struct ValueSlope {
  T value;
  T slope;
};

// erfc(x) for x >= 0 via the Abramowitz-Stegun 7.1.26 polynomial
// (|error| <= 1.5e-7). The derivative is that of the polynomial itself so
// finite differences agree with backprop.
template <typename T>
ValueSlope<T> ErfcPoly(T x) {
  constexpr T p = T(0.3275911);
  constexpr T a1 = T(0.254829592);
  constexpr T a2 = T(-0.284496736);
  constexpr T a3 = T(1.421413741);
  constexpr T a4 = T(-1.453152027);
  constexpr T a5 = T(1.061405429);
  const T t = T(1) / (T(1) + p * x);
  const T poly = t * (a1 + t * (a2 + t * (a3 + t * (a4 + t * a5))));
  const T dpoly_dt = a1 + t * (T(2) * a2 + t * (T(3) * a3 + t * (T(4) * a4 + t * (T(5) * a5))));
  const T g = std::exp(-x * x);
  const T dt_dx = -p * t * t;
  return {poly * g, (dpoly_dt * dt_dx - T(2) * x * poly) * g};
}

// P(X > u) for X ~ N(0, 1).
template <typename T>
ValueSlope<T> StdNormalTail(T u) {
  constexpr T kInvSqrt2 = T(0.70710678118654752440);
  if (u >= T(0)) {
    const auto e = ErfcPoly(u * kInvSqrt2);
    return {T(0.5) * e.value, T(0.5) * e.slope * kInvSqrt2};
  }
  const auto e = ErfcPoly(-u * kInvSqrt2);
  return {T(1) - T(0.5) * e.value, T(0.5) * e.slope * kInvSqrt2};
}

// P(X > u) for the standard logistic.
template <typename T>
ValueSlope<T> LogisticTail(T u) {
  if (u >= T(0)) {
    const T e = std::exp(-u);
    const T v = e / (T(1) + e);
    return {v, -v * (T(1) - v)};
  }
  const T v = T(1) / (T(1) + std::exp(u));
  return {v, -v * (T(1) - v)};
}

// Mass of the unit bin centred on x, plus partial derivatives w.r.t. x and
// the scale. Derivative w.r.t. the location is -d_x.
template <typename T>
struct BinMass {
  T mass;
  T d_x;
  T d_scale;
};

template <typename T, typename TailFn>
BinMass<T> DiscretizedMass(T x, T loc, T scale, TailFn tail) {
  const T d = x - loc;
  const T ad = d < T(0) ? -d : d;
  const T lo = (ad - T(0.5)) / scale;
  const T hi = (ad + T(0.5)) / scale;
  const auto tl = tail(lo);
  const auto th = tail(hi);
  const T mass = tl.value - th.value;
  const T d_ad = (tl.slope - th.slope) / scale;
  const T d_scale = (-lo * tl.slope + hi * th.slope) / scale;
  return {mass, d < T(0) ? -d_ad : d_ad, d_scale};
}

template <typename T>
BinMass<T> GaussianBin(T x, T mean, T sigma) {
  return DiscretizedMass(x, mean, sigma, [](T u) { return StdNormalTail(u); });
}

template <typename T>
BinMass<T> LogisticBin(T x, T loc, T scale) {
  return DiscretizedMass(x, loc, scale, [](T u) { return LogisticTail(u); });
}

// N(x+0.5; mu, sigma) - N(x-0.5; mu, sigma) in binary64.
inline double GaussianPmf(double x, double mean, double sigma) {
  return GaussianBin(x, mean, sigma).mass;
}

// Logistic bin mass with scale = exp(log_scale).
inline double LogisticPmf(double x, double loc, double log_scale) {
  return LogisticBin(x, loc, std::exp(log_scale)).mass;
}

}  // namespace nic

#endif  // NIC_DISTRIBUTIONS_H_
