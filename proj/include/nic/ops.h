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

#ifndef NIC_OPS_H_
#define NIC_OPS_H_

// Differentiable operations over TensorT. Binary elementwise ops require
// identical shapes; the only broadcasts are the per-channel bias inside the
// convolutions and the explicit Expand() of a 0-d tensor.
//
// Instantiated for float and double in ops.cc.

#include "nic/tensor.h"

namespace nic {

template <typename T> TensorT<T> Add(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> Sub(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> Mul(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> Div(const TensorT<T>& a, const TensorT<T>& b);

// a * c and a + c for a constant c.
template <typename T> TensorT<T> Scale(const TensorT<T>& a, T c);
template <typename T> TensorT<T> Shift(const TensorT<T>& a, T c);

template <typename T> TensorT<T> Exp(const TensorT<T>& a);
template <typename T> TensorT<T> Log(const TensorT<T>& a);
template <typename T> TensorT<T> Sqrt(const TensorT<T>& a);
template <typename T> TensorT<T> Square(const TensorT<T>& a);

// x if x >= 0 else slope * x.
template <typename T> TensorT<T> LeakyRelu(const TensorT<T>& a, T slope);

// Elementwise clamp; gradient is zero where the bound is active.
template <typename T> TensorT<T> Clamp(const TensorT<T>& a, T lo, T hi);

// Reductions to a 0-d tensor.
template <typename T> TensorT<T> Sum(const TensorT<T>& a);
template <typename T> TensorT<T> Mean(const TensorT<T>& a);

// Broadcast a 0-d tensor to `shape`.
template <typename T> TensorT<T> Expand(const TensorT<T>& scalar, const Shape& shape);

// Contiguous slice [offset, offset + length) of a rank-1 tensor.
template <typename T> TensorT<T> Slice(const TensorT<T>& v, int offset, int length);

// Channels [begin, end) of an NCHW tensor.
template <typename T> TensorT<T> ChannelSlice(const TensorT<T>& x, int begin, int end);

// Top-left height x width window of an NCHW tensor.
template <typename T> TensorT<T> Crop(const TensorT<T>& x, int height, int width);

// Cross-correlation. input [N,C,H,W], weight [O,C,k,k], bias [O].
// Output [N,O,H',W'] with H' = (H + 2*pad - k) / stride + 1.
template <typename T>
TensorT<T> Conv2d(const TensorT<T>& input, const TensorT<T>& weight,
                  const TensorT<T>& bias, int stride, int pad);

// Transposed convolution (adjoint of Conv2d). input [N,C,H,W],
// weight [C,O,k,k], bias [O]. Output extent
// (H - 1) * stride - 2 * pad + k + output_pad.
template <typename T>
TensorT<T> TransposedConv2d(const TensorT<T>& input, const TensorT<T>& weight,
                            const TensorT<T>& bias, int stride, int pad,
                            int output_pad);

// Unit-bin mass of N(mean, sigma) around each x; all three the same shape.
template <typename T>
TensorT<T> GaussianLikelihood(const TensorT<T>& x, const TensorT<T>& mean,
                              const TensorT<T>& sigma);

// Unit-bin mass of a per-channel logistic. x [N,C,H,W], loc and
// log_scale [C].
template <typename T>
TensorT<T> LogisticLikelihood(const TensorT<T>& x, const TensorT<T>& loc,
                              const TensorT<T>& log_scale);

}  // namespace nic

#endif  // NIC_OPS_H_
