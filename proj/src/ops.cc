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

#include "nic/ops.h"

#include <Eigen/Core>
#include <cmath>
#include <utility>

#include "nic/distributions.h"
#include "nic/errors.h"

namespace nic {
namespace {

template <typename T>
using NodeT = detail::Node<T>;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// Builds the output node. The graph edge and the backward closure are only
// kept when some input needs a gradient.
template <typename T>
TensorT<T> Record(Shape shape, std::vector<T> data,
                  std::initializer_list<const TensorT<T>*> inputs,
                  std::function<void(NodeT<T>&)> backward) {
  auto node = std::make_shared<NodeT<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  bool any = false;
  for (const auto* in : inputs) any = any || in->requires_grad();
  if (any) {
    node->requires_grad = true;
    for (const auto* in : inputs) node->parents.push_back(in->node());
    node->backward = std::move(backward);
  }
  return TensorT<T>::FromNode(std::move(node));
}

// Gradient sink for parent i, or null when that parent is frozen.
template <typename T>
T* ParentGrad(NodeT<T>& self, size_t i) {
  auto& p = self.parents[i];
  return p->requires_grad ? p->GradBuffer() : nullptr;
}

template <typename T>
void RequireSameShape(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + ShapeString(a.shape()) +
                     " vs " + ShapeString(b.shape()));
  }
}

template <typename T, typename Fwd, typename Bwd>
TensorT<T> Unary(const TensorT<T>& a, Fwd fwd, Bwd dfdx) {
  const auto in = a.data();
  std::vector<T> out(in.size());
  for (size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return Record<T>(a.shape(), std::move(out), {&a}, [dfdx](NodeT<T>& self) {
    T* g = ParentGrad(self, 0);
    if (!g) return;
    const auto& x = self.parents[0]->data;
    for (size_t i = 0; i < x.size(); ++i) g[i] += self.grad[i] * dfdx(x[i], self.data[i]);
  });
}

// Column layout: row (c*k + ky)*k + kx, column oy*out_w + ox holds
// img[c, oy*stride - pad + ky, ox*stride - pad + kx] (zero outside).
template <typename T>
void Im2Col(const T* img, int channels, int height, int width, int k, int stride,
            int pad, int out_h, int out_w, T* cols) {
  const int64_t plane = int64_t{out_h} * out_w;
  for (int c = 0; c < channels; ++c) {
    const T* src = img + int64_t{c} * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols + ((int64_t{c} * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          T* dst = row + int64_t{oy} * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(dst, dst + out_w, T(0));
            continue;
          }
          const T* line = src + int64_t{iy} * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < width) ? line[ix] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of Im2Col: scatter-adds columns back into the image.
template <typename T>
void Col2Im(const T* cols, int channels, int height, int width, int k, int stride,
            int pad, int out_h, int out_w, T* img) {
  const int64_t plane = int64_t{out_h} * out_w;
  for (int c = 0; c < channels; ++c) {
    T* dst_plane = img + int64_t{c} * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = cols + ((int64_t{c} * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= height) continue;
          T* line = dst_plane + int64_t{iy} * width;
          const T* src = row + int64_t{oy} * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < width) line[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void AddChannelBias(const T* bias, int channels, int64_t plane, T* out) {
  for (int c = 0; c < channels; ++c) {
    T* p = out + c * plane;
    const T b = bias[c];
    for (int64_t i = 0; i < plane; ++i) p[i] += b;
  }
}

template <typename T>
void AccumulateBiasGrad(const T* grad_out, int batch, int channels, int64_t plane,
                        T* grad_bias) {
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const T* p = grad_out + (int64_t{n} * channels + c) * plane;
      T s = T(0);
      for (int64_t i = 0; i < plane; ++i) s += p[i];
      grad_bias[c] += s;
    }
  }
}

struct ConvGeometry {
  int batch, in_c, in_h, in_w, out_c, out_h, out_w, k;
};

template <typename T>
ConvGeometry CheckConvShapes(const TensorT<T>& input, const TensorT<T>& weight,
                             const TensorT<T>& bias, bool transposed, const char* op) {
  if (input.rank() != 4 || weight.rank() != 4 || bias.rank() != 1) {
    throw ShapeError(std::string(op) + ": expected input rank 4, weight rank 4, bias rank 1; got " +
                     ShapeString(input.shape()) + ", " + ShapeString(weight.shape()) +
                     ", " + ShapeString(bias.shape()));
  }
  ConvGeometry g{};
  g.batch = input.dim(0);
  g.in_c = input.dim(1);
  g.in_h = input.dim(2);
  g.in_w = input.dim(3);
  g.k = weight.dim(2);
  const int w_in = transposed ? weight.dim(0) : weight.dim(1);
  g.out_c = transposed ? weight.dim(1) : weight.dim(0);
  if (weight.dim(3) != g.k || w_in != g.in_c || bias.dim(0) != g.out_c) {
    throw ShapeError(std::string(op) + ": weight " + ShapeString(weight.shape()) +
                     " / bias " + ShapeString(bias.shape()) +
                     " incompatible with input " + ShapeString(input.shape()));
  }
  return g;
}

}  // namespace

template <typename T>
TensorT<T> Add(const TensorT<T>& a, const TensorT<T>& b) {
  RequireSameShape(a, b, "Add");
  std::vector<T> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
  return Record<T>(a.shape(), std::move(out), {&a, &b}, [](NodeT<T>& self) {
    for (size_t p = 0; p < 2; ++p) {
      if (T* g = ParentGrad(self, p)) {
        for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

template <typename T>
TensorT<T> Sub(const TensorT<T>& a, const TensorT<T>& b) {
  RequireSameShape(a, b, "Sub");
  std::vector<T> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= bd[i];
  return Record<T>(a.shape(), std::move(out), {&a, &b}, [](NodeT<T>& self) {
    if (T* g = ParentGrad(self, 0)) {
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (T* g = ParentGrad(self, 1)) {
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
TensorT<T> Mul(const TensorT<T>& a, const TensorT<T>& b) {
  RequireSameShape(a, b, "Mul");
  std::vector<T> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
  return Record<T>(a.shape(), std::move(out), {&a, &b}, [](NodeT<T>& self) {
    const auto& x = self.parents[0]->data;
    const auto& y = self.parents[1]->data;
    if (T* g = ParentGrad(self, 0)) {
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * y[i];
    }
    if (T* g = ParentGrad(self, 1)) {
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * x[i];
    }
  });
}

template <typename T>
TensorT<T> Div(const TensorT<T>& a, const TensorT<T>& b) {
  RequireSameShape(a, b, "Div");
  std::vector<T> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] /= bd[i];
  return Record<T>(a.shape(), std::move(out), {&a, &b}, [](NodeT<T>& self) {
    const auto& y = self.parents[1]->data;
    if (T* g = ParentGrad(self, 0)) {
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] / y[i];
    }
    if (T* g = ParentGrad(self, 1)) {
      for (size_t i = 0; i < self.grad.size(); ++i) {
        g[i] -= self.grad[i] * self.data[i] / y[i];
      }
    }
  });
}

template <typename T>
TensorT<T> Scale(const TensorT<T>& a, T c) {
  return Unary(a, [c](T x) { return x * c; }, [c](T, T) { return c; });
}

template <typename T>
TensorT<T> Shift(const TensorT<T>& a, T c) {
  return Unary(a, [c](T x) { return x + c; }, [](T, T) { return T(1); });
}

template <typename T>
TensorT<T> Exp(const TensorT<T>& a) {
  return Unary(a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
TensorT<T> Log(const TensorT<T>& a) {
  return Unary(a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
TensorT<T> Sqrt(const TensorT<T>& a) {
  return Unary(a, [](T x) { return std::sqrt(x); }, [](T, T y) { return T(0.5) / y; });
}

template <typename T>
TensorT<T> Square(const TensorT<T>& a) {
  return Unary(a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

template <typename T>
TensorT<T> LeakyRelu(const TensorT<T>& a, T slope) {
  return Unary(
      a, [slope](T x) { return x >= T(0) ? x : slope * x; },
      [slope](T x, T) { return x >= T(0) ? T(1) : slope; });
}

template <typename T>
TensorT<T> Clamp(const TensorT<T>& a, T lo, T hi) {
  return Unary(
      a, [lo, hi](T x) { return x < lo ? lo : (x > hi ? hi : x); },
      [lo, hi](T x, T) { return (x >= lo && x <= hi) ? T(1) : T(0); });
}

template <typename T>
TensorT<T> Sum(const TensorT<T>& a) {
  T s = T(0);
  for (T v : a.data()) s += v;
  return Record<T>(Shape{}, {s}, {&a}, [](NodeT<T>& self) {
    if (T* g = ParentGrad(self, 0)) {
      const size_t n = self.parents[0]->data.size();
      for (size_t i = 0; i < n; ++i) g[i] += self.grad[0];
    }
  });
}

template <typename T>
TensorT<T> Mean(const TensorT<T>& a) {
  if (a.size() == 0) throw ShapeError("Mean of an empty tensor");
  const T n = static_cast<T>(a.size());
  T s = T(0);
  for (T v : a.data()) s += v;
  return Record<T>(Shape{}, {s / n}, {&a}, [n](NodeT<T>& self) {
    if (T* g = ParentGrad(self, 0)) {
      const T share = self.grad[0] / n;
      const size_t count = self.parents[0]->data.size();
      for (size_t i = 0; i < count; ++i) g[i] += share;
    }
  });
}

template <typename T>
TensorT<T> Expand(const TensorT<T>& scalar, const Shape& shape) {
  if (scalar.rank() != 0) {
    throw ShapeError("Expand needs a 0-d tensor, got " + ShapeString(scalar.shape()));
  }
  std::vector<T> out(static_cast<size_t>(NumElements(shape)), scalar.item());
  return Record<T>(shape, std::move(out), {&scalar}, [](NodeT<T>& self) {
    if (T* g = ParentGrad(self, 0)) {
      T s = T(0);
      for (T v : self.grad) s += v;
      g[0] += s;
    }
  });
}

template <typename T>
TensorT<T> Slice(const TensorT<T>& v, int offset, int length) {
  if (v.rank() != 1 || offset < 0 || length < 0 || offset + length > v.dim(0)) {
    throw ShapeError("Slice [" + std::to_string(offset) + ", +" + std::to_string(length) +
                     ") out of range for " + ShapeString(v.shape()));
  }
  const auto d = v.data();
  std::vector<T> out(d.begin() + offset, d.begin() + offset + length);
  return Record<T>(Shape{length}, std::move(out), {&v}, [offset](NodeT<T>& self) {
    if (T* g = ParentGrad(self, 0)) {
      for (size_t i = 0; i < self.grad.size(); ++i) g[offset + i] += self.grad[i];
    }
  });
}

template <typename T>
TensorT<T> ChannelSlice(const TensorT<T>& x, int begin, int end) {
  if (x.rank() != 4 || begin < 0 || end > x.dim(1) || begin >= end) {
    throw ShapeError("ChannelSlice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + ShapeString(x.shape()));
  }
  const int n = x.dim(0), c = x.dim(1);
  const int64_t plane = int64_t{x.dim(2)} * x.dim(3);
  const int width = end - begin;
  std::vector<T> out(static_cast<size_t>(n * width * plane));
  const auto d = x.data();
  for (int b = 0; b < n; ++b) {
    std::copy_n(d.begin() + (int64_t{b} * c + begin) * plane, width * plane,
                out.begin() + int64_t{b} * width * plane);
  }
  return Record<T>(Shape{n, width, x.dim(2), x.dim(3)}, std::move(out), {&x},
                   [n, c, begin, width, plane](NodeT<T>& self) {
                     T* g = ParentGrad(self, 0);
                     if (!g) return;
                     for (int b = 0; b < n; ++b) {
                       const T* src = self.grad.data() + int64_t{b} * width * plane;
                       T* dst = g + (int64_t{b} * c + begin) * plane;
                       for (int64_t i = 0; i < width * plane; ++i) dst[i] += src[i];
                     }
                   });
}

template <typename T>
TensorT<T> Crop(const TensorT<T>& x, int height, int width) {
  if (x.rank() != 4 || height <= 0 || width <= 0 || height > x.dim(2) || width > x.dim(3)) {
    throw ShapeError("Crop to " + std::to_string(height) + "x" + std::to_string(width) +
                     " invalid for " + ShapeString(x.shape()));
  }
  const int planes = x.dim(0) * x.dim(1);
  const int src_h = x.dim(2), src_w = x.dim(3);
  std::vector<T> out(static_cast<size_t>(int64_t{planes} * height * width));
  const auto d = x.data();
  for (int p = 0; p < planes; ++p) {
    for (int y = 0; y < height; ++y) {
      std::copy_n(d.begin() + (int64_t{p} * src_h + y) * src_w, width,
                  out.begin() + (int64_t{p} * height + y) * width);
    }
  }
  return Record<T>(Shape{x.dim(0), x.dim(1), height, width}, std::move(out), {&x},
                   [planes, src_h, src_w, height, width](NodeT<T>& self) {
                     T* g = ParentGrad(self, 0);
                     if (!g) return;
                     for (int p = 0; p < planes; ++p) {
                       for (int y = 0; y < height; ++y) {
                         const T* src = self.grad.data() + (int64_t{p} * height + y) * width;
                         T* dst = g + (int64_t{p} * src_h + y) * src_w;
                         for (int xx = 0; xx < width; ++xx) dst[xx] += src[xx];
                       }
                     }
                   });
}

template <typename T>
TensorT<T> Conv2d(const TensorT<T>& input, const TensorT<T>& weight,
                  const TensorT<T>& bias, int stride, int pad) {
  ConvGeometry g = CheckConvShapes(input, weight, bias, false, "Conv2d");
  if (stride < 1 || pad < 0 || g.in_h + 2 * pad < g.k || g.in_w + 2 * pad < g.k) {
    throw ShapeError("Conv2d: kernel " + std::to_string(g.k) + " does not fit input " +
                     ShapeString(input.shape()));
  }
  g.out_h = (g.in_h + 2 * pad - g.k) / stride + 1;
  g.out_w = (g.in_w + 2 * pad - g.k) / stride + 1;
  const int64_t patch = int64_t{g.in_c} * g.k * g.k;
  const int64_t out_plane = int64_t{g.out_h} * g.out_w;
  const int64_t in_size = int64_t{g.in_c} * g.in_h * g.in_w;

  std::vector<T> out(static_cast<size_t>(g.batch * g.out_c * out_plane));
  std::vector<T> cols(static_cast<size_t>(patch * out_plane));
  ConstMatMap<T> w(weight.data().data(), g.out_c, patch);
  for (int n = 0; n < g.batch; ++n) {
    Im2Col(input.data().data() + n * in_size, g.in_c, g.in_h, g.in_w, g.k, stride, pad,
           g.out_h, g.out_w, cols.data());
    MatMap<T> o(out.data() + n * g.out_c * out_plane, g.out_c, out_plane);
    o.noalias() = w * ConstMatMap<T>(cols.data(), patch, out_plane);
    AddChannelBias(bias.data().data(), g.out_c, out_plane, o.data());
  }

  return Record<T>(
      Shape{g.batch, g.out_c, g.out_h, g.out_w}, std::move(out), {&input, &weight, &bias},
      [g, stride, pad, patch, out_plane, in_size](NodeT<T>& self) {
        const auto& x = self.parents[0]->data;
        const auto& wd = self.parents[1]->data;
        T* gx = ParentGrad(self, 0);
        T* gw = ParentGrad(self, 1);
        T* gb = ParentGrad(self, 2);
        std::vector<T> cols(static_cast<size_t>(patch * out_plane));
        ConstMatMap<T> w(wd.data(), g.out_c, patch);
        for (int n = 0; n < g.batch; ++n) {
          ConstMatMap<T> go(self.grad.data() + n * g.out_c * out_plane, g.out_c, out_plane);
          if (gw) {
            Im2Col(x.data() + n * in_size, g.in_c, g.in_h, g.in_w, g.k, stride, pad, g.out_h,
                   g.out_w, cols.data());
            MatMap<T>(gw, g.out_c, patch).noalias() +=
                go * ConstMatMap<T>(cols.data(), patch, out_plane).transpose();
          }
          if (gx) {
            MatMap<T>(cols.data(), patch, out_plane).noalias() = w.transpose() * go;
            Col2Im(cols.data(), g.in_c, g.in_h, g.in_w, g.k, stride, pad, g.out_h, g.out_w,
                   gx + n * in_size);
          }
        }
        if (gb) AccumulateBiasGrad(self.grad.data(), g.batch, g.out_c, out_plane, gb);
      });
}

template <typename T>
TensorT<T> TransposedConv2d(const TensorT<T>& input, const TensorT<T>& weight,
                            const TensorT<T>& bias, int stride, int pad, int output_pad) {
  ConvGeometry g = CheckConvShapes(input, weight, bias, true, "TransposedConv2d");
  if (stride < 1 || pad < 0 || output_pad < 0 || output_pad >= stride) {
    throw ShapeError("TransposedConv2d: need stride >= 1, pad >= 0, 0 <= output_pad < stride");
  }
  g.out_h = (g.in_h - 1) * stride - 2 * pad + g.k + output_pad;
  g.out_w = (g.in_w - 1) * stride - 2 * pad + g.k + output_pad;
  if (g.out_h <= 0 || g.out_w <= 0) {
    throw ShapeError("TransposedConv2d: empty output for input " + ShapeString(input.shape()));
  }
  // cols has the layout Im2Col would produce for a Conv2d from the output
  // grid back to the input grid.
  const int64_t patch = int64_t{g.out_c} * g.k * g.k;
  const int64_t in_plane = int64_t{g.in_h} * g.in_w;
  const int64_t out_plane = int64_t{g.out_h} * g.out_w;
  const int64_t out_size = g.out_c * out_plane;

  std::vector<T> out(static_cast<size_t>(g.batch * out_size), T(0));
  std::vector<T> cols(static_cast<size_t>(patch * in_plane));
  ConstMatMap<T> w(weight.data().data(), g.in_c, patch);
  for (int n = 0; n < g.batch; ++n) {
    ConstMatMap<T> xn(input.data().data() + n * g.in_c * in_plane, g.in_c, in_plane);
    MatMap<T>(cols.data(), patch, in_plane).noalias() = w.transpose() * xn;
    T* on = out.data() + n * out_size;
    Col2Im(cols.data(), g.out_c, g.out_h, g.out_w, g.k, stride, pad, g.in_h, g.in_w, on);
    AddChannelBias(bias.data().data(), g.out_c, out_plane, on);
  }

  return Record<T>(
      Shape{g.batch, g.out_c, g.out_h, g.out_w}, std::move(out), {&input, &weight, &bias},
      [g, stride, pad, patch, in_plane, out_plane, out_size](NodeT<T>& self) {
        const auto& x = self.parents[0]->data;
        const auto& wd = self.parents[1]->data;
        T* gx = ParentGrad(self, 0);
        T* gw = ParentGrad(self, 1);
        T* gb = ParentGrad(self, 2);
        if (gx || gw) {
          std::vector<T> cols(static_cast<size_t>(patch * in_plane));
          ConstMatMap<T> w(wd.data(), g.in_c, patch);
          for (int n = 0; n < g.batch; ++n) {
            Im2Col(self.grad.data() + n * out_size, g.out_c, g.out_h, g.out_w, g.k, stride,
                   pad, g.in_h, g.in_w, cols.data());
            ConstMatMap<T> gc(cols.data(), patch, in_plane);
            if (gx) {
              MatMap<T>(gx + n * g.in_c * in_plane, g.in_c, in_plane).noalias() += w * gc;
            }
            if (gw) {
              ConstMatMap<T> xn(x.data() + n * g.in_c * in_plane, g.in_c, in_plane);
              MatMap<T>(gw, g.in_c, patch).noalias() += xn * gc.transpose();
            }
          }
        }
        if (gb) AccumulateBiasGrad(self.grad.data(), g.batch, g.out_c, out_plane, gb);
      });
}

template <typename T>
TensorT<T> GaussianLikelihood(const TensorT<T>& x, const TensorT<T>& mean,
                              const TensorT<T>& sigma) {
  RequireSameShape(x, mean, "GaussianLikelihood");
  RequireSameShape(x, sigma, "GaussianLikelihood");
  const size_t n = static_cast<size_t>(x.size());
  std::vector<T> out(n), d_x(n), d_s(n);
  const auto xd = x.data(), md = mean.data(), sd = sigma.data();
  for (size_t i = 0; i < n; ++i) {
    const auto m = GaussianBin(xd[i], md[i], sd[i]);
    out[i] = m.mass;
    d_x[i] = m.d_x;
    d_s[i] = m.d_scale;
  }
  return Record<T>(x.shape(), std::move(out), {&x, &mean, &sigma},
                   [d_x = std::move(d_x), d_s = std::move(d_s)](NodeT<T>& self) {
                     const size_t n = self.grad.size();
                     if (T* g = ParentGrad(self, 0)) {
                       for (size_t i = 0; i < n; ++i) g[i] += self.grad[i] * d_x[i];
                     }
                     if (T* g = ParentGrad(self, 1)) {
                       for (size_t i = 0; i < n; ++i) g[i] -= self.grad[i] * d_x[i];
                     }
                     if (T* g = ParentGrad(self, 2)) {
                       for (size_t i = 0; i < n; ++i) g[i] += self.grad[i] * d_s[i];
                     }
                   });
}

template <typename T>
TensorT<T> LogisticLikelihood(const TensorT<T>& x, const TensorT<T>& loc,
                              const TensorT<T>& log_scale) {
  if (x.rank() < 2 || loc.rank() != 1 || loc.shape() != log_scale.shape() ||
      loc.dim(0) != x.dim(1)) {
    throw ShapeError("LogisticLikelihood: x " + ShapeString(x.shape()) + " with loc " +
                     ShapeString(loc.shape()) + " / log_scale " +
                     ShapeString(log_scale.shape()));
  }
  const int batch = x.dim(0), channels = x.dim(1);
  const int64_t plane = x.size() / (int64_t{batch} * channels);
  const size_t n = static_cast<size_t>(x.size());
  std::vector<T> out(n), d_x(n), d_s(n);
  const auto xd = x.data(), ld = loc.data(), sd = log_scale.data();
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < channels; ++c) {
      const T scale = std::exp(sd[c]);
      const int64_t base = (int64_t{b} * channels + c) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        const auto m = LogisticBin(xd[base + i], ld[c], scale);
        out[base + i] = m.mass;
        d_x[base + i] = m.d_x;
        d_s[base + i] = m.d_scale * scale;  // chain through exp(log_scale)
      }
    }
  }
  return Record<T>(x.shape(), std::move(out), {&x, &loc, &log_scale},
                   [batch, channels, plane, d_x = std::move(d_x),
                    d_s = std::move(d_s)](NodeT<T>& self) {
                     T* gx = ParentGrad(self, 0);
                     T* gl = ParentGrad(self, 1);
                     T* gs = ParentGrad(self, 2);
                     for (int b = 0; b < batch; ++b) {
                       for (int c = 0; c < channels; ++c) {
                         const int64_t base = (int64_t{b} * channels + c) * plane;
                         T acc_l = T(0), acc_s = T(0);
                         for (int64_t i = 0; i < plane; ++i) {
                           const T gi = self.grad[base + i];
                           if (gx) gx[base + i] += gi * d_x[base + i];
                           acc_l -= gi * d_x[base + i];
                           acc_s += gi * d_s[base + i];
                         }
                         if (gl) gl[c] += acc_l;
                         if (gs) gs[c] += acc_s;
                       }
                     }
                   });
}

#define NIC_INSTANTIATE_OPS(T)                                                              \
  template TensorT<T> Add(const TensorT<T>&, const TensorT<T>&);                            \
  template TensorT<T> Sub(const TensorT<T>&, const TensorT<T>&);                            \
  template TensorT<T> Mul(const TensorT<T>&, const TensorT<T>&);                            \
  template TensorT<T> Div(const TensorT<T>&, const TensorT<T>&);                            \
  template TensorT<T> Scale(const TensorT<T>&, T);                                          \
  template TensorT<T> Shift(const TensorT<T>&, T);                                          \
  template TensorT<T> Exp(const TensorT<T>&);                                               \
  template TensorT<T> Log(const TensorT<T>&);                                               \
  template TensorT<T> Sqrt(const TensorT<T>&);                                              \
  template TensorT<T> Square(const TensorT<T>&);                                            \
  template TensorT<T> LeakyRelu(const TensorT<T>&, T);                                      \
  template TensorT<T> Clamp(const TensorT<T>&, T, T);                                       \
  template TensorT<T> Sum(const TensorT<T>&);                                               \
  template TensorT<T> Mean(const TensorT<T>&);                                              \
  template TensorT<T> Expand(const TensorT<T>&, const Shape&);                              \
  template TensorT<T> Slice(const TensorT<T>&, int, int);                                   \
  template TensorT<T> ChannelSlice(const TensorT<T>&, int, int);                            \
  template TensorT<T> Crop(const TensorT<T>&, int, int);                                    \
  template TensorT<T> Conv2d(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, int,  \
                             int);                                                          \
  template TensorT<T> TransposedConv2d(const TensorT<T>&, const TensorT<T>&,                \
                                       const TensorT<T>&, int, int, int);                   \
  template TensorT<T> GaussianLikelihood(const TensorT<T>&, const TensorT<T>&,              \
                                         const TensorT<T>&);                                \
  template TensorT<T> LogisticLikelihood(const TensorT<T>&, const TensorT<T>&,              \
                                         const TensorT<T>&);

NIC_INSTANTIATE_OPS(float)
NIC_INSTANTIATE_OPS(double)

#undef NIC_INSTANTIATE_OPS

}  // namespace nic
