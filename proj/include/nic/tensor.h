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

#ifndef NIC_TENSOR_H_
#define NIC_TENSOR_H_

// Dense row-major tensors with reverse-mode automatic differentiation.
//
// A TensorT is a cheap handle onto a graph node; copying the handle shares
// the node. Operations (see ops.h) record their inputs only when at least one
// input requires a gradient, so inference over frozen parameters builds no
// graph at all. Training runs in binary32 (`Tensor`); gradient checks rerun
// the same templates in binary64 (`TensorD`).

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nic {

using Shape = std::vector<int>;

int64_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  // Empty until something accumulates into it.
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Null for leaves. Reads `grad` of this node, accumulates into parents.
  std::function<void(Node&)> backward;

  T* GradBuffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad.data();
  }
};

}  // namespace detail

template <typename T>
class TensorT {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  TensorT() = default;
  explicit TensorT(Shape shape, T fill = T(0));
  TensorT(Shape shape, std::vector<T> values);

  static TensorT Scalar(T value) { return TensorT(Shape{}, {value}); }
  static TensorT FromNode(NodePtr node) {
    TensorT t;
    t.node_ = std::move(node);
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[i]; }
  int64_t size() const { return static_cast<int64_t>(node_->data.size()); }

  std::span<const T> data() const { return node_->data; }
  // Only meaningful on leaves (parameters, inputs); writing into an
  // intermediate invalidates the recorded graph.
  std::span<T> mutable_data() { return node_->data; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  TensorT& set_requires_grad(bool value);
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad();

  // Reverse pass from a 0-dimensional tensor. Leaf gradients accumulate
  // across calls; intermediate gradients are reset on every call.
  void backward() const;

  // New leaf holding a copy of the values, no history.
  TensorT detach() const;
  // Same as detach() but keeps the requires_grad flag.
  TensorT clone() const;

  template <typename U>
  TensorT<U> cast() const {
    std::vector<U> values(node_->data.begin(), node_->data.end());
    return TensorT<U>(node_->shape, std::move(values));
  }

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

extern template class TensorT<float>;
extern template class TensorT<double>;

}  // namespace nic

#endif  // NIC_TENSOR_H_
