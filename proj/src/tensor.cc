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

#include "nic/tensor.h"

#include <unordered_set>
#include <utility>

#include "nic/errors.h"

namespace nic {

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative extent in " + ShapeString(shape));
    n *= d;
  }
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
TensorT<T>::TensorT(Shape shape, T fill) : node_(std::make_shared<detail::Node<T>>()) {
  const int64_t n = NumElements(shape);
  node_->shape = std::move(shape);
  node_->data.assign(static_cast<size_t>(n), fill);
}

template <typename T>
TensorT<T>::TensorT(Shape shape, std::vector<T> values)
    : node_(std::make_shared<detail::Node<T>>()) {
  if (NumElements(shape) != static_cast<int64_t>(values.size())) {
    throw ShapeError("tensor shape " + ShapeString(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->data = std::move(values);
}

template <typename T>
T TensorT<T>::item() const {
  if (node_->data.size() != 1) {
    throw ShapeError("item() on tensor of shape " + ShapeString(shape()));
  }
  return node_->data[0];
}

template <typename T>
TensorT<T>& TensorT<T>::set_requires_grad(bool value) {
  if (node_->backward) {
    throw InvalidArgument("requires_grad can only be set on leaf tensors");
  }
  node_->requires_grad = value;
  return *this;
}

template <typename T>
void TensorT<T>::zero_grad() {
  node_->grad.clear();
}

template <typename T>
void TensorT<T>::backward() const {
  if (rank() != 0) {
    throw ShapeError("backward() needs a 0-dimensional tensor, got " +
                     ShapeString(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS; `order` ends with the root.
  using NodeT = detail::Node<T>;
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<NodeT*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      NodeT* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (NodeT* n : order) {
    if (n->backward) n->grad.assign(n->data.size(), T(0));
  }
  node_->GradBuffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

template <typename T>
TensorT<T> TensorT<T>::detach() const {
  return TensorT<T>(node_->shape, node_->data);
}

template <typename T>
TensorT<T> TensorT<T>::clone() const {
  TensorT<T> t = detach();
  t.node_->requires_grad = node_->requires_grad;
  return t;
}

template class TensorT<float>;
template class TensorT<double>;

}  // namespace nic
