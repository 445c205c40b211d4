// SPDX-License-Identifier: Apache-2.0
#include "otdr/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace otdr::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool grad_enabled() { return g_grad_enabled; }

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = std::make_shared<detail::TensorNode>();
  n->shape = std::move(shape);
  n->data.assign(static_cast<std::size_t>(shape_numel(n->shape)), 0.0);
  n->requires_grad = requires_grad;
  return wrap(std::move(n));
}

Tensor Tensor::full(Shape shape, real value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.vec().begin(), t.vec().end(), value);
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<real> data, bool requires_grad) {
  require(shape_numel(shape) == static_cast<std::int64_t>(data.size()),
          "tensor data length does not match shape " + shape_str(shape));
  auto n = std::make_shared<detail::TensorNode>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return wrap(std::move(n));
}

Tensor Tensor::scalar(real value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

Tensor Tensor::clone() const {
  auto n = std::make_shared<detail::TensorNode>();
  n->shape = node_->shape;
  n->data = node_->data;
  n->requires_grad = node_->requires_grad;
  return wrap(std::move(n));
}

void Tensor::backward() {
  require(defined() && numel() == 1, "backward() requires a scalar tensor");

  // Iterative DFS topological order over recorded parents.
  std::vector<detail::TensorNode*> order;
  std::unordered_set<detail::TensorNode*> visited;
  std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [cur, idx] = stack.back();
    if (idx < cur->parents.size()) {
      detail::TensorNode* p = cur->parents[idx++].get();
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(cur);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorNode* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
  // Release the graph; parameter nodes keep their accumulated grads.
  for (detail::TensorNode* n : order) {
    n->backward_fn = nullptr;
    n->parents.clear();
  }
}

void fill_uniform(Tensor& t, Rng& rng, real lo, real hi) {
  for (auto& v : t.vec()) v = rng.uniform(lo, hi);
}

}  // namespace otdr::nn
