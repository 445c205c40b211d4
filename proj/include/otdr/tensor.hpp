// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "otdr/common.hpp"

namespace otdr::nn {

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s);

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<real> data;
  std::vector<real> grad;  // allocated on first use
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

// Disables graph recording for the enclosing scope (inference / numeric probes).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

// Shared-ownership handle over an N-d array with optional gradient tracking.
// Copies are shallow; clone() makes an independent value.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, real value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<real> data, bool requires_grad = false);
  static Tensor scalar(real value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t numel() const { return static_cast<std::int64_t>(node_->data.size()); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }

  real* data() { return node_->data.data(); }
  const real* data() const { return node_->data.data(); }
  std::vector<real>& vec() { return node_->data; }
  const std::vector<real>& vec() const { return node_->data; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }

  bool has_grad() const { return node_->grad.size() == node_->data.size(); }
  real* grad() {
    node_->ensure_grad();
    return node_->grad.data();
  }
  const std::vector<real>& grad_vec() const { return node_->grad; }
  void zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  }

  real item() const {
    require(numel() == 1, "item() requires a single-element tensor");
    return node_->data[0];
  }

  Tensor clone() const;

  // Reverse pass from a scalar tensor. Accumulates into every reachable
  // gradient; the recorded graph is released afterwards.
  void backward();

  detail::TensorNode* node() const { return node_.get(); }
  const std::shared_ptr<detail::TensorNode>& node_ptr() const { return node_; }

  static Tensor wrap(std::shared_ptr<detail::TensorNode> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// A named trainable tensor. Names are unique within a model and define the
// checkpoint ordering.
struct Parameter {
  std::string name;
  Tensor value;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
    value.set_requires_grad(true);
  }
};

void fill_uniform(Tensor& t, Rng& rng, real lo, real hi);

}  // namespace otdr::nn
