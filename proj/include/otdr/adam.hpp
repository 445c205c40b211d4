// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <unordered_map>

#include "otdr/tensor.hpp"

namespace otdr::nn {

// Adam with bias correction. Moment state is keyed by parameter name so it
// survives checkpoint/reload cycles of the surrounding model.
class Adam {
 public:
  explicit Adam(real lr = 1e-3, real beta1 = 0.9, real beta2 = 0.999, real eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // One update over all parameters; grads must be populated.
  void step(std::vector<Parameter*>& params);

  int t() const { return t_; }
  real lr() const { return lr_; }
  void set_lr(real lr) { lr_ = lr; }

 private:
  struct Moments {
    std::vector<real> m;
    std::vector<real> v;
  };

  real lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::unordered_map<std::string, Moments> state_;
};

void zero_grads(std::vector<Parameter*>& params);

}  // namespace otdr::nn
