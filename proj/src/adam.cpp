// SPDX-License-Identifier: Apache-2.0
#include "otdr/adam.hpp"

#include <cmath>

namespace otdr::nn {

void Adam::step(std::vector<Parameter*>& params) {
  ++t_;
  const real bc1 = 1.0 - std::pow(beta1_, t_);
  const real bc2 = 1.0 - std::pow(beta2_, t_);
  for (Parameter* p : params) {
    require(p->value.has_grad(), "adam: parameter '" + p->name + "' has no gradient");
    auto& st = state_[p->name];
    const std::size_t n = p->value.vec().size();
    if (st.m.size() != n) {
      st.m.assign(n, 0.0);
      st.v.assign(n, 0.0);
    }
    real* w = p->value.data();
    const std::vector<real>& g = p->value.grad_vec();
    for (std::size_t i = 0; i < n; ++i) {
      st.m[i] = beta1_ * st.m[i] + (1.0 - beta1_) * g[i];
      st.v[i] = beta2_ * st.v[i] + (1.0 - beta2_) * g[i] * g[i];
      const real mhat = st.m[i] / bc1;
      const real vhat = st.v[i] / bc2;
      w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void zero_grads(std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->value.zero_grad();
}

}  // namespace otdr::nn
