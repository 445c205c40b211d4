// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "otdr/tensor.hpp"

namespace otdr::nn {

struct GradCheckReport {
  real max_rel_error = 0.0;
  std::string worst_param;
  std::int64_t worst_index = -1;
  bool finite = true;
  bool passed = false;
};

// Central finite differences (h = 1e-5) over every parameter element versus
// the recorded reverse-mode gradients of a scalar loss.
GradCheckReport grad_check(const std::function<Tensor()>& loss_fn,
                           std::vector<Parameter*> params, real tolerance,
                           real h = 1e-5);

// Same check over a deterministic random subset of elements per parameter;
// keeps full-model checks inside a time budget.
GradCheckReport grad_check_sampled(const std::function<Tensor()>& loss_fn,
                                   std::vector<Parameter*> params, real tolerance,
                                   std::int64_t elems_per_param, std::uint64_t seed,
                                   real h = 1e-5);

}  // namespace otdr::nn
