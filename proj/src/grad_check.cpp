// SPDX-License-Identifier: Apache-2.0
#include "otdr/grad_check.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "otdr/adam.hpp"

namespace otdr::nn {

namespace {

GradCheckReport run_check(const std::function<Tensor()>& loss_fn,
                          std::vector<Parameter*>& params, real tolerance, real h,
                          const std::vector<std::vector<std::int64_t>>& element_sets) {
  GradCheckReport report;

  zero_grads(params);
  Tensor loss = loss_fn();
  loss.backward();
  std::vector<std::vector<real>> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) {
    p->value.grad();  // ensure allocated even for unused parameters
    analytic.push_back(p->value.grad_vec());
  }

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter* p = params[pi];
    real* w = p->value.data();
    for (std::int64_t i : element_sets[pi]) {
      const real saved = w[i];
      real lp, lm;
      {
        NoGradGuard ng;
        w[i] = saved + h;
        lp = loss_fn().item();
        w[i] = saved - h;
        lm = loss_fn().item();
        w[i] = saved;
      }
      const real numeric = (lp - lm) / (2.0 * h);
      const real a = analytic[pi][static_cast<std::size_t>(i)];
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        report.finite = false;
        report.max_rel_error = std::numeric_limits<real>::infinity();
        report.worst_param = p->name;
        report.worst_index = i;
        report.passed = false;
        return report;
      }
      const real scale = std::max(std::abs(a), std::abs(numeric));
      if (scale < 1e-8) continue;  // both effectively zero
      const real rel = std::abs(a - numeric) / scale;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = p->name;
        report.worst_index = i;
      }
    }
  }
  report.passed = report.finite && report.max_rel_error < tolerance;
  return report;
}

}  // namespace

GradCheckReport grad_check(const std::function<Tensor()>& loss_fn,
                           std::vector<Parameter*> params, real tolerance, real h) {
  std::vector<std::vector<std::int64_t>> sets(params.size());
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    sets[pi].resize(static_cast<std::size_t>(params[pi]->value.numel()));
    std::iota(sets[pi].begin(), sets[pi].end(), 0);
  }
  return run_check(loss_fn, params, tolerance, h, sets);
}

GradCheckReport grad_check_sampled(const std::function<Tensor()>& loss_fn,
                                   std::vector<Parameter*> params, real tolerance,
                                   std::int64_t elems_per_param, std::uint64_t seed, real h) {
  Rng rng(seed);
  std::vector<std::vector<std::int64_t>> sets(params.size());
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const std::int64_t n = params[pi]->value.numel();
    if (n <= elems_per_param) {
      sets[pi].resize(static_cast<std::size_t>(n));
      std::iota(sets[pi].begin(), sets[pi].end(), 0);
    } else {
      std::vector<std::int64_t> all(static_cast<std::size_t>(n));
      std::iota(all.begin(), all.end(), 0);
      rng.shuffle(all);
      sets[pi].assign(all.begin(), all.begin() + elems_per_param);
    }
  }
  return run_check(loss_fn, params, tolerance, h, sets);
}

}  // namespace otdr::nn
