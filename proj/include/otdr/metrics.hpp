// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "otdr/common.hpp"

namespace otdr::metrics {

struct DenoiseMetrics {
  real snr_in_db = 0.0;
  real snr_out_db = 0.0;
  real snr_imp_db = 0.0;
  real rmse = 0.0;
  real prd_percent = 0.0;
  real mse = 0.0;
};

struct SnrTriple {
  real snr_in_db;
  real snr_out_db;
  real snr_imp_db;
};

// 10*log10(sum x^2 / sum residual^2); zero residual yields +inf.
SnrTriple snr_metrics(const std::vector<real>& clean, const std::vector<real>& noisy,
                      const std::vector<real>& denoised);

real rmse(const std::vector<real>& x, const std::vector<real>& xhat);
real prd(const std::vector<real>& x, const std::vector<real>& xhat);  // percent
real reconstruction_mse(const std::vector<real>& x, const std::vector<real>& xhat);

DenoiseMetrics denoise_metrics(const std::vector<real>& clean, const std::vector<real>& noisy,
                               const std::vector<real>& denoised);

struct ClassReport {
  std::array<std::array<std::int64_t, 4>, 4> confusion{};  // [true][predicted]
  real accuracy = 0.0;
  std::array<real, 4> per_class_recall{};

  std::array<std::array<real, 4>, 4> row_normalized() const;
  std::int64_t total() const;
};

ClassReport classification_report(const std::vector<int>& preds, const std::vector<int>& labels);

// |pred*99 - true_index| * spacing, in meters.
real localization_error_m(real pred_position_norm, int true_position, real sample_spacing_m);

// Width of the unique peak at half of (peak - baseline); baseline is the
// median outside the candidate peak region; crossings linearly interpolated.
real fwhm_resolution_m(const std::vector<real>& window, real sample_spacing_m);

struct Aggregate {
  real mean = 0.0;
  real stddev = 0.0;
  std::size_t n = 0;
};

Aggregate aggregate(const std::vector<real>& values);

}  // namespace otdr::metrics
