// SPDX-License-Identifier: Apache-2.0
#include "otdr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace otdr::metrics {

namespace {

real energy(const std::vector<real>& v) {
  real acc = 0.0;
  for (real x : v) acc += x * x;
  return acc;
}

real residual_energy(const std::vector<real>& a, const std::vector<real>& b) {
  require(a.size() == b.size(), "metrics: length mismatch");
  real acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const real d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

real snr_db(real sig_energy, real res_energy) {
  if (res_energy == 0.0) return std::numeric_limits<real>::infinity();
  return 10.0 * std::log10(sig_energy / res_energy);
}

real median_of(std::vector<real> v) {
  require(!v.empty(), "metrics: median of empty range");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

SnrTriple snr_metrics(const std::vector<real>& clean, const std::vector<real>& noisy,
                      const std::vector<real>& denoised) {
  require(!clean.empty(), "snr_metrics: empty input");
  const real se = energy(clean);
  require(se > 0.0, "snr_metrics: all-zero clean signal");
  SnrTriple t{};
  t.snr_in_db = snr_db(se, residual_energy(noisy, clean));
  t.snr_out_db = snr_db(se, residual_energy(denoised, clean));
  t.snr_imp_db = t.snr_out_db - t.snr_in_db;
  return t;
}

real rmse(const std::vector<real>& x, const std::vector<real>& xhat) {
  require(!x.empty(), "rmse: empty input");
  return std::sqrt(residual_energy(x, xhat) / static_cast<real>(x.size()));
}

real prd(const std::vector<real>& x, const std::vector<real>& xhat) {
  const real se = energy(x);
  require(se > 0.0, "prd: zero-energy reference");
  return 100.0 * std::sqrt(residual_energy(x, xhat) / se);
}

real reconstruction_mse(const std::vector<real>& x, const std::vector<real>& xhat) {
  require(!x.empty(), "reconstruction_mse: empty input");
  return residual_energy(x, xhat) / static_cast<real>(x.size());
}

DenoiseMetrics denoise_metrics(const std::vector<real>& clean, const std::vector<real>& noisy,
                               const std::vector<real>& denoised) {
  DenoiseMetrics m;
  const SnrTriple t = snr_metrics(clean, noisy, denoised);
  m.snr_in_db = t.snr_in_db;
  m.snr_out_db = t.snr_out_db;
  m.snr_imp_db = t.snr_imp_db;
  m.rmse = rmse(clean, denoised);
  m.prd_percent = prd(clean, denoised);
  m.mse = reconstruction_mse(clean, denoised);
  return m;
}

std::array<std::array<real, 4>, 4> ClassReport::row_normalized() const {
  std::array<std::array<real, 4>, 4> out{};
  for (int i = 0; i < 4; ++i) {
    std::int64_t row = 0;
    for (int j = 0; j < 4; ++j) row += confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    for (int j = 0; j < 4; ++j)
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          row ? static_cast<real>(confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) /
                    static_cast<real>(row)
              : 0.0;
  }
  return out;
}

std::int64_t ClassReport::total() const {
  std::int64_t n = 0;
  for (const auto& row : confusion)
    for (std::int64_t v : row) n += v;
  return n;
}

ClassReport classification_report(const std::vector<int>& preds, const std::vector<int>& labels) {
  require(!preds.empty() && preds.size() == labels.size(),
          "classification_report: inputs empty or mismatched");
  ClassReport r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    require(preds[i] >= 0 && preds[i] < 4 && labels[i] >= 0 && labels[i] < 4,
            "classification_report: class outside {0..3}");
    ++r.confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(preds[i])];
  }
  std::int64_t correct = 0;
  for (int i = 0; i < 4; ++i) {
    correct += r.confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    std::int64_t row = 0;
    for (int j = 0; j < 4; ++j) row += r.confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    r.per_class_recall[static_cast<std::size_t>(i)] =
        row ? static_cast<real>(r.confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)]) /
                  static_cast<real>(row)
            : 0.0;
  }
  r.accuracy = static_cast<real>(correct) / static_cast<real>(preds.size());
  return r;
}

real localization_error_m(real pred_position_norm, int true_position, real sample_spacing_m) {
  require(true_position >= 0 && true_position <= 99, "localization_error_m: sentinel position");
  return std::abs(pred_position_norm * 99.0 - static_cast<real>(true_position)) * sample_spacing_m;
}

real fwhm_resolution_m(const std::vector<real>& window, real sample_spacing_m) {
  const auto n = static_cast<std::int64_t>(window.size());
  require(n >= 5, "fwhm: window too short");
  std::int64_t m = 0;
  for (std::int64_t i = 1; i < n; ++i)
    if (window[static_cast<std::size_t>(i)] > window[static_cast<std::size_t>(m)]) m = i;
  const real peak = window[static_cast<std::size_t>(m)];

  // first-pass candidate region from the coarse half level
  const real vmin = *std::min_element(window.begin(), window.end());
  const real coarse = vmin + 0.5 * (peak - vmin);
  std::int64_t l0 = m, r0 = m;
  while (l0 > 0 && window[static_cast<std::size_t>(l0 - 1)] > coarse) --l0;
  while (r0 < n - 1 && window[static_cast<std::size_t>(r0 + 1)] > coarse) ++r0;

  const std::int64_t pad = (r0 - l0) + 2;
  std::vector<real> outside;
  for (std::int64_t i = 0; i < n; ++i)
    if (i < l0 - pad || i > r0 + pad) outside.push_back(window[static_cast<std::size_t>(i)]);
  require(!outside.empty(), "fwhm: no baseline samples outside the peak region");
  const real baseline = median_of(std::move(outside));
  require(peak > baseline, "fwhm: no peak above baseline");
  const real half = baseline + 0.5 * (peak - baseline);

  // interpolated crossings
  std::int64_t li = m;
  while (li > 0 && window[static_cast<std::size_t>(li)] > half) --li;
  require(window[static_cast<std::size_t>(li)] <= half, "fwhm: no left half crossing");
  const real la = window[static_cast<std::size_t>(li)];
  const real lb = window[static_cast<std::size_t>(li + 1)];
  const real xl = static_cast<real>(li) + (half - la) / (lb - la);

  std::int64_t ri = m;
  while (ri < n - 1 && window[static_cast<std::size_t>(ri)] > half) ++ri;
  require(window[static_cast<std::size_t>(ri)] <= half, "fwhm: no right half crossing");
  const real ra = window[static_cast<std::size_t>(ri - 1)];
  const real rb = window[static_cast<std::size_t>(ri)];
  const real xr = static_cast<real>(ri - 1) + (ra - half) / (ra - rb);

  return (xr - xl) * sample_spacing_m;
}

Aggregate aggregate(const std::vector<real>& values) {
  Aggregate a;
  a.n = values.size();
  if (values.empty()) return a;
  real s = 0.0;
  for (real v : values) s += v;
  a.mean = s / static_cast<real>(values.size());
  real s2 = 0.0;
  for (real v : values) {
    const real d = v - a.mean;
    s2 += d * d;
  }
  a.stddev = values.size() > 1 ? std::sqrt(s2 / static_cast<real>(values.size() - 1)) : 0.0;
  return a;
}

}  // namespace otdr::metrics
