// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include "otdr/dataset.hpp"
#include "otdr/ops.hpp"
#include "otdr/train.hpp"

namespace otdr::baselines {

// ---- third-order Butterworth low-pass, bilinear transform with prewarping ----
struct IirFilter {
  std::vector<real> b_coeffs;  // numerator, b[0] first
  std::vector<real> a_coeffs;  // denominator, a[0] == 1
  real cutoff_norm = 0.0;      // cutoff / sampling rate, in (0, 0.5)

  // Validates normalization and stability (all poles strictly inside the
  // unit circle).
  static IirFilter from_coefficients(std::vector<real> b, std::vector<real> a, real cutoff);
};

IirFilter design_butterworth3(real cutoff_norm);

// |H(e^{j 2 pi f})| for a single pass of the filter.
real filter_gain(const IirFilter& f, real freq_norm);

// Forward-backward (zero-phase) application; output has the input's length.
std::vector<real> butterworth_lowpass(const std::vector<real>& x, const IirFilter& f);

// ---- wavelet shrinkage ----
enum class WaveletFamily { Sym2, Sym3, Sym7, Bior4_4 };
enum class BorderMode { Symmetric, Periodic };

const char* to_string(WaveletFamily f);
WaveletFamily wavelet_family_from_string(const std::string& s);

struct WaveletSpec {
  WaveletFamily family = WaveletFamily::Sym2;
  int levels = 4;
  BorderMode border = BorderMode::Symmetric;  // Periodic keeps exact Parseval

  int filter_length() const;
  int max_levels(int signal_len) const;  // floor(log2(n / (filter_len - 1)))
  void validate(int signal_len) const;
};

struct WaveletPyramid {
  std::vector<real> approx;
  std::vector<std::vector<real>> details;  // details[0] = coarsest level
  std::vector<int> level_lengths;          // input length per level, for inversion
  BorderMode border = BorderMode::Symmetric;
};

WaveletPyramid dwt(const std::vector<real>& x, const WaveletSpec& spec);
std::vector<real> idwt(const WaveletPyramid& pyr, const WaveletSpec& spec);

// Shrinks every detail coefficient toward zero by the threshold; the
// approximation band is left untouched.
void soft_threshold(WaveletPyramid& pyr, real threshold);

// Soft threshold with the universal rule sigma*sqrt(2 ln N), sigma estimated
// from the median absolute value of the finest details / 0.6745.
std::vector<real> wavelet_denoise(const std::vector<real>& x, const WaveletSpec& spec);

// ---- per-SNR parameter tuning ----
struct TunedButterworth {
  real cutoff_norm = 0.1;
  real val_rmse = 0.0;
};
struct TunedWavelet {
  WaveletFamily family = WaveletFamily::Sym2;
  int levels = 1;
  real val_rmse = 0.0;
};

using WindowPairs = std::vector<std::pair<std::vector<real>, std::vector<real>>>;  // (noisy, clean)

TunedButterworth tune_butterworth(const WindowPairs& validation);
TunedWavelet tune_wavelet(const WindowPairs& validation);

nlohmann::json tuned_to_json(const TunedButterworth& b);
nlohmann::json tuned_to_json(const TunedWavelet& w);
TunedButterworth tuned_butterworth_from_json(const nlohmann::json& j);
TunedWavelet tuned_wavelet_from_json(const nlohmann::json& j);

// ---- reference neural denoisers (fully-connected DAE, plain CNN, stacked LSTM) ----
enum class RefKind { Dae, Cnn, Lstm };
const char* to_string(RefKind k);
RefKind ref_kind_from_string(const std::string& s);

class ReferenceDenoiser {
 public:
  ReferenceDenoiser(RefKind kind, int input_len, std::uint64_t seed);

  nn::Tensor forward(const nn::Tensor& x, bool train);  // [b,len] -> [b,len]
  std::vector<std::vector<real>> denoise(const std::vector<std::vector<real>>& windows);

  RefKind kind() const { return kind_; }
  int input_len() const { return input_len_; }
  std::uint64_t init_seed() const { return seed_; }
  std::vector<nn::Parameter*> parameters();
  std::vector<std::vector<real>*> buffers();
  std::vector<std::pair<std::string, std::vector<real>*>> named_buffers();

 private:
  RefKind kind_;
  int input_len_;
  std::uint64_t seed_;

  // dae
  std::vector<nn::Parameter> dae_w_, dae_b_;
  // cnn
  struct ConvBlock {
    nn::Parameter w, b;
    nn::BatchNorm1d bn;
    bool activated = true;
  };
  std::vector<ConvBlock> cnn_;
  // lstm
  struct StackedLstm;
  std::shared_ptr<StackedLstm> lstm_;
};

nn::TrainLog train_reference(ReferenceDenoiser& model, const data::Dataset& dataset,
                             const nn::TrainOptions& opts);

}  // namespace otdr::baselines
