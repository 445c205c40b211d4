// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include "otdr/dataset.hpp"
#include "otdr/ops.hpp"
#include "otdr/train.hpp"

namespace otdr::dcae {

using nn::Tensor;

struct DcaeArch {
  std::vector<int> encoder_filters = {64, 32, 16, 64, 32};
  std::vector<int> encoder_strides = {2, 2, 1, 1, 1};
  int kernel_size = 16;
  std::vector<int> decoder_filters = {32, 64, 16, 32, 64};
  std::vector<int> decoder_strides = {1, 1, 1, 2, 2};
  int output_kernel = 16;
  int input_len = 100;

  int depth() const {
    return static_cast<int>(encoder_filters.size() + decoder_filters.size()) + 1;
  }
  void validate() const;
  nlohmann::json to_json() const;
  static DcaeArch from_json(const nlohmann::json& j);
};

// Strided convolutional encoder, mirrored transposed-convolution decoder,
// single linear transposed-convolution output head.
class DcaeModel {
 public:
  DcaeModel(DcaeArch arch, std::uint64_t init_seed);

  Tensor forward(const Tensor& x, bool train);  // [b,1,L] -> [b,1,L]
  const DcaeArch& arch() const { return arch_; }
  std::uint64_t init_seed() const { return init_seed_; }

  std::vector<nn::Parameter*> parameters();
  std::vector<std::vector<real>*> buffers();  // batch-norm running stats
  std::vector<std::pair<std::string, std::vector<real>*>> named_buffers();

  std::int64_t parameter_count();

 private:
  struct Block {
    nn::Parameter w;
    nn::Parameter bias;
    nn::BatchNorm1d bn;
    int stride = 1;
    bool transposed = false;
  };

  DcaeArch arch_;
  std::uint64_t init_seed_;
  std::vector<Block> blocks_;
  nn::Parameter out_w_;
  nn::Parameter out_b_;
};

nn::TrainLog train_dcae(DcaeModel& model, const data::Dataset& dataset,
                        const nn::TrainOptions& opts);

// Single normalized window through the model in eval mode, clamped to [0,1].
std::vector<real> denoise_window(DcaeModel& model, const std::vector<real>& noisy);

// Batched variant used by evaluation loops.
std::vector<std::vector<real>> denoise_windows(DcaeModel& model,
                                               const std::vector<std::vector<real>>& noisy);

// Windows the trace, normalizes per window (the window's own min/max; no
// clean reference exists at inference), denoises, de-normalizes and stitches
// with uniform overlap averaging. The tail is covered by a right-aligned
// final window.
sim::Trace denoise_trace(DcaeModel& model, const sim::Trace& trace, int stride);

struct SweepPoint {
  int depth = 11;
  int kernel_size = 16;
  int input_len = 100;
};

struct SweepRow {
  SweepPoint point;
  bool valid = false;
  std::string note;
  real val_mse = 0.0;
  real test_mse = 0.0;
};

struct SweepGrid {
  std::vector<int> depths;
  std::vector<int> kernel_sizes;
  std::vector<int> input_lens;
};

struct SweepReport {
  std::vector<SweepRow> rows;
};

DcaeArch make_arch(const SweepPoint& p);

// Trains one model per grid point on identically-seeded data. The builder
// returns a dataset for a given window length (cached by the caller).
SweepReport sweep_hyperparams(const SweepGrid& grid,
                              const std::function<const data::Dataset&(int)>& dataset_builder,
                              const nn::TrainOptions& opts);

real dataset_mse(DcaeModel& model, const data::Dataset& ds, data::Partition part,
                 std::size_t limit = 0);

}  // namespace otdr::dcae
