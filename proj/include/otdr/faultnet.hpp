// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include "otdr/dataset.hpp"
#include "otdr/dcae.hpp"
#include "otdr/ops.hpp"
#include "otdr/train.hpp"

namespace otdr::faultnet {

using nn::Parameter;
using nn::Tensor;

struct FaultNetArch {
  int hidden = 32;  // per direction
  int type_head = 16;
  int pos_head = 20;
  int cause_head = 16;
  int n_types = 4;
  int n_causes = 4;
  int input_len = 100;

  nlohmann::json to_json() const;
  static FaultNetArch from_json(const nlohmann::json& j);
};

struct LstmState {
  Tensor h;  // [b,hidden]
  Tensor c;  // [b,hidden]
};

// Packed gate weights, rows ordered (forget, input, cell, output).
struct LstmWeights {
  Parameter w_x;  // [4h, in]
  Parameter w_h;  // [4h, h]
  Parameter bias; // [4h]
  int hidden = 0;
};

// One LSTM cell update; differentiable through all inputs and weights.
LstmState lstm_cell_step(const Tensor& x_t, const LstmState& state, const LstmWeights& w);

// Forward scan t=0..T-1 plus backward scan t=T-1..0 over x [b,T]; per-step
// outputs concatenated to [b,T,2h].
Tensor bilstm_forward(const Tensor& x, const LstmWeights& fwd, const LstmWeights& bwd);

struct FaultPrediction {
  std::array<real, 4> type_probs{};
  real position_norm = 0.0;
  std::array<real, 4> cause_probs{};

  int predicted_type() const;
  int predicted_cause() const;
  real type_confidence() const { return type_probs[static_cast<std::size_t>(predicted_type())]; }
  real cause_confidence() const { return cause_probs[static_cast<std::size_t>(predicted_cause())]; }
};

struct FaultLabels {
  std::vector<int> types;
  std::vector<int> positions;  // window index, sentinel for no-event
  std::vector<int> causes;
};

class FaultNetModel {
 public:
  FaultNetModel(FaultNetArch arch, std::uint64_t init_seed);

  struct Output {
    Tensor type_logits;  // [b,4]
    Tensor pos_norm;     // [b,1], sigmoid range
    Tensor cause_logits; // [b,4]
    Tensor shared;       // [b,2h]
  };

  Output forward(const Tensor& x, bool train = false);  // x [b,input_len]
  FaultPrediction predict(const std::vector<real>& window);
  std::vector<FaultPrediction> predict_batch(const std::vector<std::vector<real>>& windows);

  const FaultNetArch& arch() const { return arch_; }
  std::uint64_t init_seed() const { return init_seed_; }
  std::vector<Parameter*> parameters();
  LstmWeights& forward_weights() { return fwd_; }
  LstmWeights& backward_weights() { return bwd_; }

 private:
  FaultNetArch arch_;
  std::uint64_t init_seed_;
  LstmWeights fwd_, bwd_;
  Parameter type_w1_, type_b1_, type_w2_, type_b2_;
  Parameter pos_w1_, pos_b1_, pos_w2_, pos_b2_;
  Parameter cause_w1_, cause_b1_, cause_w2_, cause_b2_;
};

struct LossWeights {
  real detection = 1.0;
  real localization = 1.0;
  real diagnosis = 1.0;
};

// Weighted sum of type cross-entropy, position squared error (masked out for
// no-event rows) and cause cross-entropy.
Tensor multitask_loss(const FaultNetModel::Output& out, const FaultLabels& labels,
                      const LossWeights& lw);

struct FaultTrainOptions : nn::TrainOptions {
  LossWeights loss_weights;
};

nn::TrainLog train_faultnet(FaultNetModel& model, const data::Dataset& dataset,
                            const FaultTrainOptions& opts);

struct WindowFinding {
  int window_index = 0;
  FaultPrediction prediction;
  real position_m = 0.0;
};

// Windows the trace, optionally denoises each window with the DCAE, runs the
// fault net and reports every window whose predicted type is not no-event.
std::vector<WindowFinding> analyze_trace(dcae::DcaeModel* denoiser, FaultNetModel& model,
                                         const sim::Trace& noisy_trace);

// 2h-dim shared representation per sequence, for external embedding tools.
std::vector<std::vector<real>> export_shared_features(FaultNetModel& model,
                                                      const std::vector<std::vector<real>>& seqs);

}  // namespace otdr::faultnet
