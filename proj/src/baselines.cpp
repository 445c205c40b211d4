// SPDX-License-Identifier: Apache-2.0
#include "otdr/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "otdr/faultnet.hpp"

namespace otdr::baselines {

using nn::Parameter;
using nn::Tensor;

const char* to_string(RefKind k) {
  switch (k) {
    case RefKind::Dae: return "dae";
    case RefKind::Cnn: return "cnn";
    default: return "lstm";
  }
}

RefKind ref_kind_from_string(const std::string& s) {
  if (s == "dae") return RefKind::Dae;
  if (s == "cnn") return RefKind::Cnn;
  if (s == "lstm") return RefKind::Lstm;
  throw invalid_argument_error("unknown reference denoiser kind: " + s);
}

struct ReferenceDenoiser::StackedLstm {
  faultnet::LstmWeights l1, l2;
  Parameter head_w, head_b;
};

namespace {

Parameter dense_param(const std::string& name, int rows, int cols, Rng& rng) {
  Tensor t = Tensor::zeros({rows, cols});
  const real a = std::sqrt(1.0 / static_cast<real>(cols));
  nn::fill_uniform(t, rng, -a, a);
  return Parameter(name, std::move(t));
}

Parameter conv_param(const std::string& name, int co, int ci, int k, Rng& rng) {
  Tensor t = Tensor::zeros({co, ci, k});
  const real a = std::sqrt(1.0 / static_cast<real>(ci * k));
  nn::fill_uniform(t, rng, -a, a);
  return Parameter(name, std::move(t));
}

faultnet::LstmWeights lstm_weights(const std::string& prefix, int in, int hidden, Rng& rng) {
  faultnet::LstmWeights w;
  w.hidden = hidden;
  w.w_x = dense_param(prefix + ".w_x", 4 * hidden, in, rng);
  w.w_h = dense_param(prefix + ".w_h", 4 * hidden, hidden, rng);
  Tensor b = Tensor::zeros({4 * hidden});
  for (int i = 0; i < hidden; ++i) b.data()[i] = 1.0;
  w.bias = Parameter(prefix + ".b", std::move(b));
  return w;
}

}  // namespace

ReferenceDenoiser::ReferenceDenoiser(RefKind kind, int input_len, std::uint64_t seed)
    : kind_(kind), input_len_(input_len), seed_(seed) {
  Rng rng = Rng::child(seed, 0xBA5E);
  switch (kind_) {
    case RefKind::Dae: {
      const int sizes[5] = {input_len, 64, 32, 64, input_len};
      for (int i = 0; i < 4; ++i) {
        dae_w_.push_back(dense_param("dae.w" + std::to_string(i), sizes[i + 1], sizes[i], rng));
        dae_b_.emplace_back("dae.b" + std::to_string(i), Tensor::zeros({sizes[i + 1]}));
      }
      break;
    }
    case RefKind::Cnn: {
      const int chans[5] = {1, 32, 32, 16, 1};
      for (int i = 0; i < 4; ++i) {
        ConvBlock b;
        b.w = conv_param("cnn" + std::to_string(i) + ".w", chans[i + 1], chans[i], 16, rng);
        b.b = Parameter("cnn" + std::to_string(i) + ".b", Tensor::zeros({chans[i + 1]}));
        b.bn = nn::BatchNorm1d("cnn" + std::to_string(i) + ".bn", chans[i + 1]);
        b.activated = i < 3;  // linear output layer
        cnn_.push_back(std::move(b));
      }
      break;
    }
    case RefKind::Lstm: {
      lstm_ = std::make_shared<StackedLstm>();
      lstm_->l1 = lstm_weights("lstm1", 1, 64, rng);
      lstm_->l2 = lstm_weights("lstm2", 64, 64, rng);
      lstm_->head_w = dense_param("head.w", 1, 64, rng);
      lstm_->head_b = Parameter("head.b", Tensor::zeros({1}));
      break;
    }
  }
}

Tensor ReferenceDenoiser::forward(const Tensor& x, bool train) {
  require(x.shape().size() == 2 && x.dim(1) == input_len_, "reference denoiser: bad input shape");
  switch (kind_) {
    case RefKind::Dae: {
      Tensor h = x;
      for (std::size_t i = 0; i < dae_w_.size(); ++i) {
        h = nn::dense(h, dae_w_[i].value, dae_b_[i].value);
        if (i + 1 < dae_w_.size()) h = nn::elu(h);
      }
      return h;
    }
    case RefKind::Cnn: {
      Tensor h = nn::reshape(x, {x.dim(0), 1, input_len_});
      for (auto& blk : cnn_) {
        h = nn::conv1d(h, blk.w.value, blk.b.value, 1);
        if (blk.activated) {
          h = nn::elu(h);
          h = blk.bn.forward(h, train);
        }
      }
      return nn::reshape(h, {x.dim(0), input_len_});
    }
    default: {
      const int b = x.dim(0), T = input_len_;
      faultnet::LstmState s1{Tensor::zeros({b, 64}), Tensor::zeros({b, 64})};
      faultnet::LstmState s2{Tensor::zeros({b, 64}), Tensor::zeros({b, 64})};
      std::vector<Tensor> outs(static_cast<std::size_t>(T));
      for (int t = 0; t < T; ++t) {
        Tensor x_t = nn::slice_cols(x, t, 1);
        s1 = faultnet::lstm_cell_step(x_t, s1, lstm_->l1);
        s2 = faultnet::lstm_cell_step(s1.h, s2, lstm_->l2);
        outs[static_cast<std::size_t>(t)] =
            nn::dense(s2.h, lstm_->head_w.value, lstm_->head_b.value);
      }
      Tensor y = nn::stack_steps(outs);  // [b,T,1]
      return nn::reshape(y, {b, T});
    }
  }
}

std::vector<std::vector<real>> ReferenceDenoiser::denoise(
    const std::vector<std::vector<real>>& windows) {
  nn::NoGradGuard ng;
  std::vector<std::vector<real>> out(windows.size());
  const std::size_t chunk = 256;
  for (std::size_t base = 0; base < windows.size(); base += chunk) {
    const std::size_t n = std::min(chunk, windows.size() - base);
    Tensor x = Tensor::zeros({static_cast<int>(n), input_len_});
    for (std::size_t i = 0; i < n; ++i)
      std::copy(windows[base + i].begin(), windows[base + i].end(),
                x.data() + i * static_cast<std::size_t>(input_len_));
    Tensor y = forward(x, false);
    for (std::size_t i = 0; i < n; ++i) {
      out[base + i].resize(static_cast<std::size_t>(input_len_));
      for (int j = 0; j < input_len_; ++j)
        out[base + i][static_cast<std::size_t>(j)] = std::clamp(
            y.data()[i * static_cast<std::size_t>(input_len_) + static_cast<std::size_t>(j)], 0.0,
            1.0);
    }
  }
  return out;
}

std::vector<Parameter*> ReferenceDenoiser::parameters() {
  std::vector<Parameter*> out;
  switch (kind_) {
    case RefKind::Dae:
      for (std::size_t i = 0; i < dae_w_.size(); ++i) {
        out.push_back(&dae_w_[i]);
        out.push_back(&dae_b_[i]);
      }
      break;
    case RefKind::Cnn:
      for (auto& b : cnn_) {
        out.push_back(&b.w);
        out.push_back(&b.b);
        if (b.activated) {
          out.push_back(&b.bn.gamma);
          out.push_back(&b.bn.beta);
        }
      }
      break;
    case RefKind::Lstm:
      out = {&lstm_->l1.w_x, &lstm_->l1.w_h, &lstm_->l1.bias,  &lstm_->l2.w_x,
             &lstm_->l2.w_h, &lstm_->l2.bias, &lstm_->head_w, &lstm_->head_b};
      break;
  }
  return out;
}

std::vector<std::vector<real>*> ReferenceDenoiser::buffers() {
  std::vector<std::vector<real>*> out;
  if (kind_ == RefKind::Cnn)
    for (auto& b : cnn_)
      if (b.activated) {
        out.push_back(&b.bn.running_mean);
        out.push_back(&b.bn.running_var);
      }
  return out;
}

std::vector<std::pair<std::string, std::vector<real>*>> ReferenceDenoiser::named_buffers() {
  std::vector<std::pair<std::string, std::vector<real>*>> out;
  if (kind_ == RefKind::Cnn)
    for (std::size_t i = 0; i < cnn_.size(); ++i)
      if (cnn_[i].activated) {
        out.emplace_back("cnn" + std::to_string(i) + ".bn.running_mean",
                         &cnn_[i].bn.running_mean);
        out.emplace_back("cnn" + std::to_string(i) + ".bn.running_var", &cnn_[i].bn.running_var);
      }
  return out;
}

nn::TrainLog train_reference(ReferenceDenoiser& model, const data::Dataset& dataset,
                             const nn::TrainOptions& opts) {
  auto params = model.parameters();
  auto buffers = model.buffers();
  const auto& train_span = dataset.part(data::Partition::Train);
  const auto& val_span = dataset.part(data::Partition::Val);
  const int len = dataset.seq_len;

  auto fill = [&](std::span<const std::size_t> idx, data::Partition part, bool input_side) {
    const data::Span& span = dataset.part(part);
    Tensor t = Tensor::zeros({static_cast<int>(idx.size()), len});
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const data::Record& r = dataset.records[span.offset + idx[i]];
      const auto& src = input_side ? r.input : r.target;
      for (int j = 0; j < len; ++j)
        t.data()[i * static_cast<std::size_t>(len) + static_cast<std::size_t>(j)] =
            src[static_cast<std::size_t>(j)];
    }
    return t;
  };

  auto batch_loss = [&](std::span<const std::size_t> idx, bool train) {
    const data::Partition part = train ? data::Partition::Train : data::Partition::Val;
    Tensor x = fill(idx, part, true);
    Tensor target = fill(idx, part, false);
    return nn::mse_loss(model.forward(x, train), target);
  };
  return nn::run_training(params, buffers, train_span.count, val_span.count, batch_loss, opts);
}

}  // namespace otdr::baselines
