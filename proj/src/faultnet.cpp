// SPDX-License-Identifier: Apache-2.0
#include "otdr/faultnet.hpp"

#include <algorithm>
#include <cmath>

namespace otdr::faultnet {

nlohmann::json FaultNetArch::to_json() const {
  return {{"hidden", hidden},         {"type_head", type_head}, {"pos_head", pos_head},
          {"cause_head", cause_head}, {"n_types", n_types},     {"n_causes", n_causes},
          {"input_len", input_len}};
}

FaultNetArch FaultNetArch::from_json(const nlohmann::json& j) {
  FaultNetArch a;
  a.hidden = j.at("hidden").get<int>();
  a.type_head = j.at("type_head").get<int>();
  a.pos_head = j.at("pos_head").get<int>();
  a.cause_head = j.at("cause_head").get<int>();
  a.n_types = j.at("n_types").get<int>();
  a.n_causes = j.at("n_causes").get<int>();
  a.input_len = j.at("input_len").get<int>();
  return a;
}

int FaultPrediction::predicted_type() const {
  return static_cast<int>(std::max_element(type_probs.begin(), type_probs.end()) -
                          type_probs.begin());
}

int FaultPrediction::predicted_cause() const {
  return static_cast<int>(std::max_element(cause_probs.begin(), cause_probs.end()) -
                          cause_probs.begin());
}

LstmState lstm_cell_step(const Tensor& x_t, const LstmState& state, const LstmWeights& w) {
  const int h = w.hidden;
  require(state.h.dim(1) == h && state.c.dim(1) == h, "lstm_cell_step: state width mismatch");
  require(x_t.dim(0) == state.h.dim(0), "lstm_cell_step: batch mismatch");

  Tensor zero_bias = Tensor::zeros({4 * h});
  Tensor gates = nn::add(nn::dense(x_t, w.w_x.value, w.bias.value),
                         nn::dense(state.h, w.w_h.value, zero_bias));
  Tensor f = nn::sigmoid(nn::slice_cols(gates, 0, h));
  Tensor i = nn::sigmoid(nn::slice_cols(gates, h, h));
  Tensor g = nn::tanh_act(nn::slice_cols(gates, 2 * h, h));
  Tensor o = nn::sigmoid(nn::slice_cols(gates, 3 * h, h));

  LstmState next;
  next.c = nn::add(nn::mul(f, state.c), nn::mul(i, g));
  next.h = nn::mul(o, nn::tanh_act(next.c));
  return next;
}

namespace {

LstmState zero_state(int batch, int hidden) {
  return {Tensor::zeros({batch, hidden}), Tensor::zeros({batch, hidden})};
}

// per-step outputs of one directional scan; time order matches the input axis
std::vector<Tensor> scan(const Tensor& x, const LstmWeights& w, bool reverse) {
  const int b = x.dim(0), T = x.dim(1);
  std::vector<Tensor> hs(static_cast<std::size_t>(T));
  LstmState st = zero_state(b, w.hidden);
  for (int step = 0; step < T; ++step) {
    const int t = reverse ? T - 1 - step : step;
    Tensor x_t = nn::slice_cols(x, t, 1);
    st = lstm_cell_step(x_t, st, w);
    hs[static_cast<std::size_t>(t)] = st.h;
  }
  return hs;
}

}  // namespace

Tensor bilstm_forward(const Tensor& x, const LstmWeights& fwd, const LstmWeights& bwd) {
  require(x.shape().size() == 2, "bilstm_forward: expects [b,T]");
  auto hf = scan(x, fwd, false);
  auto hb = scan(x, bwd, true);
  std::vector<Tensor> steps(hf.size());
  for (std::size_t t = 0; t < hf.size(); ++t) steps[t] = nn::concat_cols(hf[t], hb[t]);
  return nn::stack_steps(steps);
}

namespace {

Parameter make_dense_w(const std::string& name, int rows, int cols, Rng& rng) {
  Tensor t = Tensor::zeros({rows, cols});
  const real a = std::sqrt(1.0 / static_cast<real>(cols));
  nn::fill_uniform(t, rng, -a, a);
  return Parameter(name, std::move(t));
}

LstmWeights make_lstm(const std::string& prefix, int in, int hidden, Rng& rng) {
  LstmWeights w;
  w.hidden = hidden;
  w.w_x = make_dense_w(prefix + ".w_x", 4 * hidden, in, rng);
  w.w_h = make_dense_w(prefix + ".w_h", 4 * hidden, hidden, rng);
  Tensor b = Tensor::zeros({4 * hidden});
  // forget-gate bias starts open so long-range structure survives early training
  for (int i = 0; i < hidden; ++i) b.data()[i] = 1.0;
  w.bias = Parameter(prefix + ".b", std::move(b));
  return w;
}

}  // namespace

FaultNetModel::FaultNetModel(FaultNetArch arch, std::uint64_t init_seed)
    : arch_(arch), init_seed_(init_seed) {
  Rng rng = Rng::child(init_seed, 0xFA017);
  fwd_ = make_lstm("fwd", 1, arch_.hidden, rng);
  bwd_ = make_lstm("bwd", 1, arch_.hidden, rng);
  const int shared = 2 * arch_.hidden;
  type_w1_ = make_dense_w("type.w1", arch_.type_head, shared, rng);
  type_b1_ = Parameter("type.b1", Tensor::zeros({arch_.type_head}));
  type_w2_ = make_dense_w("type.w2", arch_.n_types, arch_.type_head, rng);
  type_b2_ = Parameter("type.b2", Tensor::zeros({arch_.n_types}));
  pos_w1_ = make_dense_w("pos.w1", arch_.pos_head, shared, rng);
  pos_b1_ = Parameter("pos.b1", Tensor::zeros({arch_.pos_head}));
  pos_w2_ = make_dense_w("pos.w2", 1, arch_.pos_head, rng);
  pos_b2_ = Parameter("pos.b2", Tensor::zeros({1}));
  cause_w1_ = make_dense_w("cause.w1", arch_.cause_head, shared, rng);
  cause_b1_ = Parameter("cause.b1", Tensor::zeros({arch_.cause_head}));
  cause_w2_ = make_dense_w("cause.w2", arch_.n_causes, arch_.cause_head, rng);
  cause_b2_ = Parameter("cause.b2", Tensor::zeros({arch_.n_causes}));
}

FaultNetModel::Output FaultNetModel::forward(const Tensor& x, bool /*train*/) {
  require(x.shape().size() == 2 && x.dim(1) == arch_.input_len,
          "faultnet: expects [b," + std::to_string(arch_.input_len) + "] input");
  const int T = arch_.input_len;

  auto hf = scan(x, fwd_, false);
  auto hb = scan(x, bwd_, true);
  // summary = final forward state and final backward state (its output at t=0)
  Tensor shared = nn::concat_cols(hf[static_cast<std::size_t>(T - 1)], hb[0]);

  Output out;
  out.shared = shared;
  Tensor th = nn::elu(nn::dense(shared, type_w1_.value, type_b1_.value));
  out.type_logits = nn::dense(th, type_w2_.value, type_b2_.value);
  Tensor ph = nn::elu(nn::dense(shared, pos_w1_.value, pos_b1_.value));
  out.pos_norm = nn::sigmoid(nn::dense(ph, pos_w2_.value, pos_b2_.value));
  Tensor ch = nn::elu(nn::dense(shared, cause_w1_.value, cause_b1_.value));
  out.cause_logits = nn::dense(ch, cause_w2_.value, cause_b2_.value);
  return out;
}

FaultPrediction FaultNetModel::predict(const std::vector<real>& window) {
  auto preds = predict_batch({window});
  return preds[0];
}

std::vector<FaultPrediction> FaultNetModel::predict_batch(
    const std::vector<std::vector<real>>& windows) {
  nn::NoGradGuard ng;
  std::vector<FaultPrediction> out(windows.size());
  const int len = arch_.input_len;
  const std::size_t chunk = 256;
  for (std::size_t base = 0; base < windows.size(); base += chunk) {
    const std::size_t n = std::min(chunk, windows.size() - base);
    Tensor x = Tensor::zeros({static_cast<int>(n), len});
    for (std::size_t i = 0; i < n; ++i) {
      require(static_cast<int>(windows[base + i].size()) == len, "predict: wrong window length");
      std::copy(windows[base + i].begin(), windows[base + i].end(),
                x.data() + i * static_cast<std::size_t>(len));
    }
    Output o = forward(x, false);
    for (std::size_t i = 0; i < n; ++i) {
      FaultPrediction p;
      auto tp = nn::softmax_probs(o.type_logits, static_cast<int>(i));
      auto cp = nn::softmax_probs(o.cause_logits, static_cast<int>(i));
      std::copy(tp.begin(), tp.end(), p.type_probs.begin());
      std::copy(cp.begin(), cp.end(), p.cause_probs.begin());
      p.position_norm = o.pos_norm.data()[i];
      out[base + i] = p;
    }
  }
  return out;
}

std::vector<Parameter*> FaultNetModel::parameters() {
  return {&fwd_.w_x,  &fwd_.w_h,  &fwd_.bias, &bwd_.w_x,   &bwd_.w_h,   &bwd_.bias,
          &type_w1_,  &type_b1_,  &type_w2_,  &type_b2_,   &pos_w1_,    &pos_b1_,
          &pos_w2_,   &pos_b2_,   &cause_w1_, &cause_b1_,  &cause_w2_,  &cause_b2_};
}

Tensor multitask_loss(const FaultNetModel::Output& out, const FaultLabels& labels,
                      const LossWeights& lw) {
  require(lw.detection >= 0 && lw.localization >= 0 && lw.diagnosis >= 0,
          "multitask_loss: weights must be non-negative");
  const int b = out.type_logits.dim(0);
  require(static_cast<int>(labels.types.size()) == b &&
              static_cast<int>(labels.positions.size()) == b &&
              static_cast<int>(labels.causes.size()) == b,
          "multitask_loss: label count mismatch");

  Tensor pos_target = Tensor::zeros({b, 1});
  Tensor pos_mask = Tensor::zeros({b, 1});
  for (int i = 0; i < b; ++i) {
    const bool no_event = labels.types[static_cast<std::size_t>(i)] == 0;
    const int pos = labels.positions[static_cast<std::size_t>(i)];
    if (no_event) {
      require(pos == sim::kPositionSentinel,
              "multitask_loss: no-event label with a concrete position");
      continue;
    }
    require(pos >= 0 && pos <= 99, "multitask_loss: position outside the window");
    pos_target.data()[i] = static_cast<real>(pos) / 99.0;
    pos_mask.data()[i] = 1.0;
  }

  Tensor l_type = nn::softmax_cross_entropy(out.type_logits, labels.types);
  Tensor diff = nn::sub(out.pos_norm, pos_target);
  Tensor l_pos = nn::mean(nn::mul(pos_mask, nn::mul(diff, diff)));
  Tensor l_cause = nn::softmax_cross_entropy(out.cause_logits, labels.causes);

  return nn::add(nn::add(nn::scale(l_type, lw.detection), nn::scale(l_pos, lw.localization)),
                 nn::scale(l_cause, lw.diagnosis));
}

nn::TrainLog train_faultnet(FaultNetModel& model, const data::Dataset& dataset,
                            const FaultTrainOptions& opts) {
  require(dataset.kind.rfind("fault", 0) == 0,
          "train_faultnet: expects a fault dataset (corrupted clean or explicitly "
          "noisy-labeled inputs)");
  auto params = model.parameters();
  std::vector<std::vector<real>*> buffers;  // stateless besides parameters

  const auto& train_span = dataset.part(data::Partition::Train);
  const auto& val_span = dataset.part(data::Partition::Val);
  const int len = dataset.seq_len;

  auto batch_loss = [&](std::span<const std::size_t> idx, bool train) {
    const data::Partition part = train ? data::Partition::Train : data::Partition::Val;
    const data::Span& span = dataset.part(part);
    Tensor x = Tensor::zeros({static_cast<int>(idx.size()), len});
    FaultLabels labels;
    labels.types.resize(idx.size());
    labels.positions.resize(idx.size());
    labels.causes.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const data::Record& r = dataset.records[span.offset + idx[i]];
      for (int j = 0; j < len; ++j)
        x.data()[i * static_cast<std::size_t>(len) + static_cast<std::size_t>(j)] =
            r.input[static_cast<std::size_t>(j)];
      labels.types[i] = r.e_t;
      labels.positions[i] = r.e_p;
      labels.causes[i] = r.e_c;
    }
    auto out = model.forward(x, train);
    return multitask_loss(out, labels, opts.loss_weights);
  };
  return nn::run_training(params, buffers, train_span.count, val_span.count, batch_loss, opts);
}

std::vector<WindowFinding> analyze_trace(dcae::DcaeModel* denoiser, FaultNetModel& model,
                                         const sim::Trace& noisy_trace) {
  const int len = model.arch().input_len;
  require(static_cast<int>(noisy_trace.samples.size()) >= len,
          "analyze_trace: trace shorter than one window");

  const auto n = static_cast<std::int64_t>(noisy_trace.samples.size());
  std::vector<std::int64_t> starts;
  for (std::int64_t s = 0; s + len <= n; s += len) starts.push_back(s);

  std::vector<std::vector<real>> windows(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    auto first = noisy_trace.samples.begin() + starts[i];
    std::vector<real> w(first, first + len);
    const real lo = *std::min_element(w.begin(), w.end());
    const real hi = *std::max_element(w.begin(), w.end());
    windows[i] = sim::normalize_sequence(w, lo, hi).values;
  }
  if (denoiser) windows = dcae::denoise_windows(*denoiser, windows);
  auto preds = model.predict_batch(windows);

  std::vector<WindowFinding> findings;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].predicted_type() == 0) continue;  // no event
    WindowFinding f;
    f.window_index = static_cast<int>(i);
    f.prediction = preds[i];
    f.position_m = (static_cast<real>(starts[i]) + preds[i].position_norm * 99.0) *
                   noisy_trace.sample_spacing_m;
    findings.push_back(f);
  }
  return findings;
}

std::vector<std::vector<real>> export_shared_features(FaultNetModel& model,
                                                      const std::vector<std::vector<real>>& seqs) {
  nn::NoGradGuard ng;
  std::vector<std::vector<real>> out(seqs.size());
  const int len = model.arch().input_len;
  const std::size_t chunk = 256;
  for (std::size_t base = 0; base < seqs.size(); base += chunk) {
    const std::size_t n = std::min(chunk, seqs.size() - base);
    Tensor x = Tensor::zeros({static_cast<int>(n), len});
    for (std::size_t i = 0; i < n; ++i)
      std::copy(seqs[base + i].begin(), seqs[base + i].end(),
                x.data() + i * static_cast<std::size_t>(len));
    auto o = model.forward(x, false);
    const int f = o.shared.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
      out[base + i].assign(o.shared.data() + i * static_cast<std::size_t>(f),
                           o.shared.data() + (i + 1) * static_cast<std::size_t>(f));
    }
  }
  return out;
}

}  // namespace otdr::faultnet
