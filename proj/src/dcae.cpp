// SPDX-License-Identifier: Apache-2.0
#include "otdr/dcae.hpp"

#include <algorithm>
#include <cmath>

namespace otdr::dcae {

using nn::BatchNorm1d;
using nn::Parameter;

void DcaeArch::validate() const {
  require(!encoder_filters.empty() && encoder_filters.size() == encoder_strides.size(),
          "dcae: encoder filters/strides mismatch");
  require(!decoder_filters.empty() && decoder_filters.size() == decoder_strides.size(),
          "dcae: decoder filters/strides mismatch");
  require(kernel_size >= 1 && output_kernel >= 1 && input_len >= 4, "dcae: bad sizes");
  int enc_prod = 1, dec_prod = 1;
  for (int s : encoder_strides) enc_prod *= s;
  for (int s : decoder_strides) dec_prod *= s;
  require(enc_prod == dec_prod,
          "dcae: encoder and decoder stride products must match so output length equals input");
  int len = input_len;
  for (int s : encoder_strides) len = nn::conv_out_len(len, s);
  for (int s : decoder_strides) len *= s;
  require(len == input_len, "dcae: stride bookkeeping does not restore the input length");
}

nlohmann::json DcaeArch::to_json() const {
  return {{"encoder_filters", encoder_filters}, {"encoder_strides", encoder_strides},
          {"kernel_size", kernel_size},         {"decoder_filters", decoder_filters},
          {"decoder_strides", decoder_strides}, {"output_kernel", output_kernel},
          {"input_len", input_len}};
}

DcaeArch DcaeArch::from_json(const nlohmann::json& j) {
  DcaeArch a;
  a.encoder_filters = j.at("encoder_filters").get<std::vector<int>>();
  a.encoder_strides = j.at("encoder_strides").get<std::vector<int>>();
  a.kernel_size = j.at("kernel_size").get<int>();
  a.decoder_filters = j.at("decoder_filters").get<std::vector<int>>();
  a.decoder_strides = j.at("decoder_strides").get<std::vector<int>>();
  a.output_kernel = j.at("output_kernel").get<int>();
  a.input_len = j.at("input_len").get<int>();
  return a;
}

namespace {

Tensor init_weight(nn::Shape shape, int fan_in, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  const real a = std::sqrt(1.0 / static_cast<real>(fan_in));
  nn::fill_uniform(t, rng, -a, a);
  return t;
}

}  // namespace

DcaeModel::DcaeModel(DcaeArch arch, std::uint64_t init_seed)
    : arch_(std::move(arch)), init_seed_(init_seed) {
  arch_.validate();
  Rng rng = Rng::child(init_seed, 0xDCAE);

  int in_ch = 1;
  for (std::size_t i = 0; i < arch_.encoder_filters.size(); ++i) {
    const int out_ch = arch_.encoder_filters[i];
    Block b;
    b.stride = arch_.encoder_strides[i];
    b.transposed = false;
    b.w = Parameter("enc" + std::to_string(i) + ".w",
                    init_weight({out_ch, in_ch, arch_.kernel_size}, in_ch * arch_.kernel_size, rng));
    b.bias = Parameter("enc" + std::to_string(i) + ".b", Tensor::zeros({out_ch}));
    b.bn = BatchNorm1d("enc" + std::to_string(i) + ".bn", out_ch);
    blocks_.push_back(std::move(b));
    in_ch = out_ch;
  }
  for (std::size_t i = 0; i < arch_.decoder_filters.size(); ++i) {
    const int out_ch = arch_.decoder_filters[i];
    Block b;
    b.stride = arch_.decoder_strides[i];
    b.transposed = true;
    b.w = Parameter("dec" + std::to_string(i) + ".w",
                    init_weight({in_ch, out_ch, arch_.kernel_size}, in_ch * arch_.kernel_size, rng));
    b.bias = Parameter("dec" + std::to_string(i) + ".b", Tensor::zeros({out_ch}));
    b.bn = BatchNorm1d("dec" + std::to_string(i) + ".bn", out_ch);
    blocks_.push_back(std::move(b));
    in_ch = out_ch;
  }
  out_w_ = Parameter("out.w", init_weight({in_ch, 1, arch_.output_kernel},
                                          in_ch * arch_.output_kernel, rng));
  out_b_ = Parameter("out.b", Tensor::zeros({1}));
}

Tensor DcaeModel::forward(const Tensor& x, bool train) {
  require(x.shape().size() == 3 && x.dim(1) == 1 && x.dim(2) == arch_.input_len,
          "dcae: expects [b,1," + std::to_string(arch_.input_len) + "] input");
  Tensor h = x;
  for (auto& b : blocks_) {
    h = b.transposed ? nn::conv1d_transpose(h, b.w.value, b.bias.value, b.stride)
                     : nn::conv1d(h, b.w.value, b.bias.value, b.stride);
    h = b.bn.forward(h, train);
    h = nn::elu(h);
  }
  // output layer: single transposed filter, stride 1, no activation
  return nn::conv1d_transpose(h, out_w_.value, out_b_.value, 1);
}

std::vector<Parameter*> DcaeModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& b : blocks_) {
    out.push_back(&b.w);
    out.push_back(&b.bias);
    out.push_back(&b.bn.gamma);
    out.push_back(&b.bn.beta);
  }
  out.push_back(&out_w_);
  out.push_back(&out_b_);
  return out;
}

std::vector<std::vector<real>*> DcaeModel::buffers() {
  std::vector<std::vector<real>*> out;
  for (auto& b : blocks_) {
    out.push_back(&b.bn.running_mean);
    out.push_back(&b.bn.running_var);
  }
  return out;
}

std::vector<std::pair<std::string, std::vector<real>*>> DcaeModel::named_buffers() {
  std::vector<std::pair<std::string, std::vector<real>*>> out;
  for (auto& b : blocks_) {
    out.emplace_back(b.bn.gamma.name.substr(0, b.bn.gamma.name.size() - 6) + ".running_mean",
                     &b.bn.running_mean);
    out.emplace_back(b.bn.gamma.name.substr(0, b.bn.gamma.name.size() - 6) + ".running_var",
                     &b.bn.running_var);
  }
  return out;
}

std::int64_t DcaeModel::parameter_count() {
  std::int64_t n = 0;
  for (auto* p : parameters()) n += p->value.numel();
  return n;
}

namespace {

Tensor batch_from_records(const data::Dataset& ds, data::Partition part,
                          std::span<const std::size_t> idx, bool input_side) {
  const data::Span& span = ds.part(part);
  const int len = ds.seq_len;
  Tensor t = Tensor::zeros({static_cast<int>(idx.size()), 1, len});
  real* p = t.data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const data::Record& r = ds.records[span.offset + idx[i]];
    const std::vector<float>& src = input_side ? r.input : r.target;
    for (int j = 0; j < len; ++j) p[i * static_cast<std::size_t>(len) + static_cast<std::size_t>(j)] = src[static_cast<std::size_t>(j)];
  }
  return t;
}

}  // namespace

nn::TrainLog train_dcae(DcaeModel& model, const data::Dataset& dataset,
                        const nn::TrainOptions& opts) {
  auto params = model.parameters();
  auto buffers = model.buffers();
  const auto& train_span = dataset.part(data::Partition::Train);
  const auto& val_span = dataset.part(data::Partition::Val);

  auto batch_loss = [&](std::span<const std::size_t> idx, bool train) {
    const data::Partition part = train ? data::Partition::Train : data::Partition::Val;
    Tensor x = batch_from_records(dataset, part, idx, true);
    Tensor target = batch_from_records(dataset, part, idx, false);
    Tensor pred = model.forward(x, train);
    return nn::mse_loss(pred, target);
  };
  return nn::run_training(params, buffers, train_span.count, val_span.count, batch_loss, opts);
}

std::vector<real> denoise_window(DcaeModel& model, const std::vector<real>& noisy) {
  require(static_cast<int>(noisy.size()) == model.arch().input_len,
          "denoise_window: wrong window length");
  nn::NoGradGuard ng;
  Tensor x = Tensor::zeros({1, 1, model.arch().input_len});
  std::copy(noisy.begin(), noisy.end(), x.data());
  Tensor y = model.forward(x, false);
  std::vector<real> out(noisy.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(y.data()[i], 0.0, 1.0);
  return out;
}

std::vector<std::vector<real>> denoise_windows(DcaeModel& model,
                                               const std::vector<std::vector<real>>& noisy) {
  nn::NoGradGuard ng;
  const int len = model.arch().input_len;
  std::vector<std::vector<real>> out(noisy.size());
  const std::size_t chunk = 256;
  for (std::size_t base = 0; base < noisy.size(); base += chunk) {
    const std::size_t n = std::min(chunk, noisy.size() - base);
    Tensor x = Tensor::zeros({static_cast<int>(n), 1, len});
    for (std::size_t i = 0; i < n; ++i) {
      require(static_cast<int>(noisy[base + i].size()) == len, "denoise_windows: wrong length");
      std::copy(noisy[base + i].begin(), noisy[base + i].end(),
                x.data() + i * static_cast<std::size_t>(len));
    }
    Tensor y = model.forward(x, false);
    for (std::size_t i = 0; i < n; ++i) {
      out[base + i].resize(static_cast<std::size_t>(len));
      for (int j = 0; j < len; ++j)
        out[base + i][static_cast<std::size_t>(j)] =
            std::clamp(y.data()[i * static_cast<std::size_t>(len) + static_cast<std::size_t>(j)], 0.0, 1.0);
    }
  }
  return out;
}

sim::Trace denoise_trace(DcaeModel& model, const sim::Trace& trace, int stride) {
  const int len = model.arch().input_len;
  require(static_cast<int>(trace.samples.size()) >= len,
          "denoise_trace: trace shorter than one window");
  require(stride >= 1 && stride <= len, "denoise_trace: stride must be in [1, window]");

  const auto n = static_cast<std::int64_t>(trace.samples.size());
  std::vector<std::int64_t> starts;
  for (std::int64_t s = 0; s + len <= n; s += stride) starts.push_back(s);
  if (starts.empty() || starts.back() + len < n) starts.push_back(n - len);  // right-aligned tail

  std::vector<std::vector<real>> windows(starts.size());
  std::vector<std::pair<real, real>> ranges(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    auto first = trace.samples.begin() + starts[i];
    std::vector<real> w(first, first + len);
    const real lo = *std::min_element(w.begin(), w.end());
    const real hi = *std::max_element(w.begin(), w.end());
    ranges[i] = {lo, hi};
    windows[i] = sim::normalize_sequence(w, lo, hi).values;
  }
  auto denoised = denoise_windows(model, windows);

  std::vector<real> acc(trace.samples.size(), 0.0);
  std::vector<real> cnt(trace.samples.size(), 0.0);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto [lo, hi] = ranges[i];
    for (int j = 0; j < len; ++j) {
      acc[static_cast<std::size_t>(starts[i] + j)] += denoised[i][static_cast<std::size_t>(j)] * (hi - lo) + lo;
      cnt[static_cast<std::size_t>(starts[i] + j)] += 1.0;
    }
  }
  sim::Trace out = trace;
  for (std::size_t i = 0; i < acc.size(); ++i) out.samples[i] = acc[i] / cnt[i];
  out.is_clean = false;
  return out;
}

DcaeArch make_arch(const SweepPoint& p) {
  require(p.depth >= 3 && p.depth % 2 == 1, "sweep: depth must be odd and >= 3");
  DcaeArch a;
  const int half = (p.depth - 1) / 2;
  // as many stride-2 stages as both the depth and the length's divisibility allow
  int n_strided = std::min(half, 2);
  while (n_strided > 0 && p.input_len % (1 << n_strided) != 0) --n_strided;
  static const int pattern[5] = {64, 32, 16, 64, 32};
  a.encoder_filters.clear();
  a.encoder_strides.clear();
  for (int i = 0; i < half; ++i) {
    a.encoder_filters.push_back(pattern[i % 5]);
    a.encoder_strides.push_back(i < n_strided ? 2 : 1);
  }
  a.decoder_filters.clear();
  a.decoder_strides.clear();
  for (int i = 0; i < half; ++i) {
    a.decoder_filters.push_back(pattern[(half - 1 - i) % 5]);
    a.decoder_strides.push_back(i >= half - n_strided ? 2 : 1);
  }
  a.kernel_size = p.kernel_size;
  a.output_kernel = p.kernel_size;
  a.input_len = p.input_len;
  return a;
}

real dataset_mse(DcaeModel& model, const data::Dataset& ds, data::Partition part,
                 std::size_t limit) {
  nn::NoGradGuard ng;
  const data::Span& span = ds.part(part);
  const std::size_t n = limit ? std::min(limit, span.count) : span.count;
  require(n > 0, "dataset_mse: empty partition");
  real acc = 0.0;
  const std::size_t chunk = 256;
  std::vector<std::size_t> idx(chunk);
  for (std::size_t base = 0; base < n; base += chunk) {
    const std::size_t m = std::min(chunk, n - base);
    idx.resize(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = base + i;
    Tensor x = batch_from_records(ds, part, idx, true);
    Tensor t = batch_from_records(ds, part, idx, false);
    Tensor y = model.forward(x, false);
    acc += nn::mse_loss(y, t).item() * static_cast<real>(m);
  }
  return acc / static_cast<real>(n);
}

SweepReport sweep_hyperparams(const SweepGrid& grid,
                              const std::function<const data::Dataset&(int)>& dataset_builder,
                              const nn::TrainOptions& opts) {
  std::vector<SweepPoint> points;
  for (int d : grid.depths) points.push_back({d, 16, 100});
  for (int k : grid.kernel_sizes) points.push_back({11, k, 100});
  for (int l : grid.input_lens) points.push_back({11, 16, l});

  SweepReport report;
  for (const SweepPoint& p : points) {
    SweepRow row;
    row.point = p;
    try {
      DcaeArch arch = make_arch(p);
      const data::Dataset& ds = dataset_builder(p.input_len);
      DcaeModel model(arch, opts.seed);
      train_dcae(model, ds, opts);
      row.val_mse = dataset_mse(model, ds, data::Partition::Val);
      row.test_mse = dataset_mse(model, ds, data::Partition::Test);
      row.valid = true;
    } catch (const std::exception& e) {
      row.valid = false;
      row.note = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace otdr::dcae
