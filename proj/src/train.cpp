// SPDX-License-Identifier: Apache-2.0
#include "otdr/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace otdr::nn {

TrainLog run_training(std::vector<Parameter*> params,
                      std::vector<std::vector<real>*> buffers, std::size_t n_train,
                      std::size_t n_val,
                      const std::function<Tensor(std::span<const std::size_t>, bool)>& batch_loss,
                      const TrainOptions& opts) {
  require(n_train > 0 && n_val > 0, "training needs non-empty train and val partitions");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<std::size_t> train_idx(n_train);
  std::iota(train_idx.begin(), train_idx.end(), 0);
  if (opts.max_train && opts.max_train < n_train) {
    Rng sub = Rng::child(opts.seed, 0xD000001ull);
    sub.shuffle(train_idx);
    train_idx.resize(opts.max_train);
  }
  std::vector<std::size_t> val_idx(n_val);
  std::iota(val_idx.begin(), val_idx.end(), 0);
  if (opts.max_val && opts.max_val < n_val) val_idx.resize(opts.max_val);

  Adam opt(opts.lr);
  TrainLog log;

  auto eval_val = [&] {
    NoGradGuard ng;
    real acc = 0.0;
    std::size_t seen = 0;
    for (std::size_t i = 0; i < val_idx.size(); i += static_cast<std::size_t>(opts.batch)) {
      const std::size_t hi = std::min(val_idx.size(), i + static_cast<std::size_t>(opts.batch));
      std::span<const std::size_t> span(val_idx.data() + i, hi - i);
      acc += batch_loss(span, false).item() * static_cast<real>(span.size());
      seen += span.size();
    }
    return acc / static_cast<real>(seen);
  };

  std::vector<std::vector<real>> best_params;
  std::vector<std::vector<real>> best_buffers;
  auto snapshot = [&] {
    best_params.clear();
    best_buffers.clear();
    for (Parameter* p : params) best_params.push_back(p->value.vec());
    for (auto* b : buffers) best_buffers.push_back(*b);
  };
  auto restore = [&] {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value.vec() = best_params[i];
    for (std::size_t i = 0; i < buffers.size(); ++i) *buffers[i] = best_buffers[i];
  };

  real best_val = std::numeric_limits<real>::infinity();
  int since_best = 0;

  for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
    if (opts.lr_decay_every > 0 && epoch > 0 && epoch % opts.lr_decay_every == 0)
      opt.set_lr(opt.lr() * opts.lr_decay_factor);
    Rng shuffle_rng = Rng::child(opts.seed, 0xE000000ull + static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(train_idx);

    real train_acc = 0.0;
    std::size_t seen = 0;
    for (std::size_t i = 0; i < train_idx.size(); i += static_cast<std::size_t>(opts.batch)) {
      const std::size_t hi = std::min(train_idx.size(), i + static_cast<std::size_t>(opts.batch));
      std::span<const std::size_t> span(train_idx.data() + i, hi - i);
      zero_grads(params);
      Tensor loss = batch_loss(span, true);
      const real lv = loss.item();
      if (!std::isfinite(lv))
        throw std::runtime_error("training diverged (non-finite loss); lower the learning rate");
      loss.backward();
      opt.step(params);
      train_acc += lv * static_cast<real>(span.size());
      seen += span.size();
    }

    EpochLog el;
    el.epoch = epoch;
    el.train_loss = train_acc / static_cast<real>(seen);
    el.val_loss = eval_val();
    log.epochs.push_back(el);
    if (opts.verbose)
      std::printf("  epoch %3d  train %.6f  val %.6f\n", epoch, el.train_loss, el.val_loss);

    if (el.val_loss < best_val) {
      best_val = el.val_loss;
      log.best_epoch = epoch;
      snapshot();
      since_best = 0;
    } else if (++since_best >= opts.patience) {
      break;
    }
  }

  if (log.best_epoch >= 0) restore();
  log.best_val_loss = best_val;
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

}  // namespace otdr::nn
