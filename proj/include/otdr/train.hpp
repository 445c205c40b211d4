// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>

#include "otdr/adam.hpp"
#include "otdr/tensor.hpp"

namespace otdr::nn {

struct TrainOptions {
  real lr = 1e-3;
  int batch = 64;
  int max_epochs = 30;
  int patience = 10;
  std::uint64_t seed = 1;
  std::size_t max_train = 0;  // 0 = use the whole partition
  std::size_t max_val = 0;
  real lr_decay_factor = 1.0;  // multiplied in every lr_decay_every epochs
  int lr_decay_every = 0;      // 0 disables the schedule
  bool verbose = false;
};

struct EpochLog {
  int epoch = 0;
  real train_loss = 0.0;
  real val_loss = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  int best_epoch = -1;
  real best_val_loss = 0.0;
  double seconds = 0.0;
};

// Minibatch Adam loop with early stopping on validation loss; the parameter
// and buffer state of the best validation epoch is restored before returning.
// batch_loss(indices, train) returns the scalar loss for those records; in
// train mode it must build a graph over the supplied parameters.
TrainLog run_training(std::vector<Parameter*> params,
                      std::vector<std::vector<real>*> buffers, std::size_t n_train,
                      std::size_t n_val,
                      const std::function<Tensor(std::span<const std::size_t>, bool)>& batch_loss,
                      const TrainOptions& opts);

}  // namespace otdr::nn
