#pragma once

#include <vector>

#include "signxfer/matrix.hpp"

namespace signxfer {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-7;
};

// Per-parameter moment estimates. Weight decay is added to the gradient
// before the moment updates (L2 coupling).
struct AdamState {
  explicit AdamState(AdamConfig config = {}) : config(config) {}

  AdamConfig config;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  long step_count = 0;
};

// One Adam update over a fixed parameter list. Moments are allocated on the
// first call; the list must keep its order and shapes across steps.
void adam_step(const std::vector<Matrix*>& params,
               const std::vector<const Matrix*>& grads, AdamState& state);

}  // namespace signxfer
