#include "signxfer/adam.hpp"

#include <cmath>

#include "signxfer/errors.hpp"

namespace signxfer {

void adam_step(const std::vector<Matrix*>& params,
               const std::vector<const Matrix*>& grads, AdamState& state) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) +
                     " params vs " + std::to_string(grads.size()) + " grads");
  }
  if (state.first_moment.empty()) {
    for (const Matrix* p : params) {
      state.first_moment.emplace_back(p->rows(), p->cols());
      state.second_moment.emplace_back(p->rows(), p->cols());
    }
  }

  const AdamConfig& cfg = state.config;
  state.step_count += 1;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));

  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = *grads[i];
    if (!p.same_shape(g) || !p.same_shape(state.first_moment[i])) {
      throw ShapeError("adam_step: shape mismatch at parameter " + std::to_string(i) +
                       ": " + p.shape_str() + " vs " + g.shape_str());
    }
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double grad = g.values()[k] + cfg.weight_decay * p.values()[k];
      m.values()[k] = cfg.beta1 * m.values()[k] + (1.0 - cfg.beta1) * grad;
      v.values()[k] = cfg.beta2 * v.values()[k] + (1.0 - cfg.beta2) * grad * grad;
      const double m_hat = m.values()[k] / bias1;
      const double v_hat = v.values()[k] / bias2;
      p.values()[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace signxfer
