#pragma once

#include <string>
#include <vector>

#include "signxfer/matrix.hpp"
#include "signxfer/rng.hpp"

namespace signxfer {

// Named view over a trainable matrix; the order of a model's ParamRef list
// fixes the gradient/optimizer-state order and the checkpoint layout.
struct ParamRef {
  std::string name;
  Matrix* matrix;
};

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) with fan_in = rows.
Matrix uniform_init(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace signxfer
