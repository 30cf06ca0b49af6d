#pragma once

#include <string>
#include <vector>

#include "presstyle/tensor.hpp"

namespace ptn {

// Step count plus first/second moment accumulators, one pair per parameter
// tensor, in registration order.
struct AdamState {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

// In-place bias-corrected Adam update. `names` is used only for error
// reporting on NaN gradients and may be empty.
void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, const std::vector<std::string>& names = {});

}  // namespace ptn
