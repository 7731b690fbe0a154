#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcnseg/tensor.hpp"

namespace tcnseg {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates, one tensor per parameter, in the same order
// as the parameter list handed to adam_step. Zero-initialized.
struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;

  static AdamState init_like(const std::vector<const Tensor*>& params);
};

// One Adam update over every (parameter, gradient) pair. Entries whose name
// appears in `frozen` keep their value and moments untouched. Throws
// TrainingError naming the parameter on a non-finite gradient.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               const std::vector<std::string>& names, AdamState& state,
               const AdamConfig& config, const std::vector<std::string>& frozen = {});

}  // namespace tcnseg
