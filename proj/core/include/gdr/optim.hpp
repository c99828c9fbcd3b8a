#pragma once

#include <map>
#include <string>
#include <vector>

#include "gdr/store.hpp"

namespace gdr {

struct AdamState {
  std::size_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  double base_lr = 1.0;
  // Moment buffers keyed by parameter name, allocated on first use.
  std::map<std::string, std::vector<double>> first_moment;
  std::map<std::string, std::vector<double>> second_moment;
};

// One bias-corrected Adam update over every trainable tensor in the store.
// Requires a populated, finite gradient on each; gradients are cleared and
// step_count is incremented afterwards. The effective step size is
// state.base_lr * lr.
void adam_step(ParameterStore& store, AdamState& state, double lr);

// Inverse-square-root schedule with linear warm-up:
// hidden^-0.5 * min(step^-0.5, step * warmup^-1.5). step must be >= 1.
double lr_schedule(std::size_t step, std::size_t warmup, std::size_t hidden);

}  // namespace gdr
