#include "gdr/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "gdr/error.hpp"

namespace gdr {

void adam_step(ParameterStore& store, AdamState& state, double lr) {
  // Validate every gradient before touching any parameter, so a failed step
  // leaves the store unchanged.
  for (const auto& [name, param] : store.entries()) {
    if (!param.requires_grad) continue;
    if (!param.grad) {
      throw std::invalid_argument("adam_step: parameter '" + name + "' has no gradient");
    }
    for (double g : *param.grad) {
      if (!std::isfinite(g)) {
        throw NumericError("adam_step: non-finite gradient in '" + name + "'");
      }
    }
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  const double step_size = state.base_lr * lr;

  for (const auto& [name, param] : store.entries()) {
    if (!param.requires_grad) continue;
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.empty()) m.assign(param.size(), 0.0);
    if (v.empty()) v.assign(param.size(), 0.0);
    if (m.size() != param.size() || v.size() != param.size()) {
      throw std::invalid_argument("adam_step: moment shape mismatch for '" + name + "'");
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double g = (*param.grad)[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      (*param.data)[i] -= step_size * m_hat / (std::sqrt(v_hat) + state.eps);
    }
    for (double& g : *param.grad) g = 0.0;
  }
}

double lr_schedule(std::size_t step, std::size_t warmup, std::size_t hidden) {
  if (step == 0) throw std::invalid_argument("lr_schedule: step must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  const double decay = 1.0 / std::sqrt(s);
  const double ramp = s / (w * std::sqrt(w));
  return (1.0 / std::sqrt(static_cast<double>(hidden))) * std::min(decay, ramp);
}

}  // namespace gdr
