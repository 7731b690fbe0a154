#include "tcnseg/optim.hpp"

#include <algorithm>
#include <cmath>

#include "tcnseg/error.hpp"

namespace tcnseg {

AdamState AdamState::init_like(const std::vector<const Tensor*>& params) {
  AdamState state;
  state.first_moment.reserve(params.size());
  state.second_moment.reserve(params.size());
  for (const Tensor* p : params) {
    state.first_moment.push_back(Tensor::zeros_like(*p));
    state.second_moment.push_back(Tensor::zeros_like(*p));
  }
  return state;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               const std::vector<std::string>& names, AdamState& state,
               const AdamConfig& config, const std::vector<std::string>& frozen) {
  if (params.size() != grads.size() || params.size() != names.size() ||
      params.size() != state.first_moment.size()) {
    throw DomainError("adam_step: parameter, gradient and state lists disagree");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    if (std::find(frozen.begin(), frozen.end(), names[i]) != frozen.end()) continue;
    Tensor& theta = *params[i];
    const Tensor& g = *grads[i];
    if (!g.all_finite()) {
      throw TrainingError("adam_step: non-finite gradient for parameter '" + names[i] + "'");
    }
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    const std::size_t n = theta.size();
#pragma omp parallel for schedule(static) if (n > 16384)
    for (long long jr = 0; jr < static_cast<long long>(n); ++jr) {
      const std::size_t j = static_cast<std::size_t>(jr);
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      theta[j] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

}  // namespace tcnseg
