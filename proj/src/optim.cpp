#include "entnet/optim.hpp"

#include <cmath>

namespace entnet {

double global_grad_norm(const ParameterSet& params) {
  double total = 0.0;
  for (const auto& p : params) {
    if (p->frozen) continue;
    for (double g : p->grad.values()) total += g * g;
  }
  return std::sqrt(total);
}

double clip_global_norm(ParameterSet& params, double threshold) {
  const double norm = global_grad_norm(params);
  if (norm > threshold) {
    const double factor = threshold / norm;
    for (auto& p : params) {
      if (p->frozen) continue;
      for (double& g : p->grad.values()) g *= factor;
    }
  }
  return norm;
}

void Adam::step(ParameterSet& params, double lr) {
  ++steps_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (auto& p : params) {
    if (p->frozen) continue;
    auto theta = p->value.values();
    auto g = p->grad.values();
    auto m = p->first_moment.values();
    auto v = p->second_moment.values();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

void sgd_step(ParameterSet& params, double lr) {
  for (auto& p : params) {
    if (p->frozen) continue;
    auto theta = p->value.values();
    auto g = p->grad.values();
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * g[i];
  }
}

}  // namespace entnet
