#pragma once

// Test-only central-difference oracle. It only ever evaluates forward
// values, so it stays independent of the adjoint code it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "entnet/tape.hpp"
#include "entnet/tensor.hpp"

namespace entnet::testing {

/// Builds a scalar from leaf variables bound to `inputs`.
using ScalarBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

inline double forward_value(const ScalarBuilder& build, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.constant(t));
  return tape.value(build(tape, leaves))[0];
}

/// Max relative error between tape adjoints and central differences, using
/// |a-n| / max(|a|, |n|, 1e-8).
inline double max_gradient_error(const ScalarBuilder& build, std::vector<Tensor> inputs,
                                 double step = 1e-5) {
  std::vector<Parameter> params;
  params.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) params.emplace_back("in" + std::to_string(i), inputs[i]);
  {
    Tape tape;
    std::vector<Var> leaves;
    for (auto& p : params) leaves.push_back(tape.param(p));
    tape.backward(build(tape, leaves));
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k][i];
      inputs[k][i] = saved + step;
      const double up = forward_value(build, inputs);
      inputs[k][i] = saved - step;
      const double down = forward_value(build, inputs);
      inputs[k][i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = params[k].grad[i];
      const double err = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = u(rng);
  return t;
}

}  // namespace entnet::testing
