#pragma once

#include <cstdint>

#include "entnet/parameter.hpp"

namespace entnet {

inline constexpr double kClipThreshold = 40.0;

/// Global L2 norm over the gradients of all non-frozen parameters.
double global_grad_norm(const ParameterSet& params);

/// Rescales every gradient by threshold/g when the global norm g exceeds
/// the threshold. Returns the norm measured before clipping.
double clip_global_norm(ParameterSet& params, double threshold = kClipThreshold);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected ADAM. Moments live on the Parameters; the step counter
/// lives here.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void step(ParameterSet& params, double lr);

  std::uint64_t steps() const noexcept { return steps_; }
  void set_steps(std::uint64_t steps) noexcept { steps_ = steps; }
  const AdamOptions& options() const noexcept { return options_; }

 private:
  AdamOptions options_;
  std::uint64_t steps_ = 0;
};

/// theta <- theta - lr * grad on every non-frozen parameter.
void sgd_step(ParameterSet& params, double lr);

}  // namespace entnet
