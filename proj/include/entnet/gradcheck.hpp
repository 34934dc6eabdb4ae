#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "entnet/model.hpp"

namespace entnet {

struct GradCheckOptions {
  /// Central-difference step.
  double step = 1e-4;
  /// Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-8;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Compares tape gradients of the sample loss against central finite
/// differences of the forward pass, for every scalar of every non-frozen
/// parameter. Parameter values are restored afterwards.
GradCheckResult gradient_check(Model& model, const EncodedSample& sample,
                               const GradCheckOptions& options = {});

struct RandomCheckSpec {
  std::size_t dim = 4;
  std::size_t slots = 2;
  std::size_t steps = 4;
  Variant variant = Variant::kGeneral;
  Activation activation = Activation::kPrelu;
  std::uint64_t seed = 1;
};

/// Builds a small random model and story (randomized masks and PReLU slopes
/// so both activation branches are exercised) and checks it.
GradCheckResult random_gradient_check(const RandomCheckSpec& spec,
                                      const GradCheckOptions& options = {});

}  // namespace entnet
