#pragma once

#include <cstddef>
#include <span>

#include "entnet/memory.hpp"
#include "entnet/tape.hpp"
#include "entnet/tensor.hpp"

namespace entnet {

/// Decoder R (answers x dim), read projection H (dim x dim) and the output
/// PReLU slopes (empty for identity).
struct OutputWeights {
  Tensor R;
  Tensor H;
  Tensor slopes;
  Activation activation = Activation::kPrelu;
};

struct OutputVars {
  Var R;
  Var H;
  Var slopes;
  Activation activation = Activation::kPrelu;
};

/// p_j = softmax_j(<q, h_j>).
Var attention_weights(Tape& tape, Var query, Var slots);
/// y = R phi(q + H sum_j p_j h_j).
Var respond(Tape& tape, Var query, Var slots, const OutputVars& weights);
/// phi(x) for the output activation.
Var output_activation(Tape& tape, Var x, const OutputVars& weights);

Tensor attention_weights(const Tensor& query, const MemoryState& state);
Tensor respond(const Tensor& query, const MemoryState& state, const OutputWeights& weights);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// Direct prediction for tied-key memories: slot j stands for candidate j,
/// so the predicted candidate is argmax_j p_j. Throws UntiedKeys otherwise.
std::size_t predict_from_attention(std::span<const double> attention, const MemoryConfig& config);

}  // namespace entnet
